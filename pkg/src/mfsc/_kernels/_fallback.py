"""Pure numpy implementations of the hot kernels.

Each function here has a compiled twin in ``_core.pyx`` with the same
signature and the same tie-breaking rules.
"""
import numpy as np


def halfspace_pass(A, b, inv_norm2, tol, x):
    """Squared distances to ``<a_i, x> <= b_i`` and projection coefficients.

    Returns ``(sq, coef)`` with ``x - P_i(x) = coef[i] * A[i]``. Violations
    not exceeding ``tol[i]`` count as membership.
    """
    v = A @ x - b
    viol = np.where(v > tol, v, 0.0)
    coef = viol * inv_norm2
    return viol * coef, coef


def union2_pass(A, b, inv_a, tol_a, P, q, inv_p, tol_p, x):
    sq1, c1 = halfspace_pass(A, b, inv_a, tol_a, x)
    sq2, c2 = halfspace_pass(P, q, inv_p, tol_p, x)
    pick = sq2 < sq1
    return np.where(pick, sq2, sq1), np.where(pick, c2, c1), pick.astype(np.int8)


def accumulate_rows(A, w):
    return w @ A


def accumulate_rows_choice(A, P, choice, w):
    second = choice.astype(bool)
    return np.where(second, 0.0, w) @ A + np.where(second, w, 0.0) @ P


def sparse_box_project(x, r, s):
    keep = np.argsort(-np.abs(x), kind="stable")[:s]
    p = np.zeros_like(x)
    p[keep] = np.clip(x[keep], -r, r)
    return p


def log_penalty_sum(sq, eps):
    return float(np.sum(np.log1p(sq / eps)))


def frac_penalty_sum(sq, eps):
    return float(np.sum(sq / (sq + eps) + eps * sq))
