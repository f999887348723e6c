import numpy as np
import pytest

from mfsc import _kernels
from mfsc._kernels import _fallback

pytestmark = pytest.mark.skipif(not _kernels.compiled_available(), reason="compiled kernels not built")


@pytest.fixture
def core():
    return _kernels.backends()["compiled"]


def _system(rng, m, n):
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    inv = 1.0 / np.einsum("ij,ij->i", A, A)
    tol = 1e-12 * (1 + np.abs(b))
    return A, b, inv, tol


def test_halfspace_pass_agrees(core, rng):
    A, b, inv, tol = _system(rng, 200, 30)
    for _ in range(20):
        x = rng.standard_normal(30) * 3
        sq_c, coef_c = core.halfspace_pass(A, b, inv, tol, x)
        sq_p, coef_p = _fallback.halfspace_pass(A, b, inv, tol, x)
        np.testing.assert_allclose(sq_c, sq_p, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(coef_c, coef_p, rtol=1e-12, atol=1e-13)


def test_union2_pass_agrees(core, rng):
    A, b, ia, ta = _system(rng, 200, 30)
    P, q, ip, tp = _system(rng, 200, 30)
    for _ in range(20):
        x = rng.standard_normal(30) * 3
        out_c = core.union2_pass(A, b, ia, ta, P, q, ip, tp, x)
        out_p = _fallback.union2_pass(A, b, ia, ta, P, q, ip, tp, x)
        np.testing.assert_allclose(out_c[0], out_p[0], rtol=1e-12, atol=1e-13)
        np.testing.assert_array_equal(out_c[2], out_p[2])


def test_accumulate_agrees(core, rng):
    A = rng.standard_normal((50, 7))
    P = rng.standard_normal((50, 7))
    w = rng.standard_normal(50) * (rng.random(50) < 0.5)
    choice = (rng.random(50) < 0.3).astype(np.int8)
    np.testing.assert_allclose(core.accumulate_rows(A, w), _fallback.accumulate_rows(A, w), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(
        core.accumulate_rows_choice(A, P, choice, w),
        _fallback.accumulate_rows_choice(A, P, choice, w),
        rtol=1e-12,
        atol=1e-12,
    )


@pytest.mark.parametrize("n,s", [(1, 1), (5, 2), (10, 10), (60, 12), (200, 7)])
def test_sparse_box_agrees(core, rng, n, s):
    for _ in range(50):
        x = rng.standard_normal(n)
        # force magnitude ties
        x[rng.integers(0, n, size=n // 3)] = 0.75
        for r in (0.5, 10.0):
            np.testing.assert_array_equal(core.sparse_box_project(x, r, s), _fallback.sparse_box_project(x, r, s))


def test_penalty_sums_agree(core, rng):
    sq = rng.random(300) ** 3
    sq[::4] = 0.0
    for eps in (0.9, 1e-3, 1e-6):
        assert core.log_penalty_sum(sq, eps) == pytest.approx(_fallback.log_penalty_sum(sq, eps), rel=1e-13)
        assert core.frac_penalty_sum(sq, eps) == pytest.approx(_fallback.frac_penalty_sum(sq, eps), rel=1e-13)
