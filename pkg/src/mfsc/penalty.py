"""Concave penalties applied to squared distances.

Two smoothing families approximate the counting function ``|s|_0``:

* ``log``:  phi(s) = 1 - log(|s| + eps) / log(eps),  eps in (0, 1)
* ``frac``: phi(s) = |s| / (|s| + eps) + eps * |s|,  eps > 0

The solver works with the inner penalty ``psi`` of each family, which is
concave on ``[0, inf)`` with ``psi(0) = 0`` and a Lipschitz right derivative:

* ``log``:    psi(s) = log(s + eps) - log(eps)
* ``frac``:   psi(s) = s / (s + eps) + eps * s
* ``linear``: psi(s) = s / m  (turns the solver into averaged projections)

For ``log`` the sum of ``phi`` equals ``-1/log(eps)`` times the sum of
``psi``, so both objectives share minimisers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from mfsc import _kernels


class PenaltyKind(str, Enum):
    LOG = "log"
    FRAC = "frac"
    LINEAR = "linear"


@dataclass(frozen=True)
class PenaltyFamily:
    kind: PenaltyKind
    eps: float = 0.0
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        if self.kind is PenaltyKind.LOG and not 0.0 < self.eps < 1.0:
            raise ValueError(f"log penalty needs eps in (0, 1), got {self.eps}")
        if self.kind is PenaltyKind.FRAC and not self.eps > 0.0:
            raise ValueError(f"frac penalty needs eps > 0, got {self.eps}")
        if self.kind is PenaltyKind.LINEAR and not (isinstance(self.m, (int, np.integer)) and self.m >= 1):
            raise ValueError(f"linear penalty needs a positive integer m, got {self.m}")

    @classmethod
    def log(cls, eps: float) -> "PenaltyFamily":
        return cls(PenaltyKind.LOG, eps=float(eps))

    @classmethod
    def frac(cls, eps: float) -> "PenaltyFamily":
        return cls(PenaltyKind.FRAC, eps=float(eps))

    @classmethod
    def linear(cls, m: int) -> "PenaltyFamily":
        return cls(PenaltyKind.LINEAR, m=int(m))

    # vectorised forms used by the solver; inputs are assumed nonnegative
    def value_sum(self, sq: np.ndarray) -> float:
        if self.kind is PenaltyKind.LOG:
            return _kernels.log_penalty_sum(sq, self.eps)
        if self.kind is PenaltyKind.FRAC:
            return _kernels.frac_penalty_sum(sq, self.eps)
        return float(np.sum(sq)) / self.m

    def derivative(self, sq: np.ndarray) -> np.ndarray:
        if self.kind is PenaltyKind.LOG:
            return 1.0 / (sq + self.eps)
        if self.kind is PenaltyKind.FRAC:
            t = sq + self.eps
            return self.eps / (t * t) + self.eps
        return np.full(np.shape(sq), 1.0 / self.m)


def _check_nonneg(s: float) -> float:
    s = float(s)
    if s < 0.0:
        raise ValueError(f"penalty argument must be nonnegative, got {s}")
    return s


def psi(F: PenaltyFamily, s: float) -> float:
    s = _check_nonneg(s)
    if F.kind is PenaltyKind.LOG:
        # log1p(s/eps) == log(s + eps) - log(eps) without the cancellation
        return math.log1p(s / F.eps)
    if F.kind is PenaltyKind.FRAC:
        return s / (s + F.eps) + F.eps * s
    return s / F.m


def psi_prime(F: PenaltyFamily, s: float) -> float:
    """Right derivative of ``psi`` at ``s``; closed form, also at ``s = 0``."""
    s = _check_nonneg(s)
    if F.kind is PenaltyKind.LOG:
        return 1.0 / (s + F.eps)
    if F.kind is PenaltyKind.FRAC:
        t = s + F.eps
        return F.eps / (t * t) + F.eps
    return 1.0 / F.m


def psi_prime_lipschitz(F: PenaltyFamily) -> float:
    """A Lipschitz constant of ``psi_prime`` on ``[0, inf)``.

    This is ``sup |psi''|``: ``1/eps**2`` for log, ``2/eps**2`` for frac
    (attained at ``s = 0``) and ``0`` for linear.
    """
    if F.kind is PenaltyKind.LOG:
        return 1.0 / F.eps**2
    if F.kind is PenaltyKind.FRAC:
        return 2.0 / F.eps**2
    return 0.0


def phi(F: PenaltyFamily, s: float) -> float:
    """The outer surrogate of ``|s|_0``; not defined for the linear family."""
    if F.kind is PenaltyKind.LINEAR:
        raise ValueError("the linear family has no outer l0 surrogate")
    a = abs(float(s))
    if F.kind is PenaltyKind.LOG:
        return 1.0 - math.log(a + F.eps) / math.log(F.eps)
    return a / (a + F.eps) + F.eps * a


def from_name(name: str, eps: float | None = None, m: int | None = None) -> PenaltyFamily:
    kind = PenaltyKind(name)
    if kind is PenaltyKind.LINEAR:
        if m is None:
            raise ValueError("linear penalty needs m")
        return PenaltyFamily.linear(m)
    if eps is None:
        raise ValueError(f"{name} penalty needs eps")
    return PenaltyFamily(kind, eps=float(eps))
