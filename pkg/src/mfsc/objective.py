"""The penalised objective ``Psi(x) = sum_i psi(d_i(x)^2)`` and its subgradient."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mfsc.penalty import PenaltyFamily
from mfsc.sets import (
    DimensionError,
    ProjectionPass,
    SetCollection,
    SetOracle,
    as_collection,
)


class Problem:
    """A constraint set ``C`` and an ordered collection ``D_1, ..., D_m``."""

    def __init__(self, C: SetOracle, D: SetCollection | Sequence[SetOracle]):
        D = as_collection(D)
        if C.dim != D.dim:
            raise DimensionError(f"C has dimension {C.dim} but the D_i have dimension {D.dim}")
        self.C = C
        self.D = D
        self.n = C.dim
        self.m = len(D)

    def __repr__(self):
        return f"Problem(C={type(self.C).__name__}, D={type(self.D).__name__}, m={self.m}, n={self.n})"


def default_tau(n: int) -> float:
    """Default distance threshold for counting a set as satisfied."""
    return 1e-8 * math.sqrt(n)


@dataclass
class Evaluation:
    """Objective value at ``x`` together with the projections it used."""

    x: np.ndarray
    value: float
    sq_dists: np.ndarray
    dpsi: np.ndarray
    proj_pass: ProjectionPass = field(repr=False)

    @property
    def projections(self) -> np.ndarray:
        return self.proj_pass.projections

    def gradient(self) -> np.ndarray:
        return 2.0 * self.proj_pass.offset_sum(self.dpsi)


def _point(P: Problem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (P.n,):
        raise DimensionError(f"expected a vector of length {P.n}, got shape {x.shape}")
    return x


def eval_psi_sum(P: Problem, F: PenaltyFamily, x) -> Evaluation:
    x = _point(P, x)
    pp = P.D.project_all(x)
    sq = pp.sq_dists
    return Evaluation(x, F.value_sum(sq), sq, F.derivative(sq), pp)


def subgradient(P: Problem, F: PenaltyFamily, x) -> tuple[np.ndarray, Evaluation]:
    """``g = 2 sum_i psi'(d_i^2) (x - xi_i)`` with the deterministic projections ``xi_i``.

    For convex ``D_i`` this is the gradient of ``Psi``.
    """
    ev = eval_psi_sum(P, F, x)
    return ev.gradient(), ev


def eval_phi0(P: Problem, x, tau: float | None = None) -> int:
    """Number of sets whose distance from ``x`` exceeds ``tau``."""
    x = _point(P, x)
    tau = default_tau(P.n) if tau is None else float(tau)
    sq = P.D.project_all(x).sq_dists
    return int(np.count_nonzero(np.sqrt(sq) > tau))


def extract_subsystem(P: Problem, x, tau: float | None = None) -> list[int]:
    """Indices (0-based) of the sets within distance ``tau`` of ``x``."""
    x = _point(P, x)
    tau = default_tau(P.n) if tau is None else float(tau)
    sq = P.D.project_all(x).sq_dists
    return np.flatnonzero(np.sqrt(sq) <= tau).tolist()
