"""Subgradient projection with a nonmonotone linesearch.

Each iteration takes the subgradient ``g`` of ``Psi`` built from one
projection pass at ``x``, projects ``x - alpha * g`` onto ``C`` and accepts
the trial point ``u`` once

    Psi(u) - max(Psi over the last M+1 iterates) <= -(sigma/2) ||u - x||^2,

shrinking ``alpha <- eta * alpha`` otherwise. The test carries a slack of
``accept_tol * |reference|`` so that rounding in ``Psi`` cannot stall the
search once steps shrink below machine precision; ``accept_tol=0`` gives the
exact rule. Initial stepsizes follow a
clamped Barzilai-Borwein rule.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from mfsc.objective import Evaluation, Problem, eval_psi_sum
from mfsc.penalty import PenaltyFamily
from mfsc.sets import FullSpace, SetOracle, as_collection

log = logging.getLogger(__name__)

ALPHA_UNDERFLOW = 1e-16


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    LINESEARCH_UNDERFLOW = "LinesearchUnderflow"


@dataclass(frozen=True)
class SpgConfig:
    alpha_min: float = 1e-10
    alpha_max: float = 1e10
    eta: float = 0.5
    sigma: float = 1e-4
    M: int = 9
    max_iter: int = 50_000
    stop_tol: float = 1e-5
    bb_enabled: bool = True
    alpha_init: float = 1.0
    bb_floor: float = 1e-10
    bb_cap: float = 1e10
    bb_curvature_threshold: float = 1e-12
    accept_tol: float = 1e-12
    keep_iterates: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha_min < self.alpha_max:
            raise ValueError("need 0 < alpha_min < alpha_max")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        if self.M < 0:
            raise ValueError("M must be a nonnegative integer")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if not self.stop_tol > 0.0:
            raise ValueError("stop_tol must be positive")
        if not 0.0 < self.bb_floor <= self.bb_cap:
            raise ValueError("need 0 < bb_floor <= bb_cap")
        if self.accept_tol < 0.0:
            raise ValueError("accept_tol must be nonnegative")


@dataclass
class SolveReport:
    x_final: np.ndarray
    iterations: int = 0
    psi_trace: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    alpha_trace: list = field(default_factory=list)
    alpha0_trace: list = field(default_factory=list)
    backtrack_counts: list = field(default_factory=list)
    # max_i and sum_i of psi'(d_i^2(x^t)) at every iterate, for certificate checks
    dpsi_max_trace: list = field(default_factory=list)
    dpsi_sum_trace: list = field(default_factory=list)
    stationarity_residual: float = math.nan
    status: Status = Status.MAX_ITER
    iterates: list | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x_final"] = np.asarray(self.x_final).tolist()
        d["status"] = self.status.value
        if self.iterates is not None:
            d["iterates"] = [np.asarray(x).tolist() for x in self.iterates]
        return d


class LinesearchUnderflow(RuntimeError):
    """The backtracking stepsize dropped below ``1e-16``.

    Theory rules this out, so it points at a conditioning or implementation
    problem. ``report`` holds the partial run when raised from the solver.
    """

    def __init__(self, msg, alpha=None, report=None):
        super().__init__(msg)
        self.alpha = alpha
        self.report = report


def trial_point(P: Problem, x, g, alpha: float) -> np.ndarray:
    """Minimiser of ``<g, u - x> + ||u - x||^2 / (2 alpha)`` over ``C``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    x = np.asarray(x, dtype=float)
    return P.C.project(x - alpha * np.asarray(g, dtype=float))


def nonmonotone_reference(history: Sequence[float]) -> float:
    if len(history) == 0:
        raise ValueError("empty objective history")
    return max(history)


def _search(P, F, x, g, psi_ref, alpha0, config):
    alpha = alpha0
    backtracks = 0
    slack = config.accept_tol * abs(psi_ref)
    while True:
        u = trial_point(P, x, g, alpha)
        ev = eval_psi_sum(P, F, u)
        d = u - x
        if ev.value - psi_ref <= -0.5 * config.sigma * float(d @ d) + slack:
            return u, alpha, backtracks, ev
        alpha *= config.eta
        backtracks += 1
        if alpha < ALPHA_UNDERFLOW:
            raise LinesearchUnderflow(
                f"linesearch stepsize fell to {alpha:.3e} after {backtracks} backtracks", alpha=alpha
            )


def linesearch(P: Problem, F: PenaltyFamily, x, g, psi_ref: float, alpha0: float, config: SpgConfig):
    """Backtrack from ``alpha0`` until the nonmonotone test passes.

    Returns ``(u, alpha, backtracks)``.
    """
    u, alpha, backtracks, _ = _search(P, F, np.asarray(x, float), np.asarray(g, float), psi_ref, alpha0, config)
    return u, alpha, backtracks


def bb_initial_stepsize(x_t, x_prev, g_t, g_prev, t: int, config: SpgConfig, alpha0_prev: float | None = None) -> float:
    """Clamped Barzilai-Borwein initial stepsize.

    ``alpha0_prev`` is the previous *initial* stepsize and is doubled when
    the curvature ``<dx, dg>`` is not safely positive.
    """
    if t == 0:
        return float(np.clip(config.alpha_init, config.bb_floor, config.bb_cap))
    dx = np.asarray(x_t, float) - np.asarray(x_prev, float)
    dg = np.asarray(g_t, float) - np.asarray(g_prev, float)
    curv = float(dx @ dg)
    if curv > config.bb_curvature_threshold:
        raw = float(dx @ dx) / curv
    else:
        if alpha0_prev is None:
            raise ValueError("alpha0_prev is required when the curvature test fails")
        raw = 2.0 * alpha0_prev
    return float(min(max(raw, config.bb_floor), config.bb_cap))


def stationarity_residual(P: Problem, F: PenaltyFamily, x) -> float:
    """``||x - P_C(x - g(x))||`` with unit probe stepsize."""
    x = np.asarray(x, dtype=float)
    ev = eval_psi_sum(P, F, x)
    return _residual(P, x, ev)


def _residual(P, x, ev: Evaluation):
    return float(np.linalg.norm(x - P.C.project(x - ev.gradient())))


def _record(report, ev):
    report.psi_trace.append(ev.value)
    report.dpsi_max_trace.append(float(ev.dpsi.max()))
    report.dpsi_sum_trace.append(float(ev.dpsi.sum()))


def spg_solve(P: Problem, F: PenaltyFamily, x0, config: SpgConfig = SpgConfig()) -> SolveReport:
    """Run the subgradient projection method from ``x0`` (which must lie in ``C``).

    Stops once ``||x^t - x^{t-1}|| <= stop_tol * max(1, ||x^t||)`` or after
    ``max_iter`` accepted steps.
    """
    x = np.array(x0, dtype=float)
    if x.shape != (P.n,):
        raise ValueError(f"x0 must have length {P.n}")
    if not P.C.contains(x):
        raise ValueError("x0 must lie in C; project it first")

    report = SolveReport(x_final=x, iterates=[x.copy()] if config.keep_iterates else None)
    history = deque(maxlen=config.M + 1)
    ev = eval_psi_sum(P, F, x)
    g = ev.gradient()
    _record(report, ev)
    history.append(ev.value)

    alpha0 = None
    x_prev = g_prev = None
    for t in range(config.max_iter):
        if config.bb_enabled:
            alpha0 = bb_initial_stepsize(x, x_prev, g, g_prev, t, config, alpha0)
        else:
            alpha0 = config.alpha_init
        alpha0 = min(max(alpha0, config.alpha_min), config.alpha_max)
        try:
            u, alpha, backtracks, ev = _search(P, F, x, g, max(history), alpha0, config)
        except LinesearchUnderflow as exc:
            report.x_final = x
            report.status = Status.LINESEARCH_UNDERFLOW
            exc.report = report
            raise

        step = float(np.linalg.norm(u - x))
        x_prev, g_prev = x, g
        x, g = u, ev.gradient()
        history.append(ev.value)
        _record(report, ev)
        report.step_norms.append(step)
        report.alpha_trace.append(alpha)
        report.alpha0_trace.append(alpha0)
        report.backtrack_counts.append(backtracks)
        if report.iterates is not None:
            report.iterates.append(x.copy())
        report.iterations = t + 1
        if step <= config.stop_tol * max(1.0, float(np.linalg.norm(x))):
            report.status = Status.CONVERGED
            break
    else:
        report.status = Status.MAX_ITER

    report.x_final = x
    report.stationarity_residual = _residual(P, x, ev)
    log.debug("spg: %s after %d iterations, Psi=%.6g", report.status.value, report.iterations, ev.value)
    return report


def averaged_projection_run(D: Sequence[SetOracle], x0, max_iter: int = 1000, stop_tol: float = 1e-10) -> SolveReport:
    """Iterate ``x <- mean_i P_{D_i}(x)``.

    This is the special case of :func:`spg_solve` with ``C`` the whole space,
    ``psi(s) = s/m``, fixed initial stepsize 1/2 and ``sigma`` in ``(0, 2]``.
    ``psi_trace`` records ``sum_i d_i(x)^2 / m``.
    """
    coll = as_collection(D)
    m = len(coll)
    x = np.array(x0, dtype=float)
    if x.shape != (coll.dim,):
        raise ValueError(f"x0 must have length {coll.dim}")
    report = SolveReport(x_final=x, iterates=[x.copy()])
    pp = coll.project_all(x)
    report.psi_trace.append(float(pp.sq_dists.sum()) / m)
    for t in range(max_iter):
        u = pp.projections.mean(axis=0)
        step = float(np.linalg.norm(u - x))
        x = u
        pp = coll.project_all(x)
        report.psi_trace.append(float(pp.sq_dists.sum()) / m)
        report.step_norms.append(step)
        report.alpha_trace.append(0.5)
        report.alpha0_trace.append(0.5)
        report.backtrack_counts.append(0)
        report.dpsi_max_trace.append(1.0 / m)
        report.dpsi_sum_trace.append(1.0)
        report.iterates.append(x.copy())
        report.iterations = t + 1
        if step <= stop_tol * max(1.0, float(np.linalg.norm(x))):
            report.status = Status.CONVERGED
            break
    else:
        report.status = Status.MAX_ITER
    report.x_final = x
    u = pp.projections.mean(axis=0)
    report.stationarity_residual = float(np.linalg.norm(x - u)) * 2.0
    return report


def averaged_projection_config(max_iter: int, stop_tol: float = 1e-10, sigma: float = 1.0, M: int = 0) -> SpgConfig:
    """SPG settings under which it coincides with averaged projections."""
    return SpgConfig(
        sigma=sigma,
        M=M,
        max_iter=max_iter,
        stop_tol=stop_tol,
        bb_enabled=False,
        alpha_init=0.5,
        keep_iterates=True,
    )


def averaged_projection_problem(D: Sequence[SetOracle]) -> tuple[Problem, PenaltyFamily]:
    coll = as_collection(D)
    return Problem(FullSpace(coll.dim), coll), PenaltyFamily.linear(len(coll))
