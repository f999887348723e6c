"""Continuation over the smoothing parameter with warm starts.

Stage ``k`` uses ``eps_k = eps0 * decay**(k-1)`` and runs the SPG solver,
started from the previous stage's output, with the relative step tolerance
``max(inner_tol0 * inner_tol_decay**(k-1), inner_tol_floor)``. Stages run
while ``eps_k > eps_stop``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from mfsc.objective import Problem, default_tau, eval_phi0, extract_subsystem
from mfsc.penalty import PenaltyFamily, PenaltyKind
from mfsc.spg import SolveReport, SpgConfig, spg_solve


@dataclass(frozen=True)
class EasConfig:
    eps0: float = 0.9
    decay: float = 0.1
    eps_stop: float = 1e-6
    inner_tol0: float = 1e-5
    inner_tol_decay: float = 1.0 / 3.0
    inner_tol_floor: float = 1e-7
    penalty_kind: PenaltyKind = PenaltyKind.LOG
    spg: SpgConfig = field(default_factory=SpgConfig)
    tau: float | None = None
    max_stages: int = 100

    def __post_init__(self):
        object.__setattr__(self, "penalty_kind", PenaltyKind(self.penalty_kind))
        if self.penalty_kind is PenaltyKind.LINEAR:
            raise ValueError("continuation needs a smoothing family (log or frac)")
        if not 0.0 < self.eps0 < 1.0:
            raise ValueError("eps0 must lie in (0, 1)")
        if not 0.0 < self.decay < 1.0:
            raise ValueError("decay must lie in (0, 1)")
        if not (self.eps_stop > 0 and self.inner_tol0 > 0 and self.inner_tol_floor > 0):
            raise ValueError("eps_stop and inner tolerances must be positive")
        if not 0.0 < self.inner_tol_decay <= 1.0:
            raise ValueError("inner_tol_decay must lie in (0, 1]")


@dataclass
class StageRecord:
    k: int
    eps: float
    x_start: np.ndarray
    report: SolveReport
    phi0: int
    metric: float | None
    seconds: float


@dataclass
class EasReport:
    stages: list
    x_init: np.ndarray
    x_final: np.ndarray
    subsystem: list
    phi0: int

    @property
    def total_iterations(self) -> int:
        return sum(st.report.iterations for st in self.stages)

    def to_dict(self) -> dict:
        return {
            "x_init": self.x_init.tolist(),
            "x_final": self.x_final.tolist(),
            "subsystem": self.subsystem,
            "phi0": self.phi0,
            "total_iterations": self.total_iterations,
            "stages": [
                {
                    "k": st.k,
                    "eps": st.eps,
                    "phi0": st.phi0,
                    "metric": st.metric,
                    "seconds": st.seconds,
                    "report": st.report.to_dict(),
                }
                for st in self.stages
            ],
        }


def eps_schedule(k: int, cfg: EasConfig = EasConfig()) -> float:
    if k < 1:
        raise ValueError("stage index k starts at 1")
    return cfg.eps0 * cfg.decay ** (k - 1)


def inner_tolerance(k: int, cfg: EasConfig = EasConfig()) -> float:
    if k < 1:
        raise ValueError("stage index k starts at 1")
    return max(cfg.inner_tol0 * cfg.inner_tol_decay ** (k - 1), cfg.inner_tol_floor)


def stage_count(cfg: EasConfig = EasConfig()) -> int:
    k = 0
    while k < cfg.max_stages and eps_schedule(k + 1, cfg) > cfg.eps_stop:
        k += 1
    return k


def eas_run(
    P: Problem,
    cfg: EasConfig = EasConfig(),
    x_init=None,
    metric: Callable[[np.ndarray], float] | None = None,
) -> EasReport:
    """Solve the smoothed problems for decreasing ``eps`` with warm starts.

    ``x_init`` is projected onto ``C`` first (default: the origin). If given,
    ``metric(x)`` is recorded after every stage, e.g. an eps-feasibility
    fraction.
    """
    x0 = np.zeros(P.n) if x_init is None else np.asarray(x_init, dtype=float)
    x = P.C.project(x0)
    tau = default_tau(P.n) if cfg.tau is None else cfg.tau
    stages = []
    for k in range(1, stage_count(cfg) + 1):
        eps = eps_schedule(k, cfg)
        F = PenaltyFamily(cfg.penalty_kind, eps=eps)
        spg_cfg = replace(cfg.spg, stop_tol=inner_tolerance(k, cfg))
        t0 = time.perf_counter()
        report = spg_solve(P, F, x, spg_cfg)
        elapsed = time.perf_counter() - t0
        stages.append(
            StageRecord(
                k=k,
                eps=eps,
                x_start=x,
                report=report,
                phi0=eval_phi0(P, report.x_final, tau),
                metric=None if metric is None else float(metric(report.x_final)),
                seconds=elapsed,
            )
        )
        x = report.x_final
    return EasReport(
        stages=stages,
        x_init=x0,
        x_final=x,
        subsystem=extract_subsystem(P, x, tau),
        phi0=eval_phi0(P, x, tau),
    )
