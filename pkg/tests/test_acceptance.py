"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``. Criterion 7 is
the desk-scale experiment and takes about half a minute on one core.
"""
import csv
import json
import time

import numpy as np
import pytest

from mfsc.bench import GridRow, InstanceSpec, generate, random_start, run_experiment
from mfsc.cli import main
from mfsc.eas import EasConfig, eas_run
from mfsc.objective import Problem, eval_psi_sum, subgradient
from mfsc.penalty import PenaltyFamily, phi
from mfsc.sets import (
    FinitePointSet,
    FullSpace,
    Halfspace,
    HalfspaceSystem,
    SparseBox,
    UnionSet,
    brute_force_project,
    project,
)
from mfsc.spg import averaged_projection_config, averaged_projection_problem, spg_solve, SpgConfig

SEED = 7


@pytest.fixture
def verdict(capsys):
    """Print the criterion's PASS/FAIL line, then assert it."""

    def _verdict(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return _verdict


def test_criterion_01_projection_oracles(verdict):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        box = SparseBox(n, 0.1 + 3 * rng.random(), int(rng.integers(1, n + 1)))
        x = rng.standard_normal(n) * 2
        worst = max(worst, abs(np.linalg.norm(x - project(box, x)) - np.linalg.norm(x - brute_force_project(box, x))))
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        members = [Halfspace(rng.standard_normal(n), rng.standard_normal()) for _ in range(int(rng.integers(1, 4)))]
        members.append(FinitePointSet(rng.standard_normal((3, n))))
        U = UnionSet(members)
        x = rng.standard_normal(n) * 2
        worst = max(worst, abs(np.linalg.norm(x - project(U, x)) - np.linalg.norm(x - brute_force_project(U, x))))
    secs = time.perf_counter() - t0
    verdict(1, worst <= 1e-12 and secs < 10, f"max distance gap {worst:.2e} (<= 1e-12), {secs:.1f} s (< 10 s)")


def test_criterion_02_gradient(verdict):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        A = rng.standard_normal((50, 20))
        P = Problem(FullSpace(20), HalfspaceSystem(A, rng.standard_normal(50)))
        F = PenaltyFamily.log(0.5)
        for _ in range(50):
            x = rng.standard_normal(20) * 2
            g, _ = subgradient(P, F, x)
            fd = np.empty(20)
            for j in range(20):
                e = np.zeros(20)
                e[j] = h
                fd[j] = (eval_psi_sum(P, F, x + e).value - eval_psi_sum(P, F, x - e).value) / (2 * h)
            worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-300))
    secs = time.perf_counter() - t0
    verdict(2, worst <= 1e-5 and secs < 30, f"max relative error {worst:.2e} (<= 1e-5), {secs:.1f} s (< 30 s)")


def _nonconvex_collection(rng, n=10, m=5):
    D = []
    for i in range(m):
        if i % 2:
            D.append(FinitePointSet(rng.standard_normal((4, n)) * 2))
        else:
            D.append(UnionSet([Halfspace(rng.standard_normal(n), rng.standard_normal()) for _ in range(2)]
                              + [FinitePointSet(rng.standard_normal((2, n)))]))
    return D


def test_criterion_03_averaged_projection(verdict):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    steps = 0
    for _ in range(50):
        D = _nonconvex_collection(rng)
        x = rng.standard_normal(10) * 3
        P, F = averaged_projection_problem(D)
        rep = spg_solve(P, F, x, averaged_projection_config(max_iter=50, stop_tol=1e-300))
        # reference iteration written out directly: mean of the projections
        for xt in rep.iterates[1:]:
            x = np.mean([project(S, x) for S in D], axis=0)
            worst = max(worst, float(np.max(np.abs(x - xt))))
            steps += 1
    verdict(3, worst <= 1e-12 and steps == 2500, f"{steps} iterates compared, max coordinate gap {worst:.2e}")


def _solve_runs(M):
    rng = np.random.default_rng(SEED + M)
    runs = []
    for trial in range(100):
        n = int(rng.integers(4, 12))
        m = int(rng.integers(10, 40))
        C = FullSpace(n) if trial % 2 else SparseBox(n, 5.0, max(1, n // 3))
        P = Problem(C, HalfspaceSystem(rng.standard_normal((m, n)), rng.standard_normal(m) - 1.0))
        eps = 0.9 * 0.1 ** int(rng.integers(0, 5))
        F = PenaltyFamily.log(eps) if trial % 3 else PenaltyFamily.frac(eps)
        cfg = SpgConfig(M=M, max_iter=500, stop_tol=1e-9)
        runs.append((P, cfg, spg_solve(P, F, P.C.project(rng.standard_normal(n) * 3), cfg)))
    return runs


@pytest.fixture(scope="module")
def descent_runs():
    return {M: _solve_runs(M) for M in (0, 9)}


def test_criterion_04_descent(verdict, descent_runs):
    bad = {0: 0, 9: 0}
    checked = 0
    for M, runs in descent_runs.items():
        for P, cfg, rep in runs:
            psi = rep.psi_trace
            for t in range(rep.iterations):
                ref = max(psi[max(0, t - M):t + 1])
                if psi[t + 1] + 0.5 * cfg.sigma * rep.step_norms[t] ** 2 > ref + 1e-12 * (1 + ref):
                    bad[M] += 1
                checked += 1
    verdict(4, bad == {0: 0, 9: 0}, f"{checked} steps checked, violations M=0: {bad[0]}, M=9: {bad[9]}")


def test_criterion_05_stepsize_bound(verdict, descent_runs):
    bad = 0
    checked = 0
    for runs in descent_runs.values():
        for P, cfg, rep in runs:
            M2 = max(rep.dpsi_max_trace)
            bound = min(cfg.alpha_min, cfg.eta / (2 * P.m * M2 + cfg.sigma))
            bad += sum(a < bound for a in rep.alpha_trace)
            checked += len(rep.alpha_trace)
    verdict(5, bad == 0, f"{checked} stepsizes checked, {bad} below the bound")


def test_criterion_06_descent_certificate(verdict):
    rng = np.random.default_rng(SEED)
    bad = 0
    checked = 0
    for trial in range(40):
        n, m = 8, 25
        C = FullSpace(n) if trial < 20 else SparseBox(n, 5.0, 3)
        P = Problem(C, HalfspaceSystem(rng.standard_normal((m, n)), rng.standard_normal(m) - 1.0))
        F = PenaltyFamily.log(0.9 * 0.1 ** (trial % 4))
        rep = spg_solve(P, F, C.project(rng.standard_normal(n) * 3), SpgConfig(max_iter=300))
        factor = 1.0 if C.is_convex else 2.0
        for t in range(rep.iterations):
            beta = factor * rep.alpha_trace[t]
            rhs = (-1.0 / beta + rep.dpsi_sum_trace[t]) * rep.step_norms[t] ** 2
            if rep.psi_trace[t + 1] - rep.psi_trace[t] > rhs + 1e-12 * (1 + rep.psi_trace[t]):
                bad += 1
            checked += 1
    verdict(6, bad == 0, f"{checked} accepted steps over 40 runs, {bad} violations")


@pytest.mark.slow
def test_criterion_07_table_reproduction(verdict):
    t0 = time.perf_counter()
    pbars = (0.5, 0.6, 0.7)
    rows = [GridRow(kind, 300, p) for kind in ("halfspaces", "union") for p in pbars]
    table, _ = run_experiment(rows, instances=5, starts=5, seed=0)
    secs = time.perf_counter() - t0
    failures = []
    lines = []
    for row in table:
        star, zero = row["epsfeas_star"], row["epsfeas0"]
        if row["kind"] == "halfspaces":
            ok = star >= row["pbar"] - 0.05 and star >= zero + 0.10
        else:
            ok = star >= 0.75
        lines.append(f"{row['kind']} pbar={row['pbar']}: eps-feas0={zero:.3f} eps-feas*={star:.3f}")
        if not ok:
            failures.append(lines[-1])
    ok = not failures and secs < 600
    verdict(7, ok, f"{secs:.0f} s; " + "; ".join(failures or lines))


def test_criterion_08_feasible_exactness(verdict):
    problems = []
    worst_psi = 0.0
    worst_ratio = 0.0
    for seed in range(3):
        inst = generate(InstanceSpec(m=300, pbar=1.0, seed=seed, violate=False))
        P = inst.problem
        for j in range(5):
            rep = eas_run(P, EasConfig(), random_start(inst, j))
            if rep.phi0 != 0 or rep.subsystem != list(range(P.m)):
                problems.append(f"seed {seed} start {j}: phi0={rep.phi0}")
        spg = spg_solve(P, PenaltyFamily.log(0.9), random_start(inst, 0),
                        SpgConfig(M=0, stop_tol=1e-14, max_iter=20000))
        psi = np.array(spg.psi_trace)
        worst_psi = max(worst_psi, float(psi.min()))
        # consecutive pairs with both values positive; Psi may hit exactly 0
        both = (psi[:-1] > 0) & (psi[1:] > 0)
        ratios = psi[1:][both] / psi[:-1][both]
        if ratios.size:
            worst_ratio = max(worst_ratio, float(np.max(ratios[-20:])))
    ok = not problems and worst_psi <= 1e-12 and worst_ratio < 0.999
    verdict(8, ok, f"{len(problems)} starts off the full subsystem; min Psi {worst_psi:.1e} (<= 1e-12); "
                   f"tail ratio {worst_ratio:.4f} (< 0.999)")


def test_criterion_09_pointwise_surrogate(verdict):
    details = []
    ok = True
    for name, F in (("log", PenaltyFamily.log(1e-6)), ("frac", PenaltyFamily.frac(1e-6))):
        errs = {s: abs(phi(F, s) - 1.0) for s in (0.01, 0.1, 1.0, 10.0)}
        fam_ok = phi(F, 0.0) == 0.0 and all(e < 0.1 for e in errs.values())
        ok = ok and fam_ok
        details.append(f"{name}: max |phi-1| = {max(errs.values()):.3f}")
    verdict(9, ok, "; ".join(details) + " (need < 0.1)")


def test_criterion_10_determinism(verdict, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"kind": ["halfspaces", "union"], "m": [60], "pbar": [0.5, 0.7],
                                "instances": 2, "seed": 123}))
    outputs = []
    for run in range(2):
        out, detail = tmp_path / f"res{run}.csv", tmp_path / f"runs{run}.csv"
        main(["bench", "--grid", str(grid), "--starts", "2", "--out", str(out), "--detail", str(detail)])
        outputs.append([_without_timing(out), _without_timing(detail)])
    ok = outputs[0] == outputs[1] and len(outputs[0][0]) == 4
    verdict(10, ok, "results and per-run CSV identical apart from cpu_s" if ok else "CSV output differs")


def _without_timing(path):
    with open(path, newline="") as fh:
        return [{k: v for k, v in row.items() if k != "cpu_s"} for row in csv.DictReader(fh)]
