"""Random instances with a planted feasible subsystem, metrics and the experiment driver.

Randomness
----------
All draws use numpy's Philox4x64 counter-based generator. A generator for a
given purpose is keyed by ``SeedSequence([seed, stream, index])``:

* stream 0, index 0: everything in one instance (``A``, support and values
  of ``w``, noise ``eps``, then ``P`` and ``iota`` for the union kind);
* stream 1, index j: the j-th random start for that instance.

Gaussians come from numpy's ziggurat ``standard_normal``; uniforms on
``[0, 1)`` from ``random``. Instance ``i`` of an experiment row uses seed
``base_seed + i``.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from mfsc.eas import EasConfig, eas_run
from mfsc.objective import Problem
from mfsc.sets import HalfspaceSystem, SparseBox, UnionHalfspaceSystem

INSTANCE_VERSION = "mfs-instance/1"
STREAM_INSTANCE = 0
STREAM_START = 1

TABLE_COLUMNS = ["kind", "m", "pbar", "iter", "cpu_s", "feas0", "epsfeas0", "feas_star", "epsfeas_star"]
SEED_COLUMNS = ["seed", "instances", "starts"]
DETAIL_COLUMNS = [
    "kind", "m", "pbar", "seed", "instance", "start", "iter", "cpu_s",
    "feas0", "epsfeas0", "feas_star", "epsfeas_star", "phi0_star",
]
TIMING_COLUMNS = {"cpu_s"}


class InstanceKind(str, Enum):
    HALFSPACES = "halfspaces"
    UNION = "union"


@dataclass(frozen=True)
class InstanceSpec:
    m: int
    pbar: float
    kind: InstanceKind = InstanceKind.HALFSPACES
    seed: int = 0
    n: int | None = None
    s: int | None = None
    r: float = 1e8
    # generate the -50*eps offsets for i > ceil(pbar*m); off gives a feasible system
    violate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", InstanceKind(self.kind))
        if self.n is None:
            object.__setattr__(self, "n", max(1, self.m // 5))
        if self.s is None:
            object.__setattr__(self, "s", max(1, self.n // 5))
        if self.m < 1:
            raise ValueError("m must be positive")
        if not 1 <= self.s <= self.n:
            raise ValueError(f"need 1 <= s <= n, got s={self.s}, n={self.n}")
        if not 0.0 <= self.pbar <= 1.0:
            raise ValueError("pbar must lie in [0, 1]")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_planted(self) -> int:
        """``ceil(pbar * m)``, guarded against products like ``0.7 * 300 = 210.00000000000003``."""
        return min(self.m, math.ceil(round(self.pbar * self.m, 9)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


@dataclass
class GeneratedInstance:
    spec: InstanceSpec
    A: np.ndarray
    b: np.ndarray
    w: np.ndarray
    P: np.ndarray | None = None
    q: np.ndarray | None = None
    problem: Problem = field(init=False, repr=False)

    def __post_init__(self):
        sp = self.spec
        C = SparseBox(sp.n, sp.r, sp.s)
        if sp.kind is InstanceKind.HALFSPACES:
            D = HalfspaceSystem(self.A, self.b)
        else:
            D = UnionHalfspaceSystem(self.A, self.b, self.P, self.q)
        self.problem = Problem(C, D)

    @property
    def seed(self) -> int:
        return self.spec.seed

    def to_dict(self) -> dict:
        d = {
            "version": INSTANCE_VERSION,
            "spec": self.spec.to_dict(),
            "seed": self.spec.seed,
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "w": self.w.tolist(),
        }
        if self.P is not None:
            d["P"] = self.P.tolist()
            d["q"] = self.q.tolist()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratedInstance":
        if data.get("version") != INSTANCE_VERSION:
            raise ValueError(f"unsupported instance version {data.get('version')!r}")
        spec = InstanceSpec(**data["spec"])
        P = np.array(data["P"], dtype=float) if "P" in data else None
        q = np.array(data["q"], dtype=float) if "q" in data else None
        if spec.kind is InstanceKind.UNION and P is None:
            raise ValueError("union instance file lacks P and q")
        return cls(spec, np.array(data["A"], dtype=float), np.array(data["b"], dtype=float),
                   np.array(data["w"], dtype=float), P, q)


def rng_for(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), stream, index])))


def generate(spec: InstanceSpec) -> GeneratedInstance:
    rng = rng_for(spec.seed, STREAM_INSTANCE)
    m, n, s = spec.m, spec.n, spec.s
    A = rng.standard_normal((m, n))
    w = np.zeros(n)
    support = rng.choice(n, size=s, replace=False)
    w[support] = rng.standard_normal(s)
    np.clip(w, -spec.r, spec.r, out=w)
    noise = rng.random(m)
    b = A @ w
    k = spec.n_planted
    b[:k] += 0.01 * noise[:k]
    if spec.violate:
        b[k:] -= 50.0 * noise[k:]
    else:
        b[k:] += 0.01 * noise[k:]
    P = q = None
    if spec.kind is InstanceKind.UNION:
        P = rng.standard_normal((m, n))
        iota = rng.random(m)
        q = P @ w
        if spec.violate:
            q -= 50.0 * iota
        else:
            q += 0.01 * iota
    return GeneratedInstance(spec, A, b, w, P, q)


def save_instance(inst: GeneratedInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(inst.to_dict(), fh)


def load_instance(path) -> GeneratedInstance:
    with open(path) as fh:
        return GeneratedInstance.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# metrics


def feas(P: Problem, x) -> float:
    """Fraction of sets containing ``x`` exactly (boundary counts as inside)."""
    x = np.asarray(x, dtype=float)
    return float(np.mean(P.D.contains_all(x, tol=0.0)))


def eps_slack(m: int) -> float:
    return 1e-5 * m / 4


def eps_feas(inst: GeneratedInstance, x) -> float:
    """Fraction of constraints violated by strictly less than ``1e-5 * m / 4``."""
    x = np.asarray(x, dtype=float)
    res = inst.A @ x - inst.b
    if inst.P is not None:
        res = np.minimum(res, inst.P @ x - inst.q)
    return float(np.mean(res < eps_slack(inst.spec.m)))


def random_start(inst: GeneratedInstance, index: int) -> np.ndarray:
    """Projection onto ``C`` of a standard Gaussian vector from start stream ``index``."""
    z = rng_for(inst.spec.seed, STREAM_START, index).standard_normal(inst.spec.n)
    return inst.problem.C.project(z)


# ---------------------------------------------------------------------------
# experiment driver


@dataclass(frozen=True)
class GridRow:
    kind: InstanceKind
    m: int
    pbar: float

    def __post_init__(self):
        object.__setattr__(self, "kind", InstanceKind(self.kind))


def _single_run(args):
    spec, start, cfg = args
    inst = generate(spec)
    x0 = random_start(inst, start)
    t0 = time.perf_counter()
    rep = eas_run(inst.problem, cfg, x0)
    elapsed = time.perf_counter() - t0
    P = inst.problem
    return {
        "kind": spec.kind.value,
        "m": spec.m,
        "pbar": spec.pbar,
        "seed": spec.seed,
        "start": start,
        "iter": rep.total_iterations,
        "cpu_s": elapsed,
        "feas0": feas(P, x0),
        "epsfeas0": eps_feas(inst, x0),
        "feas_star": feas(P, rep.x_final),
        "epsfeas_star": eps_feas(inst, rep.x_final),
        "phi0_star": rep.phi0,
    }


def worker_count() -> int:
    cap = os.environ.get("MFS_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_experiment(
    rows: Iterable[GridRow],
    instances: int = 5,
    starts: int = 5,
    eas_cfg: EasConfig = EasConfig(),
    seed: int = 0,
    workers: int | None = None,
    spec_overrides: dict | None = None,
) -> tuple[list[dict], list[dict]]:
    """Run every (row, instance, start) combination and aggregate per row.

    Per instance the best value over starts is taken for each of feas0,
    epsfeas0, feas_star and epsfeas_star; these are then averaged over
    instances. ``iter`` and ``cpu_s`` are averaged over all runs. Returns
    ``(table, details)``.
    """
    if starts < 1 or instances < 1:
        raise ValueError("need at least one instance and one start")
    rows = list(rows)
    overrides = spec_overrides or {}
    jobs = []
    for row in rows:
        for i in range(instances):
            spec = InstanceSpec(m=row.m, pbar=row.pbar, kind=row.kind, seed=seed + i, **overrides)
            for j in range(starts):
                jobs.append((spec, j, eas_cfg))

    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            details = list(pool.map(_single_run, jobs))
    else:
        details = [_single_run(job) for job in jobs]

    table = []
    for ri, row in enumerate(rows):
        chunk = details[ri * instances * starts:(ri + 1) * instances * starts]
        best = {key: [] for key in ("feas0", "epsfeas0", "feas_star", "epsfeas_star")}
        for i in range(instances):
            runs = chunk[i * starts:(i + 1) * starts]
            for key in best:
                best[key].append(max(r[key] for r in runs))
        table.append({
            "kind": row.kind.value,
            "m": row.m,
            "pbar": row.pbar,
            "iter": float(np.mean([r["iter"] for r in chunk])),
            "cpu_s": float(np.mean([r["cpu_s"] for r in chunk])),
            **{key: float(np.mean(vals)) for key, vals in best.items()},
            "seed": seed,
            "instances": instances,
            "starts": starts,
        })
    for i, d in enumerate(details):
        d["instance"] = d["seed"] - seed
    return table, details


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_table(table: Sequence[dict], path, columns=TABLE_COLUMNS + SEED_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in table:
            writer.writerow([_fmt(row[c]) for c in columns])


def read_grid(path) -> dict:
    """Load a grid file (JSON).

    Either ``{"rows": [{"kind": ..., "m": ..., "pbar": ...}, ...]}`` or the
    product form ``{"kind": [...], "m": [...], "pbar": [...]}``. Optional
    keys: ``instances``, ``seed``, ``n``, ``s``, ``r``.
    """
    with open(path) as fh:
        data = json.load(fh)
    if "rows" in data:
        rows = [GridRow(**r) for r in data["rows"]]
    else:
        kinds = data.get("kind", ["halfspaces"])
        ms = data.get("m", [300])
        pbars = data.get("pbar", [0.5, 0.6, 0.7])
        kinds, ms, pbars = ([v] if not isinstance(v, list) else v for v in (kinds, ms, pbars))
        rows = [GridRow(k, m, p) for k in kinds for m in ms for p in pbars]
    overrides = {key: data[key] for key in ("n", "s", "r") if key in data}
    return {
        "rows": rows,
        "instances": int(data.get("instances", 5)),
        "seed": int(data.get("seed", 0)),
        "overrides": overrides,
    }
