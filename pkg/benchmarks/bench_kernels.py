"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--m 300] [--repeat 200]

Times each kernel on benchmark-sized inputs, then one full EAS run per
instance kind with every kernel swapped to each backend in turn. The
compiled rows are skipped when the extension has not been built.
"""
import argparse
import contextlib
import time
import timeit

import numpy as np

from mfsc import _kernels
from mfsc.bench import InstanceSpec, generate, random_start
from mfsc.eas import EasConfig, eas_run

KERNEL_NAMES = [
    "halfspace_pass",
    "union2_pass",
    "accumulate_rows",
    "accumulate_rows_choice",
    "sparse_box_project",
    "log_penalty_sum",
    "frac_penalty_sum",
]


@contextlib.contextmanager
def use_backend(impl):
    saved = {name: getattr(_kernels, name) for name in KERNEL_NAMES}
    for name in KERNEL_NAMES:
        setattr(_kernels, name, getattr(impl, name))
    try:
        yield
    finally:
        for name, fn in saved.items():
            setattr(_kernels, name, fn)


def kernel_cases(m, n, rng):
    A, P = rng.standard_normal((m, n)), rng.standard_normal((m, n))
    b, q = rng.standard_normal(m), rng.standard_normal(m)
    inv_a, inv_p = 1.0 / np.einsum("ij,ij->i", A, A), 1.0 / np.einsum("ij,ij->i", P, P)
    tol_a, tol_p = 1e-12 * (1 + np.abs(b)), 1e-12 * (1 + np.abs(q))
    x = rng.standard_normal(n)
    w = rng.random(m)
    choice = rng.integers(0, 2, m).astype(np.int8)
    sq = rng.random(m)
    return {
        "halfspace_pass": lambda k: k.halfspace_pass(A, b, inv_a, tol_a, x),
        "union2_pass": lambda k: k.union2_pass(A, b, inv_a, tol_a, P, q, inv_p, tol_p, x),
        "accumulate_rows": lambda k: k.accumulate_rows(A, w),
        "accumulate_rows_choice": lambda k: k.accumulate_rows_choice(A, P, choice, w),
        "sparse_box_project": lambda k: k.sparse_box_project(x, 1e8, max(1, n // 5)),
        "log_penalty_sum": lambda k: k.log_penalty_sum(sq, 1e-3),
        "frac_penalty_sum": lambda k: k.frac_penalty_sum(sq, 1e-3),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = _kernels.backends()
    names = sorted(backends)
    if "compiled" not in backends:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")

    n = args.m // 5
    cases = kernel_cases(args.m, n, np.random.default_rng(args.seed))
    print(f"kernel timings, m={args.m} n={n}, microseconds per call (best of 5)")
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in names) + ("     speedup" if len(names) > 1 else ""))
    for kname, call in cases.items():
        times = {}
        for bname in names:
            impl = backends[bname]
            t = min(timeit.repeat(lambda: call(impl), number=args.repeat, repeat=5))
            times[bname] = 1e6 * t / args.repeat
        line = f"{kname:<24}" + "".join(f"{times[b]:>12.2f}" for b in names)
        if len(names) > 1:
            line += f"{times['python'] / times['compiled']:>11.1f}x"
        print(line)

    print(f"\nend-to-end EAS, m={args.m}, one start")
    for kind in ("halfspaces", "union"):
        inst = generate(InstanceSpec(m=args.m, pbar=0.6, kind=kind, seed=args.seed))
        x0 = random_start(inst, 0)
        results = {}
        for bname in names:
            with use_backend(backends[bname]):
                t0 = time.perf_counter()
                rep = eas_run(inst.problem, EasConfig(), x0)
                results[bname] = (time.perf_counter() - t0, rep.total_iterations, rep.phi0)
        summary = ", ".join(f"{b}: {s:.2f} s ({it} iterations, Phi0={p})" for b, (s, it, p) in results.items())
        print(f"  {kind:<11} {summary}")


if __name__ == "__main__":
    main()
