"""Command line entry point: ``mfsc {gen,solve,bench,avgproj}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from mfsc import bench
from mfsc.eas import EasConfig, eas_run
from mfsc.objective import eval_phi0, extract_subsystem
from mfsc.penalty import PenaltyKind, from_name
from mfsc.spg import SpgConfig, averaged_projection_run, spg_solve


def _spg_config(args) -> SpgConfig:
    kw = dict(
        alpha_min=args.alpha_min,
        alpha_max=args.alpha_max,
        eta=args.eta,
        sigma=args.sigma,
        M=args.M,
        max_iter=args.max_iter,
    )
    if getattr(args, "tol", None) is not None:
        kw["stop_tol"] = args.tol
    return SpgConfig(**kw)


def _eas_config(args) -> EasConfig:
    return EasConfig(
        eps0=args.eps0,
        decay=args.eps_decay,
        eps_stop=args.eps_stop,
        penalty_kind=PenaltyKind(args.penalty),
        spg=_spg_config(args),
    )


def _add_solver_flags(p, with_tol=True):
    p.add_argument("--penalty", choices=[k.value for k in PenaltyKind], default="log")
    p.add_argument("--M", type=int, default=9)
    p.add_argument("--sigma", type=float, default=1e-4)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--alpha-min", type=float, default=1e-10)
    p.add_argument("--alpha-max", type=float, default=1e10)
    p.add_argument("--max-iter", type=int, default=50_000)
    if with_tol:
        p.add_argument("--tol", type=float, default=None,
                       help="relative step tolerance; with EAS it sets the first-stage inner tolerance")
    p.add_argument("--eps0", type=float, default=0.9)
    p.add_argument("--eps-decay", type=float, default=0.1)
    p.add_argument("--eps-stop", type=float, default=1e-6)


def _load_x0(spec: str | None, inst: bench.GeneratedInstance, start_default: int = 0) -> np.ndarray:
    if spec is None:
        return bench.random_start(inst, start_default)
    if spec.startswith("random:"):
        return bench.random_start(inst, int(spec.split(":", 1)[1]))
    with open(spec) as fh:
        return np.asarray(json.load(fh), dtype=float)


def _emit(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_gen(args):
    spec = bench.InstanceSpec(
        m=args.m, pbar=args.pbar, kind=args.kind, seed=args.seed,
        n=args.n, s=args.s, r=args.r, violate=not args.feasible,
    )
    inst = bench.generate(spec)
    bench.save_instance(inst, args.out)
    return 0


def cmd_solve(args):
    inst = bench.load_instance(args.instance)
    P = inst.problem
    if args.eps is not None or args.penalty == "linear":
        F = from_name(args.penalty, eps=args.eps, m=P.m)
        x0 = P.C.project(_load_x0(args.x0, inst))
        rep = spg_solve(P, F, x0, _spg_config(args))
        out = rep.to_dict()
        out.update(
            mode="spg",
            penalty=args.penalty,
            eps=args.eps,
            phi0=eval_phi0(P, rep.x_final),
            subsystem=extract_subsystem(P, rep.x_final),
            feas0=bench.feas(P, x0),
            epsfeas0=bench.eps_feas(inst, x0),
            feas=bench.feas(P, rep.x_final),
            eps_feas=bench.eps_feas(inst, rep.x_final),
        )
        _emit(out, args.out)
        return 0

    cfg = _eas_config(args)
    if args.tol is not None:
        cfg = replace(cfg, inner_tol0=args.tol)
    if args.x0 is not None:
        starts = [_load_x0(args.x0, inst)]
    else:
        starts = [bench.random_start(inst, j) for j in range(args.starts)]
    runs = []
    for x0 in starts:
        rep = eas_run(P, cfg, x0, metric=lambda x: bench.eps_feas(inst, x))
        d = rep.to_dict()
        d.update(
            feas0=bench.feas(P, rep.x_init),
            epsfeas0=bench.eps_feas(inst, rep.x_init),
            feas=bench.feas(P, rep.x_final),
            eps_feas=bench.eps_feas(inst, rep.x_final),
        )
        runs.append(d)
    best = max(range(len(runs)), key=lambda i: (runs[i]["eps_feas"], -i))
    _emit({"mode": "eas", "penalty": args.penalty, "best": best, "runs": runs}, args.out)
    return 0


def cmd_bench(args):
    grid = bench.read_grid(args.grid)
    cfg = _eas_config(args)
    instances = args.instances if args.instances is not None else grid["instances"]
    seed = args.seed if args.seed is not None else grid["seed"]
    table, details = bench.run_experiment(
        grid["rows"], instances=instances, starts=args.starts, eas_cfg=cfg,
        seed=seed, spec_overrides=grid["overrides"],
    )
    bench.write_table(table, args.out)
    if args.detail:
        bench.write_table(details, args.detail, columns=bench.DETAIL_COLUMNS)
    return 0


def cmd_avgproj(args):
    inst = bench.load_instance(args.instance)
    x0 = _load_x0(args.x0, inst) if args.x0 else np.zeros(inst.spec.n)
    rep = averaged_projection_run(inst.problem.D, x0, max_iter=args.max_iter, stop_tol=args.tol)
    out = rep.to_dict()
    out.pop("iterates", None)
    out.update(mode="avgproj", feas=bench.feas(inst.problem, rep.x_final),
               eps_feas=bench.eps_feas(inst, rep.x_final))
    _emit(out, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfsc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--pbar", type=float, required=True)
    p.add_argument("--kind", choices=[k.value for k in bench.InstanceKind], default="halfspaces")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--r", type=float, default=1e8)
    p.add_argument("--feasible", action="store_true", help="skip the -50*eps offsets")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one instance (continuation, or one SPG run with --eps)")
    p.add_argument("--instance", required=True)
    p.add_argument("--eps", type=float, default=None, help="run a single SPG solve at this eps")
    p.add_argument("--x0", default=None, help="random:<index> or a JSON file with a vector")
    p.add_argument("--starts", type=int, default=1)
    p.add_argument("--out", default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run the experiment grid and write a CSV table")
    p.add_argument("--grid", required=True)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--detail", default=None, help="optional per-run CSV")
    _add_solver_flags(p, with_tol=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("avgproj", help="averaged projections onto the D_i of an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--x0", default=None)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_avgproj)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
