"""Command-line front end.

Exit codes: 0 success, 1 a demo check failed, 2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .chain import NumericalFailure, compute_chain, invariance_residual, reduction_report
from .experiments import condition_study, genericity_experiment
from .models import (
    DEMOS,
    GridSpec,
    SystemModel,
    cyclic_example,
    demo_system,
    gaussian_blob,
    grid_system,
)
from .observability import MeasurementSequence, reconstruct, simulate
from .subspace import DEFAULT_TOL

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _yes_no(flag) -> str:
    if flag is None:
        return "undecided"
    return "yes" if flag else "no"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _out_path(args, name: str) -> Path:
    base = Path(args.outdir) if getattr(args, "outdir", None) else Path(".")
    return base / name


def _load_system(args, steps: int = 6) -> SystemModel:
    if args.demo:
        return demo_system(args.demo, seed=args.seed, time_varying=args.time_varying,
                           steps=max(steps, 1))
    if not args.dynamics or not args.projection:
        raise InputError("give --demo, or both --dynamics and --projection")
    blocks = [fileio.read_matrix(p) for p in args.dynamics]
    P = fileio.read_matrix(args.projection)
    dynamics = tuple(blocks) if (args.time_varying or len(blocks) > 1) else blocks[0]
    grid = GridSpec(args.grid_side) if args.grid_side else None
    return SystemModel(dynamics, P, label=str(args.dynamics[0]), grid=grid)


def _add_system_args(p):
    p.add_argument("--demo", choices=DEMOS, help="use a built-in system")
    p.add_argument("--seed", type=int, default=0, help="seed for the random6 demo")
    p.add_argument("--dynamics", action="append", metavar="FILE",
                   help="matrix file for L; repeat for time-varying L_1, L_2, ...")
    p.add_argument("--projection", metavar="FILE", help="matrix file for P")
    p.add_argument("--grid-side", type=int, help="treat states as g x g pixel grids")
    p.add_argument("--time-varying", action="store_true",
                   help="treat the dynamics as a sequence of operators")


def cmd_chain(args) -> int:
    system = _load_system(args, steps=(args.max_steps or 7) - 1)
    max_steps = args.max_steps or system.n + 1
    if system.time_varying:
        max_steps = min(max_steps, len(system.dynamics) + 1)
    chain = compute_chain(system, max_steps, args.tol)
    report = reduction_report(chain)
    i = chain.stalled_at
    if i is None:
        witness = "none"
    else:
        S = chain.subspaces[i - 1]
        res = invariance_residual(system.operator(i), S, args.tol)
        if res > 1e-6:
            raise NumericalFailure(f"stall at N_{i} is not invariant (residual {res:.3g})")
        witness = f"dim {S.dim} at N_{i} (invariance residual {res:.2e})"
    k_star = chain.k_star
    lines = [
        f"system: {system.label} (n={system.n}, m={system.m})",
        "dims: " + " ".join(str(d) for d in chain.dims),
        f"k_star: {k_star if k_star is not None else 'not reached'}",
        f"lower bound: {report.lower_bound}",
        f"optimal: {_yes_no(report.optimal)}",
        "transverse: " + " ".join(_yes_no(t) for t in report.transverse_profile),
        f"bound satisfied: {_yes_no(report.bound_satisfied)}",
        f"stall witness: {witness}",
    ]
    lines += [f"warning: {w}" for w in report.warnings]
    print("\n".join(lines))
    if args.csv:
        rows = []
        for k, d in enumerate(chain.dims, start=1):
            t = report.transverse_profile[k - 1] if k <= len(report.transverse_profile) else ""
            rows.append((k, d, _fmt(t) if t != "" else ""))
        fileio.atomic_write(_out_path(args, args.csv), _csv_text(("k", "dim", "transverse"), rows))
    return EXIT_OK


def _write_frames(args, prefix: str, grid: GridSpec, states) -> list:
    paths = []
    width = max(2, len(str(len(states))))
    for t, x in enumerate(states, start=1):
        path = _out_path(args, f"{prefix}_{t:0{width}d}.pgm")
        fileio.write_pgm(path, grid.to_image(x))
        paths.append(path)
    return paths


def cmd_simulate(args) -> int:
    system = _load_system(args, steps=args.steps - 1)
    if args.x0:
        x0 = fileio.read_matrix(args.x0).reshape(-1)
    elif args.blob:
        if system.grid is None:
            raise InputError("--blob needs a grid system (a grid demo or --grid-side)")
        try:
            ci, cj, sigma = (float(v) for v in args.blob.split(","))
        except ValueError:
            raise InputError(f"--blob expects ci,cj,sigma, got {args.blob!r}") from None
        x0 = gaussian_blob(system.grid, ci, cj, sigma)
    else:
        raise InputError("give --x0 FILE or --blob ci,cj,sigma")
    if x0.shape != (system.n,):
        raise InputError(f"initial state has {x0.size} entries, system needs {system.n}")
    traj, data = simulate(system, x0, args.steps)
    fileio.write_sequence(_out_path(args, f"{args.out}_data.csv"), data.data)
    fileio.write_sequence(_out_path(args, f"{args.out}_states.csv"), traj.states)
    frames = _write_frames(args, f"{args.out}_state", system.grid, traj.states) if system.grid else []
    print(f"wrote {args.steps} measurements to {_out_path(args, args.out + '_data.csv')}")
    if frames:
        print(f"wrote {len(frames)} frames")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    data = fileio.read_sequence(args.data)
    system = _load_system(args, steps=data.shape[0] - 1)
    if data.shape[1] != system.m:
        raise InputError(
            f"{args.data}: measurements have {data.shape[1]} components, projection gives {system.m}"
        )
    result = reconstruct(system, MeasurementSequence(data))
    norm_d = float(np.linalg.norm(data))
    summary = [
        ("n", system.n), ("m", system.m), ("T", data.shape[0]),
        ("rank", result.rank), ("condition", float(result.condition)),
        ("residual", result.residual),
        ("relative_residual", result.residual / norm_d if norm_d else 0.0),
        ("unique", result.unique),
        ("status", "unique" if result.unique else "non-unique"),
    ]
    if result.oracle is not None:
        summary.append(("oracle_unique", result.oracle))
    fileio.write_matrix(_out_path(args, f"{args.out}_x0.txt"), result.x0[:, None])
    fileio.write_sequence(_out_path(args, f"{args.out}_trajectory.csv"), result.trajectory.states)
    text = _csv_text(("key", "value"), [(k, _fmt(v)) for k, v in summary])
    fileio.atomic_write(_out_path(args, f"{args.out}_summary.csv"), text)
    if system.grid:
        _write_frames(args, f"{args.out}_recon", system.grid, result.trajectory.states)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.genericity:
        try:
            n, m, trials, seed = (int(v) for v in args.genericity)
        except ValueError:
            raise InputError("--genericity expects four integers: n m trials seed") from None
        rep = genericity_experiment(n, m, trials, seed, args.time_varying,
                                    random_projection=args.random_projection,
                                    workers=args.workers)
        summary = [
            ("n", n), ("m", m), ("trials", trials), ("seed", seed),
            ("time_varying", args.time_varying),
            ("count_optimal", rep.count_optimal),
            ("count_all_transverse", rep.count_all_transverse),
            ("fraction_optimal", rep.fraction_optimal),
            ("failing_seeds", " ".join(str(s) for s in rep.failing_seeds)),
        ]
        text = _csv_text(("key", "value"), [(k, _fmt(v)) for k, v in summary])
        sys.stdout.write(text)
        if args.out:
            fileio.atomic_write(_out_path(args, f"{args.out}_summary.csv"), text)
            rows = [(o.trial, o.seed, " ".join(map(str, o.dims)),
                     o.k_star if o.k_star is not None else "", _fmt(o.optimal),
                     _fmt(o.all_transverse)) for o in rep.outcomes]
            fileio.atomic_write(
                _out_path(args, f"{args.out}_trials.csv"),
                _csv_text(("trial", "seed", "dims", "k_star", "optimal", "all_transverse"), rows),
            )
        return EXIT_OK
    demo, tmin, tmax = args.condstudy
    if demo not in DEMOS:
        raise InputError(f"unknown demo {demo!r}; choose from {', '.join(DEMOS)}")
    try:
        tmin, tmax = int(tmin), int(tmax)
    except ValueError:
        raise InputError("--condstudy expects DEMO T_MIN T_MAX with integer bounds") from None
    system = demo_system(demo, seed=args.seed, time_varying=args.time_varying, steps=max(tmax - 1, 1))
    study = condition_study(system, tmin, tmax)
    text = _csv_text(("T", "rank", "condition"),
                     [(r.T, r.rank, _fmt(float(r.condition))) for r in study.rows])
    sys.stdout.write(text)
    if args.out:
        fileio.atomic_write(_out_path(args, f"{args.out}_condition.csv"), text)
    return EXIT_OK


def _demo_checks(outdir: Path):
    """Yield (name, passed, detail) for the built-in reproduction run."""
    cyc = cyclic_example()
    chain = compute_chain(cyc, 6)
    rep = reduction_report(chain)
    ok = chain.dims == (4, 3, 2, 1, 0) and chain.k_star == 5 and rep.lower_bound == 3 and rep.optimal is False
    fileio.atomic_write(outdir / "cyclic_chain.csv",
                        _csv_text(("k", "dim"), list(enumerate(chain.dims, start=1))))
    yield "cyclic chain dims 4 3 2 1 0, k_star 5, not optimal", ok, " ".join(map(str, chain.dims))

    for name in ("l1grid", "l2grid"):
        system = grid_system(name)
        study = condition_study(system, 1, 15)
        fileio.atomic_write(outdir / f"{name}_rank_condition.csv",
                            _csv_text(("T", "rank", "condition"),
                                      [(r.T, r.rank, repr(float(r.condition))) for r in study.rows]))
        ranks = study.column("rank")
        ok = ranks[:10] == [10 * T for T in range(1, 11)]
        yield f"{name} rank of E grows by 10 per step to 100 at T=10", ok, " ".join(map(str, ranks[:10]))

    l2 = grid_system("l2grid")
    study = condition_study(l2, 10, 15)
    conds = study.column("condition")
    ok = all(r == 100 for r in study.column("rank")) and conds[-1] <= conds[0] / 10
    yield "l2grid condition(E_15) <= condition(E_10)/10, full rank", ok, \
        f"{conds[0]:.2e} -> {conds[-1]:.2e}"

    x0 = gaussian_blob(l2.grid, 3, 3, 1.5)
    traj, data = simulate(l2, x0, 14)
    res = reconstruct(l2, data)
    err = float(np.linalg.norm(res.x0 - x0) / np.linalg.norm(x0))
    fileio.write_sequence(outdir / "l2grid_data.csv", data.data)
    for t in (1, 3, 6, 10):
        fileio.write_pgm(outdir / f"l2grid_state_{t:02d}.pgm", l2.grid.to_image(traj.states[t - 1]))
    fileio.write_pgm(outdir / "l2grid_recon_x0.pgm", l2.grid.to_image(res.x0))
    yield "l2grid blob round trip at T=14, relative error <= 1e-3", err <= 1e-3, f"{err:.2e}"

    x0 = np.arange(1.0, 7.0)
    _, data = simulate(cyc, x0, 6)
    res = reconstruct(cyc, data)
    err = float(np.linalg.norm(res.x0 - x0) / np.linalg.norm(x0))
    yield "cyclic round trip at T=6, relative error <= 1e-10", err <= 1e-10, f"{err:.2e}"


def cmd_demo(args) -> int:
    outdir = Path(args.outdir or "demo_out")
    outdir.mkdir(parents=True, exist_ok=True)
    results = list(_demo_checks(outdir))
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  [{detail}]")
    passed = sum(ok for _, ok, _ in results)
    print(f"{passed}/{len(results)} checks passed; artifacts in {outdir}")
    return EXIT_OK if passed == len(results) else EXIT_CHECK_FAILED


EXPERIMENT_EPILOG = """\
output columns:
  --genericity   key,value rows: n, m, trials, seed, time_varying, count_optimal,
                 count_all_transverse, fraction_optimal, failing_seeds (space separated).
                 With --out PREFIX also PREFIX_trials.csv:
                 trial, seed, dims, k_star, optimal, all_transverse.
  --condstudy    T, rank, condition (rank and condition of E for each horizon T).
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyntomo",
        description="Uniqueness and reconstruction for dynamic single-view projections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chain", help="null-space chain, optimality and stall diagnostics")
    _add_system_args(p)
    p.add_argument("--max-steps", type=int, help="chain length limit (default n + 1)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative rank threshold")
    p.add_argument("--csv", metavar="FILE", help="also write k,dim,transverse rows")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("simulate", help="run the dynamics and record projections")
    _add_system_args(p)
    p.add_argument("--x0", metavar="FILE", help="initial state as a matrix file")
    p.add_argument("--blob", metavar="CI,CJ,SIGMA", help="Gaussian blob initial state")
    p.add_argument("--steps", type=int, required=True, metavar="T")
    p.add_argument("--out", required=True, metavar="PREFIX")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="least-squares recovery from a measurement CSV")
    _add_system_args(p)
    p.add_argument("--data", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="PREFIX")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("experiment", help="genericity trials or conditioning study",
                       epilog=EXPERIMENT_EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--genericity", nargs=4, metavar=("N", "M", "TRIALS", "SEED"))
    g.add_argument("--condstudy", nargs=3, metavar=("DEMO", "T_MIN", "T_MAX"))
    p.add_argument("--time-varying", action="store_true")
    p.add_argument("--random-projection", action="store_true",
                   help="draw a Gaussian P per trial instead of the first m identity rows")
    p.add_argument("--seed", type=int, default=0, help="seed for the random6 demo")
    p.add_argument("--workers", type=int, help="worker processes for genericity trials")
    p.add_argument("--out", metavar="PREFIX")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("demo", help="reproduce the cyclic chain and grid observations")
    p.set_defaults(func=cmd_demo)
    for p in sub.choices.values():
        p.add_argument("--outdir", help="directory for every output file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    # LinAlgError subclasses ValueError, so it has to be caught first
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
