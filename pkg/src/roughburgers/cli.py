"""Command-line interface.

Subcommands:

* ``validate-scheme <file>``      print the admissibility report
* ``compute-lambda <file>``       print the correction constant and error
* ``simulate <problem> <scheme>`` time-step one trajectory, write a CSV
* ``lift-path <csv>``             signature coefficients of a sampled path
* ``norms <csv>``                 Hölder/Besov report of a sampled field
* ``convergence-study <config>``  the full multi-resolution rate study

The convergence-study config is a YAML file mirroring ExperimentConfig::

    problem: {name: burgers, nu: 1.0, sigma: 1.0}
    scheme: forward_difference          # builtin name or a scheme file path
    epsilon_levels: [0.0625, 0.03125, 0.015625, 0.0078125]
    seeds: 20                           # count, or an explicit list
    T: 0.25
    K: 10.0
    alpha: 0.25
    ablation_lambdas: []                # extra reference drifts

Worker processes are taken from --processes or the ROUGHBURGERS_PROCS
environment variable; the output is identical for any worker count.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np
import yaml

from . import __version__
from .fourier import CircleGrid, good_grid_size, transform
from .harness import ExperimentConfig, emit_results, run_convergence_study
from .norms import holder_report
from .rough import all_words, lift_path, signature
from .schemes import builtin_scheme, compute_lambda, parse_scheme_file, validate_scheme
from .solvers import (
    BlowUpError,
    burgers_problem,
    init_trajectory,
    linear_problem,
    step_approximate,
    sup_norm,
)

PROBLEMS = {"burgers": burgers_problem, "linear": linear_problem}


def _load_scheme(ref: str):
    if os.path.exists(ref):
        return parse_scheme_file(ref)
    return builtin_scheme(ref)


def _cmd_validate_scheme(args) -> int:
    report = validate_scheme(_load_scheme(args.scheme))
    print(report.as_text())
    for key, value in report.key_values():
        print(f"{key}={value}")
    return 0 if report.passed else 1


def _cmd_compute_lambda(args) -> int:
    lam, err = compute_lambda(_load_scheme(args.scheme), nu=args.nu, sigma=args.sigma)
    print(f"lambda = {lam!r}")
    print(f"error_estimate = {err!r}")
    return 0


def _cmd_simulate(args) -> int:
    problem = PROBLEMS[args.problem](nu=args.nu, sigma=args.sigma)
    scheme = _load_scheme(args.scheme)
    grid = CircleGrid(good_grid_size(int(np.ceil(2 * np.pi / args.epsilon))))
    dt = args.dt if args.dt else 0.25 * args.epsilon**2
    state = init_trajectory(problem, scheme, args.epsilon, grid, dt, seed=args.seed)
    n_steps = max(1, round(args.T / dt))
    stride = max(1, n_steps // args.outputs)
    rows = [_series_row(state)]
    stopped = None
    try:
        for step in range(1, n_steps + 1):
            state = step_approximate(state, problem)
            if step % stride == 0 or step == n_steps:
                rows.append(_series_row(state))
                if rows[-1][1] >= args.K:
                    stopped = state.t
                    break
    except BlowUpError as exc:
        stopped = exc.time
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "sup_norm", "mean", "energy"])
        writer.writerows(rows)
    if args.snapshot:
        vals = state.field.values()
        np.savetxt(args.snapshot, np.column_stack([grid.points, vals.T]), delimiter=",")
    print(f"wrote {len(rows)} rows to {args.out}")
    if stopped is not None:
        print(f"stopped at t = {stopped!r} (threshold K = {args.K})")
    return 0


def _series_row(state):
    vals = state.field.values()
    mean = float(vals.mean(axis=1)[0])
    energy = float(np.mean(np.sum(vals**2, axis=0)))
    return [repr(state.t), sup_norm(state.field), mean, energy]


def _cmd_lift_path(args) -> int:
    data = np.genfromtxt(args.path, delimiter=",", names=True)
    names = list(data.dtype.names)
    if names[0] != "t":
        raise SystemExit("lift-path expects a header row starting with column 't'")
    samples = np.column_stack([data[c] for c in names[1:]])
    rp = lift_path(samples, args.level, grid=np.asarray(data["t"], dtype=float))
    sig = signature(rp)
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["word", "value"])
        for w in all_words(samples.shape[1], args.level, min_len=0):
            writer.writerow(["e" if not w else "".join(map(str, w)), repr(float(sig.coeff(w)))])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_norms(args) -> int:
    raw = np.genfromtxt(args.path, delimiter=",")
    samples = raw if raw.ndim == 1 else raw[:, -1]
    n = samples.size
    if n % 2:
        raise SystemExit(f"field length must be even, got {n}")
    field = transform(samples, CircleGrid(n))
    report = holder_report(field, args.alpha)
    print(report.as_text())
    return 0


def _cmd_convergence_study(args) -> int:
    with open(args.config) as fh:
        doc = yaml.safe_load(fh)
    prob = doc.get("problem", {})
    problem = PROBLEMS[prob.get("name", "burgers")](
        nu=float(prob.get("nu", 1.0)), sigma=float(prob.get("sigma", 1.0))
    )
    seeds = doc.get("seeds", 8)
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    seeds = [s + args.seed_offset for s in seeds]
    config = ExperimentConfig(
        problem=problem,
        scheme=_load_scheme(str(doc["scheme"])),
        epsilon_levels=tuple(doc["epsilon_levels"]),
        seeds=tuple(seeds),
        T=float(doc["T"]),
        K=float(doc["K"]),
        alpha=float(doc.get("alpha", 0.25)),
        dt_factor=float(doc.get("dt_factor", 0.25)),
        n_output_times=int(doc.get("n_output_times", 16)),
        reference_epsilon=doc.get("reference_epsilon"),
        lambda_value=doc.get("lambda_value"),
        ablation_lambdas=tuple(doc.get("ablation_lambdas", ())),
        collect_diagnostics=bool(doc.get("collect_diagnostics", False)),
    )
    result = run_convergence_study(config, processes=args.processes)
    paths = emit_results(
        result.records, result.estimate, args.out, config=config,
        wall_seconds=result.wall_seconds,
    )
    for name, (recs, est) in result.ablation.items():
        sub = os.path.join(args.out, name.replace("=", "_"))
        emit_results(recs, est, sub, config=config)
    print(f"slope = {result.estimate.slope!r}")
    print(f"r2 = {result.estimate.r_squared!r}")
    print(f"records = {paths['records']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roughburgers", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-scheme", help="check scheme admissibility clauses")
    p.add_argument("scheme", help="builtin name or scheme file")
    p.set_defaults(fn=_cmd_validate_scheme)

    p = sub.add_parser("compute-lambda", help="correction constant of a scheme")
    p.add_argument("scheme")
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(fn=_cmd_compute_lambda)

    p = sub.add_parser("simulate", help="time-step one trajectory")
    p.add_argument("problem", choices=sorted(PROBLEMS))
    p.add_argument("scheme")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--dt", type=float, default=None, help="default 0.25*epsilon^2")
    p.add_argument("--T", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--K", type=float, default=1e6, help="stopping threshold")
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--outputs", type=int, default=64)
    p.add_argument("--out", default="trajectory.csv")
    p.add_argument("--snapshot", default=None, help="also dump the final field")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("lift-path", help="signature of a t,x1..xn sample table")
    p.add_argument("path")
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=_cmd_lift_path)

    p = sub.add_parser("norms", help="Hölder/Besov report of a sampled field")
    p.add_argument("path")
    p.add_argument("--alpha", type=float, default=0.45)
    p.set_defaults(fn=_cmd_norms)

    p = sub.add_parser("convergence-study", help="multi-resolution rate study")
    p.add_argument("config")
    p.add_argument("--out", default="study_out")
    p.add_argument("--seed-offset", type=int, default=0, help="shard seeds across machines")
    p.add_argument("--processes", type=int, default=None)
    p.set_defaults(fn=_cmd_convergence_study)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
