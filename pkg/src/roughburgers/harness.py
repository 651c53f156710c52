"""Coupled multi-resolution convergence studies and rate fitting.

For each seed, one family of counter-based noise streams drives every
trajectory: the corrected-limit reference (exact operators, drift
F - lambda * div G) at the finest resolution, and the approximate
equation at each epsilon level.  Streams are keyed by (seed, step) with
a mode-major layout, so a coarse level consumes exactly the resolved
subset of the reference's mode noise and the (reference, level) pair is
distributed exactly as if a single cylindrical Wiener process drove
both.  All trajectories share a common time step (parabolic scaling on
the finest studied level), so step indices align across resolutions.

Per-level sup-norm errors are medians across seeds (the theorem is a
convergence-in-probability statement; medians are robust to
near-stopping outliers), regressed log-log against epsilon.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
import multiprocessing
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import gaussian, rough
from .fourier import CircleGrid, SpectralField, good_grid_size, pad_modes
from .norms import holder_seminorm
from .schemes import SchemeSpec, compute_lambda
from .solvers import (
    BlowUpError,
    ProblemSpec,
    init_trajectory,
    step_approximate,
    step_corrected_limit,
)

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "RateEstimate",
    "StudyResult",
    "DegenerateStudyError",
    "run_convergence_study",
    "fit_rate",
    "emit_results",
]


class DegenerateStudyError(RuntimeError):
    """Every seed stopped immediately; no errors could be measured."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec
    scheme: SchemeSpec
    epsilon_levels: tuple
    seeds: tuple
    T: float
    K: float
    alpha: float = 0.25
    p: int = 2
    dt_factor: float = 0.25
    n_output_times: int = 16
    reference_epsilon: float | None = None
    lambda_value: float | None = None
    ablation_lambdas: tuple = ()
    collect_diagnostics: bool = False
    oversample: int = 2

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilon_levels)
        if len(eps) == 0 or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon_levels must be strictly decreasing")
        object.__setattr__(self, "epsilon_levels", eps)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.K <= 0:
            raise ValueError("K must be positive")

    @property
    def ref_epsilon(self) -> float:
        # two dyadic levels below the finest studied epsilon: one level is
        # not enough -- the surrogate's truncated mode tail then suppresses
        # the finest-level error by ~sqrt(2) and visibly steepens the
        # fitted rate (see the linear control)
        return self.reference_epsilon or self.epsilon_levels[-1] / 4.0

    @property
    def dt(self) -> float:
        return self.dt_factor * self.epsilon_levels[-1] ** 2

    def describe(self) -> dict:
        probe = np.linspace(0.0, 4.0, 17)
        return {
            "problem": self.problem.name,
            "n": self.problem.n,
            "nu": self.problem.nu,
            "sigma": self.problem.sigma,
            "scheme": self.scheme.name,
            "scheme_m": [float(v) for v in np.asarray(self.scheme.m_fn(probe))],
            "scheme_h": [float(v) for v in np.asarray(self.scheme.h_fn(probe))],
            "scheme_mu": None if self.scheme.is_exact else list(self.scheme.mu.atoms),
            "c_m": self.scheme.c_m,
            "epsilon_levels": list(self.epsilon_levels),
            "seeds": list(self.seeds),
            "T": self.T,
            "K": self.K,
            "alpha": self.alpha,
            "p": self.p,
            "dt_factor": self.dt_factor,
            "n_output_times": self.n_output_times,
            "reference_epsilon": self.reference_epsilon,
            "lambda_value": self.lambda_value,
            "ablation_lambdas": list(self.ablation_lambdas),
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class RunRecord:
    seed: int
    epsilon: float
    sup_error: float
    holder_error: float
    stopping_time: float
    d_eps_X: float = 0.0
    d_eps_RP: float = 0.0
    t_wall: float = 0.0
    reference: str = "corrected"


@dataclass
class RateEstimate:
    slope: float
    intercept: float
    r_squared: float
    per_level: list  # (epsilon, median, q25, q75)


@dataclass
class StudyResult:
    records: list
    estimate: RateEstimate
    ablation: dict = field(default_factory=dict)  # lambda -> (records, estimate)
    config_hash: str = ""
    wall_seconds: float = 0.0


def _grid_for(epsilon: float) -> CircleGrid:
    return CircleGrid(good_grid_size(math.ceil(2.0 * math.pi / epsilon)))


def _run_reference(config: ExperimentConfig, seed: int, lam: float, n_steps: int, out_steps):
    from .schemes import builtin_scheme

    grid = _grid_for(config.ref_epsilon)
    state = init_trajectory(
        config.problem, builtin_scheme("spectral"), config.ref_epsilon, grid, config.dt, seed
    )
    outputs, stopped_at = {}, None
    sup0 = _sup(state.field, config.oversample)
    if sup0 >= config.K:
        return grid, {}, 0.0
    try:
        for step in range(1, n_steps + 1):
            state = step_corrected_limit(state, config.problem, lam)
            if step in out_steps:
                level = _sup(state.field, config.oversample)
                if level >= config.K:
                    stopped_at = state.t
                    outputs[step] = state.field
                    break
                outputs[step] = state.field
    except BlowUpError as exc:
        stopped_at = exc.time
    return grid, outputs, stopped_at


def _sup(fld: SpectralField, oversample: int) -> float:
    vals = fld.values_on(oversample * fld.grid.n_points) if oversample > 1 else fld.values()
    return float(np.max(np.abs(vals)))


def _diagnostics(noise_state, grid) -> tuple:
    x, x_eps = gaussian.assemble_fields(noise_state, grid)
    diff = (x - x_eps).values()
    d_x = float(np.max(np.abs(diff)))
    scheme = noise_state.scheme
    if scheme.is_exact:
        return d_x, 0.0
    vx = x.values()[0]
    vxe = x_eps.values()[0]
    lift = rough.lift_path(np.stack([vx, vxe], axis=1), 2)
    w_xx, w_ee = (1, 1), (2, 2)
    d_rp = float(
        np.max(np.abs(lift.one_step[w_xx] - lift.one_step[w_ee])) / grid.spacing**0.9
    )
    return d_x, d_rp


def _run_seed(config: ExperimentConfig, seed: int) -> list:
    t0 = time.perf_counter()
    dt = config.dt
    n_steps = max(1, round(config.T / dt))
    stride = max(1, n_steps // config.n_output_times)
    out_steps = set(range(stride, n_steps + 1, stride))
    lam_main = (
        config.lambda_value
        if config.lambda_value is not None
        else compute_lambda(config.scheme, config.problem.nu, config.problem.sigma)[0]
    )
    references = [("corrected", lam_main)] + [
        (f"lambda={l}", float(l)) for l in config.ablation_lambdas
    ]
    ref_data = {
        name: _run_reference(config, seed, lam, n_steps, out_steps)
        for name, lam in references
    }

    records = []
    for epsilon in config.epsilon_levels:
        grid = _grid_for(epsilon)
        state = init_trajectory(config.problem, config.scheme, epsilon, grid, dt, seed)
        d_x, d_rp = (
            _diagnostics(state.noise, grid) if config.collect_diagnostics else (0.0, 0.0)
        )
        outputs, stopped_at = {}, None
        if _sup(state.field, config.oversample) >= config.K:
            stopped_at = 0.0
        else:
            try:
                for step in range(1, n_steps + 1):
                    state = step_approximate(state, config.problem)
                    if step in out_steps:
                        level = _sup(state.field, config.oversample)
                        outputs[step] = state.field
                        if level >= config.K:
                            stopped_at = state.t
                            break
            except BlowUpError as exc:
                stopped_at = exc.time
                outputs = {s: f for s, f in outputs.items() if s * dt < exc.time}

        wall = time.perf_counter() - t0
        for name, _lam in references:
            ref_grid, ref_outputs, ref_stopped = ref_data[name]
            tau = min(
                stopped_at if stopped_at is not None else math.inf,
                ref_stopped if ref_stopped is not None else math.inf,
                n_steps * dt,
                config.T,
            )
            sup_err, holder_err = _errors_against_reference(
                config, outputs, ref_outputs, ref_grid, dt, tau
            )
            records.append(
                RunRecord(
                    seed=seed,
                    epsilon=epsilon,
                    sup_error=sup_err,
                    holder_error=holder_err,
                    stopping_time=tau,
                    d_eps_X=d_x,
                    d_eps_RP=d_rp,
                    t_wall=wall,
                    reference=name,
                )
            )
    return records


def _errors_against_reference(config, outputs, ref_outputs, ref_grid, dt, tau):
    cmp_n = config.oversample * ref_grid.n_points
    sup_err, holder_err = math.nan, math.nan
    for step, fld in outputs.items():
        if step not in ref_outputs or step * dt > tau + 1e-12:
            continue
        diff = pad_modes(fld, ref_grid.n_points) - ref_outputs[step]
        vals = diff.values_on(cmp_n)
        s = float(np.max(np.abs(vals)))
        h = holder_seminorm(vals, config.alpha, method="dyadic")[0]
        sup_err = s if math.isnan(sup_err) else max(sup_err, s)
        holder_err = h if math.isnan(holder_err) else max(holder_err, h)
    return sup_err, holder_err


_FORK_CONFIG = None


def _fork_worker(seed: int) -> list:
    return _run_seed(_FORK_CONFIG, seed)


def run_convergence_study(config: ExperimentConfig, processes: int | None = None) -> StudyResult:
    """Run the full seeds x levels study and fit the convergence rate.

    ``processes`` > 1 forks workers over seeds (records are gathered and
    sorted by (seed, level), so the output is identical for any worker
    count).  Raises DegenerateStudyError if every seed stopped at t = 0.
    """
    t0 = time.perf_counter()
    if processes is None:
        processes = int(os.environ.get("ROUGHBURGERS_PROCS", "1"))
    per_seed: dict[int, list] = {}
    if processes > 1 and hasattr(os, "fork"):
        global _FORK_CONFIG
        _FORK_CONFIG = config
        ctx = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(processes, mp_context=ctx) as pool:
            for seed, recs in zip(config.seeds, pool.map(_fork_worker, config.seeds)):
                per_seed[seed] = recs
        _FORK_CONFIG = None
    else:
        for seed in config.seeds:
            per_seed[seed] = _run_seed(config, seed)

    all_records = [r for seed in sorted(per_seed) for r in per_seed[seed]]
    by_ref: dict[str, list] = {}
    for r in all_records:
        by_ref.setdefault(r.reference, []).append(r)

    main = by_ref.get("corrected", [])
    estimate = _estimate_from_records(config, main)
    ablation = {
        name: (recs, _estimate_from_records(config, recs))
        for name, recs in by_ref.items()
        if name != "corrected"
    }
    return StudyResult(
        records=main,
        estimate=estimate,
        ablation=ablation,
        config_hash=config.config_hash(),
        wall_seconds=time.perf_counter() - t0,
    )


def _estimate_from_records(config: ExperimentConfig, records: list) -> RateEstimate:
    per_level = []
    pairs = []
    for eps in config.epsilon_levels:
        errs = np.array(
            [r.sup_error for r in records if r.epsilon == eps and math.isfinite(r.sup_error)]
        )
        if errs.size == 0:
            per_level.append((eps, math.nan, math.nan, math.nan))
            continue
        med = float(np.median(errs))
        per_level.append(
            (eps, med, float(np.quantile(errs, 0.25)), float(np.quantile(errs, 0.75)))
        )
        if med > 0:
            pairs.append((eps, med))
    if not any(math.isfinite(m) for _, m, _, _ in per_level):
        raise DegenerateStudyError("all seeds stopped before the first output time")
    if len(pairs) >= 3:
        est = fit_rate(pairs)
        return RateEstimate(est.slope, est.intercept, est.r_squared, per_level)
    return RateEstimate(math.nan, math.nan, math.nan, per_level)


def fit_rate(pairs) -> RateEstimate:
    """Least-squares slope of log(error) against log(epsilon)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 (epsilon, error) pairs, got {len(pairs)}")
    eps = np.array([p[0] for p in pairs], dtype=float)
    err = np.array([p[1] for p in pairs], dtype=float)
    if np.any(eps <= 0) or np.any(err <= 0):
        raise ValueError("epsilon and error values must be positive")
    x, y = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateEstimate(float(slope), float(intercept), r2, per_level=[])


def emit_results(records, estimate, out_dir, config=None, include_wall_times=False,
                 wall_seconds=0.0) -> dict:
    """Write records.csv, summary.txt and the per-level aggregate CSV.

    Row order is deterministic ((seed, decreasing epsilon)); wall-clock
    columns are zeroed unless ``include_wall_times`` so repeated runs of
    the same config produce byte-identical records.csv.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "records": os.path.join(out_dir, "records.csv"),
        "summary": os.path.join(out_dir, "summary.txt"),
        "aggregate": os.path.join(out_dir, "aggregate.csv"),
    }
    ordered = sorted(records, key=lambda r: (r.seed, -r.epsilon, r.reference))
    try:
        with open(paths["records"], "w") as fh:
            fh.write("seed,epsilon,sup_error,holder_error,stopping_time,d_eps_X,d_eps_RP,t_wall\n")
            for r in ordered:
                wall = float(r.t_wall) if include_wall_times else 0.0
                fh.write(
                    f"{r.seed},{float(r.epsilon)!r},{float(r.sup_error)!r},"
                    f"{float(r.holder_error)!r},{float(r.stopping_time)!r},"
                    f"{float(r.d_eps_X)!r},{float(r.d_eps_RP)!r},{wall!r}\n"
                )
        degenerate = len(records) == 0 or not math.isfinite(estimate.slope)
        with open(paths["summary"], "w") as fh:
            fh.write(f"slope = {estimate.slope!r}\n")
            fh.write(f"intercept = {estimate.intercept!r}\n")
            fh.write(f"r2 = {estimate.r_squared!r}\n")
            fh.write(f"n_seeds = {len({r.seed for r in records})}\n")
            fh.write(f"config_hash = {config.config_hash() if config else 'unknown'}\n")
            fh.write(f"degenerate = {str(degenerate).lower()}\n")
            if wall_seconds:
                fh.write(f"total_wall_seconds = {wall_seconds:.3f}\n")
        with open(paths["aggregate"], "w") as fh:
            fh.write("epsilon,median_error,q25,q75\n")
            for eps, med, q25, q75 in estimate.per_level:
                fh.write(f"{float(eps)!r},{float(med)!r},{float(q25)!r},{float(q75)!r}\n")
    except OSError as exc:
        raise OSError(f"failed writing study results under {out_dir}: {exc}") from exc
    return paths
