import numpy as np
import pytest

from roughburgers import (
    ExperimentConfig,
    builtin_scheme,
    emit_results,
    fit_rate,
    linear_problem,
    run_convergence_study,
)
from roughburgers.harness import DegenerateStudyError, RunRecord


def tiny_config(**overrides):
    base = dict(
        problem=linear_problem(),
        scheme=builtin_scheme("forward_difference"),
        epsilon_levels=(0.5, 0.25, 0.125),
        seeds=(0, 1),
        T=0.0625,
        K=50.0,
        n_output_times=4,
        lambda_value=0.0,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_config(epsilon_levels=(0.25, 0.5))
    with pytest.raises(ValueError):
        tiny_config(T=0.0)
    with pytest.raises(ValueError):
        tiny_config(K=-1.0)


def test_fit_rate_exact_power_law():
    eps = [0.5, 0.25, 0.125, 0.0625]
    est = fit_rate([(e, e**0.5) for e in eps])
    assert abs(est.slope - 0.5) < 1e-12
    assert abs(est.r_squared - 1.0) < 1e-12
    scaled = fit_rate([(e, 7.3 * e**0.5) for e in eps])
    assert abs(scaled.slope - 0.5) < 1e-12


def test_fit_rate_argument_errors():
    with pytest.raises(ValueError):
        fit_rate([(0.5, 1.0), (0.25, 0.5)])
    with pytest.raises(ValueError):
        fit_rate([(0.5, 1.0), (0.25, -0.5), (0.125, 0.2)])


def test_fit_rate_bootstrap_window(rng):
    # +-10% multiplicative noise on a 0.5-law: slope lands in [0.4, 0.6]
    # in at least 95% of 1000 resamples
    eps = np.array([2.0**-j for j in range(2, 8)])
    hits = 0
    n_boot = 1000
    for _ in range(n_boot):
        noise = rng.uniform(0.9, 1.1, size=eps.size)
        est = fit_rate(list(zip(eps, noise * eps**0.5)))
        hits += 0.4 <= est.slope <= 0.6
    assert hits / n_boot >= 0.95


def test_emit_empty_records(tmp_path):
    est = fit_rate([(0.5, 1.0), (0.25, 0.7), (0.125, 0.5)])
    est.per_level = []
    paths = emit_results([], est, tmp_path / "out")
    header = open(paths["records"]).read().strip()
    assert header == "seed,epsilon,sup_error,holder_error,stopping_time,d_eps_X,d_eps_RP,t_wall"
    summary = open(paths["summary"]).read()
    assert "degenerate = true" in summary


def test_small_study_row_count_and_order(tmp_path):
    config = tiny_config()
    result = run_convergence_study(config)
    assert len(result.records) == len(config.seeds) * len(config.epsilon_levels)
    paths = emit_results(result.records, result.estimate, tmp_path / "o1", config=config)
    rows = open(paths["records"]).read().splitlines()
    assert len(rows) == 1 + len(result.records)
    seeds = [int(r.split(",")[0]) for r in rows[1:]]
    assert seeds == sorted(seeds)


def test_rerun_is_byte_identical(tmp_path):
    config = tiny_config()
    blobs = []
    for i, procs in enumerate((1, 2)):
        result = run_convergence_study(config, processes=procs)
        paths = emit_results(result.records, result.estimate, tmp_path / f"run{i}", config=config)
        blobs.append(open(paths["records"], "rb").read())
    assert blobs[0] == blobs[1]


def test_coupling_sanity_exact_scheme_zero_error():
    # finest level with the exact pseudo-scheme and lambda = 0 reproduces
    # the reference trajectory exactly
    config = tiny_config(
        scheme=builtin_scheme("spectral"),
        epsilon_levels=(0.5, 0.25),
        reference_epsilon=0.25,
        lambda_value=0.0,
        seeds=(0,),
    )
    result = run_convergence_study(config)
    finest = [r for r in result.records if r.epsilon == 0.25]
    assert len(finest) == 1
    assert finest[0].sup_error == 0.0


def test_monotone_trend_across_seed_level_pairs():
    config = tiny_config(
        epsilon_levels=(0.5, 0.25, 0.125, 0.0625),
        seeds=tuple(range(6)),
        T=0.125,
        collect_diagnostics=True,
    )
    result = run_convergence_study(config)
    good = total = 0
    for seed in config.seeds:
        errs = [
            r.sup_error
            for r in sorted(
                (r for r in result.records if r.seed == seed),
                key=lambda r: -r.epsilon,
            )
        ]
        for a, b in zip(errs, errs[1:]):
            total += 1
            good += b <= a
    assert good / total >= 0.8
    assert all(r.stopping_time <= config.T for r in result.records)
    assert all(r.d_eps_X >= 0.0 for r in result.records)


def test_config_hash_changes_iff_fields_change():
    a, b = tiny_config(), tiny_config()
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != tiny_config(T=0.125).config_hash()
    assert a.config_hash() != tiny_config(K=20.0).config_hash()
    assert (
        a.config_hash()
        != tiny_config(scheme=builtin_scheme("central_difference")).config_hash()
    )
    assert a.config_hash() != tiny_config(seeds=(0, 2)).config_hash()


def test_degenerate_study_raises():
    config = tiny_config(K=0.05)  # sin-data sup is 1: stopped immediately
    with pytest.raises(DegenerateStudyError):
        run_convergence_study(config)


def test_ablation_records_present():
    config = tiny_config(ablation_lambdas=(0.1,), seeds=(0,))
    result = run_convergence_study(config)
    assert "lambda=0.1" in result.ablation
    recs, est = result.ablation["lambda=0.1"]
    assert len(recs) == len(config.epsilon_levels)


def test_emit_wall_time_zeroed_by_default(tmp_path):
    rec = RunRecord(
        seed=0, epsilon=0.5, sup_error=0.1, holder_error=0.2,
        stopping_time=0.25, t_wall=123.4,
    )
    est = fit_rate([(0.5, 1.0), (0.25, 0.7), (0.125, 0.5)])
    est.per_level = [(0.5, 0.1, 0.1, 0.1)]
    paths = emit_results([rec], est, tmp_path / "w")
    row = open(paths["records"]).read().splitlines()[1]
    assert row.endswith(",0.0")
    paths = emit_results([rec], est, tmp_path / "w2", include_wall_times=True)
    row = open(paths["records"]).read().splitlines()[1]
    assert row.endswith("123.4")
