import numpy as np
import pytest
from scipy import integrate

from roughburgers import CircleGrid, assemble_fields, builtin_scheme, evolve, init_stationary
from roughburgers.fourier import SQRT_2PI
from roughburgers.norms import holder_seminorm

from conftest import quadratic_mass_scheme


def test_exact_scheme_degenerates_bitwise():
    grid = CircleGrid(64)
    state = init_stationary(builtin_scheme("spectral"), 0.2, grid, dim=2, seed=11)
    assert np.array_equal(state.eta, state.eta_eps)
    for _ in range(5):
        state = evolve(state, 0.013)
        assert np.array_equal(state.eta, state.eta_eps)
        assert np.array_equal(state.innov_eta, state.innov_eta_eps)
    x, x_eps = assemble_fields(state)
    assert np.array_equal(x.coeffs, x_eps.coeffs)


def test_forward_difference_also_degenerates():
    # m == h == 1 for the built-in forward scheme: same noise, same law
    grid = CircleGrid(32)
    state = evolve(init_stationary(builtin_scheme("forward_difference"), 0.3, grid, seed=2), 0.05)
    assert np.array_equal(state.eta, state.eta_eps)


def test_stationary_unit_variance():
    # vector components are iid: 200 components x 50 seeds = 1e4 replicas
    grid = CircleGrid(8)
    scheme = quadratic_mass_scheme()
    samples = []
    for seed in range(50):
        st = init_stationary(scheme, 0.5, grid, dim=200, seed=seed)
        samples.append(st.eta[0])  # mode k=1, all components, both channels
    vals = np.concatenate([s.ravel() for s in samples])
    n = vals.size
    assert n == 20000
    var = vals.var()
    assert abs(var - 1.0) < 3.0 * np.sqrt(2.0 / n)


def test_stationary_cross_correlation_matches_quadrature():
    # m(x) = 1 + x^2 at eps*k = 1; oracle: independent quadrature of the
    # shared-noise cross-covariance integral, normalised
    scheme = quadratic_mass_scheme()
    eps, k = 0.5, 2
    lam = float(k**2)
    lam_eps = float(k**2 * (1 + (eps * k) ** 2))
    cov, _ = integrate.quad(lambda s: np.exp(-(lam + lam_eps) * s), 0, np.inf)
    rho_oracle = cov * 2.0 * np.sqrt(lam * lam_eps)
    grid = CircleGrid(16)
    prods = []
    for seed in range(100):
        st = init_stationary(scheme, eps, grid, dim=100, seed=seed)
        prods.append((st.eta[k - 1] * st.eta_eps[k - 1]).ravel())
    vals = np.concatenate(prods)
    est = vals.mean()
    ci = 3.0 * vals.std() / np.sqrt(vals.size)
    assert abs(est - rho_oracle) < ci
    st = init_stationary(scheme, eps, grid, dim=1, seed=0)
    assert np.isclose(st.rho[k - 1], rho_oracle, atol=1e-12)


def test_temporal_covariance_decay():
    # E[eta(0) eta(t)] = exp(-k^2 t), approx channel exp(-k^2 m t)
    grid = CircleGrid(16)
    scheme = quadratic_mass_scheme()
    eps, dt = 0.25, 0.02
    before, after_ref, after_eps = [], [], []
    for seed in range(100):
        st = init_stationary(scheme, eps, grid, dim=100, seed=seed)
        st2 = evolve(st, dt)
        before.append((st.eta, st.eta_eps))
        after_ref.append((st.eta[2] * st2.eta[2]).ravel())   # mode k=3
        after_eps.append((st.eta_eps[2] * st2.eta_eps[2]).ravel())
    k = 3.0
    lam, lam_eps = k**2, k**2 * (1 + (eps * k) ** 2)
    for vals, lam_i in ((np.concatenate(after_ref), lam), (np.concatenate(after_eps), lam_eps)):
        target = np.exp(-lam_i * dt)
        ci = 3.0 * vals.std() / np.sqrt(vals.size)
        assert abs(vals.mean() - target) < ci


def test_stationarity_under_evolution():
    grid = CircleGrid(16)
    scheme = quadratic_mass_scheme()
    early, late = [], []
    for seed in range(80):
        st = init_stationary(scheme, 0.4, grid, dim=50, seed=seed)
        early.append(st.eta.ravel())
        late.append(evolve(st, 5.0).eta.ravel())  # exact sampler: one big step
    v0 = np.concatenate(early).var()
    v5 = np.concatenate(late).var()
    n = sum(a.size for a in early)
    tol = 3.0 * np.sqrt(2.0 / n) * 2
    assert abs(v0 - 1.0) < tol and abs(v5 - 1.0) < tol


def test_evolution_is_deterministic():
    grid = CircleGrid(32)
    scheme = quadratic_mass_scheme()
    runs = []
    for _ in range(2):
        st = init_stationary(scheme, 0.3, grid, dim=2, seed=42)
        for _ in range(4):
            st = evolve(st, 0.01)
        runs.append(st)
    assert np.array_equal(runs[0].eta, runs[1].eta)
    assert np.array_equal(runs[0].eta_eps, runs[1].eta_eps)
    assert np.array_equal(runs[0].w0, runs[1].w0)


def test_mode_prefix_sharing_across_resolutions():
    # a coarse state consumes the resolved subset of a finer state's noise
    scheme = quadratic_mass_scheme()
    coarse = init_stationary(scheme, 0.25, CircleGrid(16), dim=3, seed=9)
    fine = init_stationary(scheme, 0.25, CircleGrid(64), dim=3, seed=9)
    k = coarse.n_modes
    assert np.array_equal(coarse.eta, fine.eta[:k])
    c2, f2 = evolve(coarse, 0.01), evolve(fine, 0.01)
    assert np.array_equal(c2.innov_eta, f2.innov_eta[:k])
    assert np.array_equal(c2.innov_w0, f2.innov_w0)


def test_assemble_zero_modes_gives_constant():
    grid = CircleGrid(32)
    st = init_stationary(builtin_scheme("spectral"), 0.1, grid, dim=1, seed=0)
    st.eta[:] = 0.0
    st.eta_eps[:] = 0.0
    st.w0[:] = 1.4
    x, x_eps = assemble_fields(st)
    assert np.allclose(x.values(), 1.4 / SQRT_2PI, atol=1e-14)
    assert np.allclose(x_eps.values(), 1.4 / SQRT_2PI, atol=1e-14)


def test_circle_mean_is_zero_mode_only():
    grid = CircleGrid(64)
    st = init_stationary(quadratic_mass_scheme(), 0.3, grid, dim=1, seed=7)
    st.w0[:] = 0.8
    x, x_eps = assemble_fields(st)
    for f in (x, x_eps):
        assert np.isclose(f.values().mean(), 0.8 / SQRT_2PI, atol=1e-13)
        assert f.conjugate_defect() < 1e-13


def test_field_difference_decays_with_epsilon():
    # quick version of the Lemma-4.2-type decay (full study in acceptance)
    scheme = quadratic_mass_scheme()
    eps_levels = [2.0 ** (-j) for j in range(3, 8)]
    means = []
    for eps in eps_levels:
        n = int(np.ceil(4 * np.pi / eps))
        n += n % 2
        grid = CircleGrid(n)
        sups = []
        for seed in range(10):
            st = init_stationary(scheme, eps, grid, dim=1, seed=seed)
            x, x_eps = assemble_fields(st)
            sups.append(np.max(np.abs((x - x_eps).values())))
        means.append(np.mean(sups))
    slope = np.polyfit(np.log(eps_levels), np.log(means), 1)[0]
    assert slope >= 0.30


def test_holder_regularity_diagnostic():
    # same-seed comparison across resolutions: alpha=0.45 stable,
    # alpha=0.55 grows with N (the field is not 1/2-Hölder)
    scheme = builtin_scheme("spectral")
    ratios_low, ratios_high = [], []
    for seed in range(5):
        semis = {}
        for n in (64, 4096):
            st = init_stationary(scheme, 0.1, CircleGrid(n), dim=1, seed=seed)
            x, _ = assemble_fields(st)
            vals = x.values()[0]
            semis[n] = (
                holder_seminorm(vals, 0.45, method="dyadic")[0],
                holder_seminorm(vals, 0.55, method="dyadic")[0],
            )
        ratios_low.append(semis[4096][0] / semis[64][0])
        ratios_high.append(semis[4096][1] / semis[64][1])
    assert np.median(ratios_high) > np.median(ratios_low)
    assert np.median(ratios_high) > 1.15
    assert np.median(ratios_low) < 1.35


def test_mode_state_view():
    grid = CircleGrid(16)
    st = init_stationary(quadratic_mass_scheme(), 0.5, grid, dim=2, seed=3)
    ms = st.mode_state(2)
    assert ms.k == 2
    assert ms.rate == 4.0
    assert np.isclose(ms.rate_eps, 4.0 * (1 + 1.0))
    assert ms.amp == 1.0
    assert np.isclose(ms.amp_eps, 1.0 / np.sqrt(2.0))
    assert ms.eta.shape == (2, 2)


def test_evolve_rejects_bad_dt():
    st = init_stationary(builtin_scheme("spectral"), 0.1, CircleGrid(8), seed=0)
    with pytest.raises(ValueError):
        evolve(st, 0.0)


def test_state_dump(tmp_path):
    st = init_stationary(builtin_scheme("spectral"), 0.1, CircleGrid(8), dim=1, seed=0)
    path = tmp_path / "modes.csv"
    st.dump_modes(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,component,channel,eta,eta_eps"
    assert len(lines) == 1 + st.n_modes * 1 * 2
