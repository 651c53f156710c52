import numpy as np
import pytest

from roughburgers import (
    CircleGrid,
    besov_norm,
    dirichlet_kernel,
    holder_report,
    holder_seminorm,
    pl_block,
    pl_decompose,
    transform,
)
from roughburgers.fourier import SQRT_2PI
from roughburgers.norms import circle_distance, dirichlet_lp_norm

from conftest import fractional_gaussian_samples, random_trig_field


def test_circle_distance_wraps():
    assert np.isclose(circle_distance(-np.pi + 0.1, np.pi - 0.1), 0.2)
    assert np.isclose(circle_distance(0.0, 1.0), 1.0)


def test_holder_constant_is_zero():
    assert holder_seminorm(np.full(64, 3.2), 0.5) == 0.0


def test_holder_rejects_bad_alpha():
    with pytest.raises(ValueError):
        holder_seminorm(np.ones(16), 0.0)
    with pytest.raises(ValueError):
        holder_seminorm(np.ones(16), 1.2)


def test_holder_sin_lipschitz_edge_case():
    # alpha = 1 admitted: the Lipschitz constant of sin is 1
    n = 64
    x = -np.pi + 2 * np.pi / n * np.arange(n)
    coarse = holder_seminorm(np.sin(x), 1.0)
    xf = -np.pi + 2 * np.pi / (16 * n) * np.arange(16 * n)
    dense = holder_seminorm(np.sin(xf), 1.0)
    assert abs(dense - 1.0) < 1e-3
    assert abs(coarse - 1.0) < 2 * np.pi / n


def test_holder_homogeneity(rng):
    s = rng.standard_normal(128)
    base = holder_seminorm(s, 0.45)
    assert np.isclose(holder_seminorm(3.5 * s, 0.45), 3.5 * base, rtol=1e-14)


def test_holder_dyadic_bracket(rng):
    s = rng.standard_normal(256)
    exact = holder_seminorm(s, 0.45)
    low, high = holder_seminorm(s, 0.45, method="dyadic")
    assert low <= exact * (1 + 1e-12) and exact <= high


def test_pl_block_mode_placement():
    g = CircleGrid(64)
    f = transform(np.sin(4 * g.points), g)
    for n in range(6):
        block = pl_block(f, n)
        mass = np.max(np.abs(block.coeffs))
        if n == 3:  # 4 lands in [2^2, 2^3)
            assert mass > 0.5
        else:
            assert mass < 1e-13


def test_pl_constant_in_block_zero():
    g = CircleGrid(32)
    f = transform(np.full(32, 2.0), g)
    assert np.allclose(pl_block(f, 0).values()[0], 2.0)
    assert np.max(np.abs(pl_block(f, 2).coeffs)) < 1e-14


def test_pl_reconstruction_exact(rng):
    g = CircleGrid(128)
    f = transform(rng.standard_normal(128), g)  # includes Nyquist content
    total = pl_decompose(f).reconstruct()
    assert np.max(np.abs(total.coeffs - f.coeffs)) < 1e-14
    # disjoint supports
    blocks = pl_decompose(f).blocks
    for a in range(len(blocks)):
        for b in range(a + 1, len(blocks)):
            overlap = (np.abs(blocks[a].coeffs) > 0) & (np.abs(blocks[b].coeffs) > 0)
            assert not overlap.any()


def test_besov_single_mode_values():
    for m in range(1, 6):
        n = 2 ** (m + 3)
        g = CircleGrid(n)
        f = transform(np.sin(2**m * g.points), g)
        for alpha in (0.45, -0.4, 1.0):
            assert abs(besov_norm(f, alpha) - 2.0 ** (alpha * (m + 1))) < 1e-12


def test_besov_constant_and_homogeneity(rng):
    g = CircleGrid(64)
    f = transform(np.full(64, -1.7), g)
    assert np.isclose(besov_norm(f, 0.3), 1.7)
    h = random_trig_field(rng, g)
    assert np.isclose(besov_norm(2.0 * h, 0.45), 2.0 * besov_norm(h, 0.45), rtol=1e-12)


def test_besov_holder_equivalence_band(rng):
    # on trig polynomials c1 * holder <= besov <= c2 * holder with stable band
    alpha = 0.45
    ratios = []
    for n in (64, 128, 256):
        g = CircleGrid(n)
        for _ in range(5):
            f = random_trig_field(rng, g, k_max=n // 4, decay=0.9)
            h = holder_seminorm(f.values()[0], alpha)
            b = besov_norm(f, alpha)
            ratios.append(b / h)
    assert 0.05 < min(ratios) and max(ratios) < 20.0
    assert max(ratios) / min(ratios) < 50.0


def test_besov_resolution_stability(rng):
    # coefficient decay k^-1 (regularity 1/2-): alpha=0.45 stable, 0.55 grows
    lo, hi = [], []
    for seed in range(5):
        r = np.random.default_rng(seed)
        amps = {}
        vals = {}
        for n in (64, 2048):
            rr = np.random.default_rng(seed)
            s = fractional_gaussian_samples(rr, n, alpha=0.5)
            f = transform(s, CircleGrid(n))
            vals[n] = f
        lo.append(besov_norm(vals[2048], 0.45) / besov_norm(vals[64], 0.45))
        hi.append(besov_norm(vals[2048], 0.55) / besov_norm(vals[64], 0.55))
    assert np.median(lo) < 1.6
    assert np.median(hi) > 1.25
    assert np.median(hi) > np.median(lo)


def test_dirichlet_order_zero_is_one():
    xs = np.linspace(-np.pi, np.pi, 7)
    assert np.allclose(dirichlet_kernel(0, xs), 1.0)


def test_dirichlet_value_at_origin():
    for n in range(1, 7):
        assert np.isclose(dirichlet_kernel(n, 0.0), (2.0 ** (n + 1) - 1) / SQRT_2PI)


def test_dirichlet_matches_mode_sum(rng):
    xs = rng.uniform(-np.pi, np.pi, 1000)
    for n in (1, 3, 5):
        ks = np.arange(-(2**n) + 1, 2**n)
        mode_sum = np.exp(1j * np.outer(xs, ks)).sum(axis=1).real / SQRT_2PI
        assert np.max(np.abs(dirichlet_kernel(n, xs) - mode_sum)) < 1e-12


def test_dirichlet_l2_growth_exponent():
    ns = np.arange(2, 9)
    norms = [dirichlet_lp_norm(n, 2.0) for n in ns]
    slope = np.polyfit(ns, np.log2(norms), 1)[0]
    assert abs(slope - 0.5) < 0.05


def test_holder_report_fields(rng):
    g = CircleGrid(64)
    f = random_trig_field(rng, g)
    report = holder_report(f, 0.45)
    assert report.grid_resolution == 64
    assert report.seminorm > 0 and report.sup_norm > 0 and report.besov_norm > 0
    text = report.as_text()
    assert "holder_seminorm" in text and "besov_norm" in text
