import numpy as np
import pytest

from roughburgers import CircleGrid, SchemeSpec, SignedAtomicMeasure, transform


def quadratic_mass_scheme():
    """Forward-difference derivative with the stiffened mass m(x) = 1 + x^2."""
    return SchemeSpec(
        name="quadratic_mass",
        m_fn=lambda x: 1.0 + np.asarray(x, dtype=float) ** 2,
        h_fn=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        mu=SignedAtomicMeasure([(1.0, 1.0), (0.0, -1.0)]),
        c_m=0.9,
    )


def random_trig_field(rng, grid: CircleGrid, k_max=None, decay=1.5):
    """Random real band-limited field with power-law mode decay."""
    k_max = k_max or grid.max_wavenumber
    x = grid.points
    vals = np.zeros_like(x)
    for k in range(1, k_max + 1):
        amp = k ** (-decay)
        vals += amp * (rng.standard_normal() * np.sin(k * x) + rng.standard_normal() * np.cos(k * x))
    return transform(vals, grid)


def fractional_gaussian_samples(rng, n_points: int, alpha: float, k_max=None):
    """Gaussian circle field of Hölder regularity alpha (coefficient decay
    k^-(alpha + 1/2)), sampled on the uniform grid."""
    x = -np.pi + 2.0 * np.pi / n_points * np.arange(n_points)
    k_max = k_max or n_points // 2 - 1
    k = np.arange(1, k_max + 1)
    amps = k ** (-(alpha + 0.5))
    a = rng.standard_normal(k_max) * amps
    b = rng.standard_normal(k_max) * amps
    return np.sin(np.outer(x, k)) @ a + np.cos(np.outer(x, k)) @ b


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
