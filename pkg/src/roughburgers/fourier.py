"""Spectral representation of real fields on the circle.

Fields on the circle ``T = R/(2*pi*Z)`` are stored as complex Fourier
coefficients with the series convention

    u(x)     = (1/sqrt(2*pi)) * sum_k  u_hat(k) exp(i k x),
    u_hat(k) = (sqrt(2*pi)/N) * sum_j  u(x_j)   exp(-i k x_j),

on the uniform grid ``x_j = -pi + 2*pi*j/N``.  This is the one
normalisation used everywhere in the package; with it the coefficient of
a constant field ``c`` is ``u_hat(0) = sqrt(2*pi)*c`` and coefficients do
not rescale when a field is padded onto a finer grid.

Only wavenumbers ``|k| <= N/2 - 1`` are resolved by the operators.  The
Nyquist bin is stored (forced real) so that ``transform`` and ``values``
are mutually inverse bijections on sample space, but it has no
unambiguous trigonometric interpolant, and every multiplier operator
treats it as unresolved and zeroes it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "CircleGrid",
    "SpectralField",
    "MultiplierOperator",
    "SchemeDomainError",
    "transform",
    "apply_multiplier",
    "apply_derivative_physical",
    "heat_semigroup",
    "pad_modes",
    "truncate_modes",
    "dealias_grid_size",
    "good_grid_size",
]

SQRT_2PI = np.sqrt(2.0 * np.pi)


class SchemeDomainError(ValueError):
    """A multiplier symbol is undefined or inadmissible at a resolved mode."""


@dataclass(frozen=True)
class CircleGrid:
    """Uniform grid of N points on [-pi, pi), N even and >= 4."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 4 or n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 4, got {n}")

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_points

    @property
    def points(self) -> np.ndarray:
        return -np.pi + self.spacing * np.arange(self.n_points)

    @property
    def max_wavenumber(self) -> int:
        """Largest resolved wavenumber K = N/2 - 1."""
        return self.n_points // 2 - 1

    def wavenumbers(self) -> np.ndarray:
        """Signed integer wavenumbers in FFT layout (0, 1, ..., -1)."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(np.int64)


def _phase(grid: CircleGrid) -> np.ndarray:
    # exp(-i k x_0) = (-1)^k accounts for the grid starting at -pi.
    k = grid.wavenumbers()
    return np.where(k % 2 == 0, 1.0, -1.0)


@dataclass
class SpectralField:
    """A real vector-valued field stored as Fourier coefficients.

    ``coeffs`` has shape ``(dimension, N)`` in numpy FFT layout.  The
    field is real iff ``coeffs`` is conjugate-symmetric in k, which every
    constructor and operation in this module preserves; ``conjugate_defect``
    measures any violation.
    """

    coeffs: np.ndarray
    grid: CircleGrid

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[np.newaxis, :]
        if c.ndim != 2 or c.shape[1] != self.grid.n_points:
            raise ValueError(
                f"coefficient array shape {c.shape} does not match grid size {self.grid.n_points}"
            )
        c = c.copy()
        # the Nyquist bin is kept real so transform/values are mutually
        # inverse bijections on sample space; multiplier operators treat
        # it as unresolved and zero it
        ny = self.grid.n_points // 2
        c[:, ny] = c[:, ny].real
        self.coeffs = c

    @property
    def dimension(self) -> int:
        return self.coeffs.shape[0]

    def coeff(self, k: int, component: int = 0) -> complex:
        if abs(k) > self.grid.max_wavenumber:
            raise ValueError(f"wavenumber {k} not resolved on grid of size {self.grid.n_points}")
        return self.coeffs[component, k % self.grid.n_points]

    def values(self) -> np.ndarray:
        """Real samples on the field's own grid, shape (dimension, N)."""
        n = self.grid.n_points
        v = n / SQRT_2PI * np.fft.ifft(self.coeffs * _phase(self.grid), axis=1)
        return v.real

    def values_on(self, n_points: int) -> np.ndarray:
        """Samples of the trigonometric interpolant on a finer uniform grid."""
        return pad_modes(self, n_points).values()

    def conjugate_defect(self) -> float:
        """max |u_hat(-k) - conj(u_hat(k))| over stored modes."""
        n = self.grid.n_points
        idx = np.arange(1, n // 2)
        sym = np.max(np.abs(self.coeffs[:, -idx] - np.conj(self.coeffs[:, idx])))
        ny = np.max(np.abs(self.coeffs[:, n // 2].imag))
        return float(max(sym, ny))

    def copy(self) -> "SpectralField":
        return SpectralField(self.coeffs.copy(), self.grid)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if other.grid.n_points != self.grid.n_points:
            raise ValueError("grid mismatch")
        return SpectralField(self.coeffs + other.coeffs, self.grid)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if other.grid.n_points != self.grid.n_points:
            raise ValueError("grid mismatch")
        return SpectralField(self.coeffs - other.coeffs, self.grid)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.coeffs * scalar, self.grid)

    __rmul__ = __mul__


def transform(samples: np.ndarray, grid: CircleGrid) -> SpectralField:
    """Forward transform of real samples at the grid points.

    ``samples`` is (N,) or (dimension, N).  Raises ValueError on a length
    mismatch.  The inverse is ``SpectralField.values``; the round trip is
    exact to machine precision.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim == 1:
        s = s[np.newaxis, :]
    if s.ndim != 2 or s.shape[1] != grid.n_points:
        raise ValueError(
            f"sample array shape {np.shape(samples)} does not match grid size {grid.n_points}"
        )
    coeffs = SQRT_2PI / grid.n_points * _phase(grid) * np.fft.fft(s, axis=1)
    return SpectralField(coeffs, grid)


def from_function(fn: Callable[[np.ndarray], np.ndarray], grid: CircleGrid) -> SpectralField:
    """Sample ``fn`` on the grid and transform.  ``fn`` maps x-array to
    samples of shape (N,) or (dimension, N)."""
    return transform(np.asarray(fn(grid.points), dtype=float), grid)


@dataclass(frozen=True)
class MultiplierOperator:
    """A Fourier multiplier: acts diagonally as u_hat(k) -> symbol(k) u_hat(k).

    ``symbol`` must be vectorised over an integer wavenumber array and
    Hermitian (symbol(-k) = conj(symbol(k))) so that real fields stay real.
    ``epsilon`` is the approximation scale, 0 for exact operators.
    """

    kind: str
    symbol: Callable[[np.ndarray], np.ndarray]
    epsilon: float = 0.0


def identity_operator() -> MultiplierOperator:
    return MultiplierOperator("identity", lambda k: np.ones_like(k, dtype=float))


def exact_laplacian() -> MultiplierOperator:
    return MultiplierOperator("laplacian", lambda k: -(k.astype(float) ** 2))


def exact_derivative() -> MultiplierOperator:
    return MultiplierOperator("derivative", lambda k: 1j * k.astype(float))


def apply_multiplier(op: MultiplierOperator, u: SpectralField) -> SpectralField:
    k = u.grid.wavenumbers()
    sym = np.asarray(op.symbol(k)).astype(complex)
    sym[k == -(u.grid.n_points // 2)] = 0.0  # Nyquist is unresolved
    if not np.all(np.isfinite(sym)):
        bad = k[~np.isfinite(sym)]
        raise SchemeDomainError(
            f"{op.kind} symbol undefined at wavenumbers {bad[:5].tolist()} (epsilon={op.epsilon})"
        )
    return SpectralField(u.coeffs * sym, u.grid)


def _shifted_values(u: SpectralField, delta: float) -> np.ndarray:
    # Exact trigonometric-polynomial evaluation at x_j + delta (Nyquist
    # has no unambiguous interpolant and is dropped).
    k = u.grid.wavenumbers()
    phase = np.exp(1j * k * delta)
    phase[k == -(u.grid.n_points // 2)] = 0.0
    shifted = SpectralField(u.coeffs * phase, u.grid)
    return shifted.values()


def apply_derivative_physical(u: SpectralField, mu, epsilon: float) -> SpectralField:
    """Approximate derivative evaluated as an atom sum in physical space.

    Computes (1/epsilon) * sum_j c_j u(x + epsilon*y_j) with exact
    trigonometric interpolation for the off-grid shifts, so for
    band-limited fields this agrees with the Fourier-multiplier form of
    the same operator to machine precision.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if len(mu.atoms) == 0:
        raise SchemeDomainError("empty atomic measure")
    acc = np.zeros((u.dimension, u.grid.n_points))
    for y, c in mu.atoms:
        acc += c * _shifted_values(u, epsilon * y)
    return transform(acc / epsilon, u.grid)


def heat_semigroup(t: float, u: SpectralField, scheme=None, epsilon: float = 0.0) -> SpectralField:
    """Exact or approximate heat flow: u_hat(k) -> exp(-t k^2 m(eps*k)) u_hat(k).

    With ``scheme`` absent (or epsilon 0) this is the exact semigroup
    m == 1; otherwise m comes from ``scheme.m_fn``.  t = 0 is the identity.
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    k = u.grid.wavenumbers().astype(float)
    if scheme is None or epsilon == 0.0:
        m = np.ones_like(k)
    else:
        m = np.asarray(scheme.m_fn(epsilon * k), dtype=float)
        if np.any(m <= 0) or not np.all(np.isfinite(m)):
            raise SchemeDomainError("mass multiplier m(eps*k) must be positive and finite")
    return SpectralField(u.coeffs * np.exp(-t * k**2 * m), u.grid)


def pad_modes(u: SpectralField, n_points: int) -> SpectralField:
    """Zero-pad onto a finer grid; mode coefficients are unchanged."""
    if n_points < u.grid.n_points:
        raise ValueError("padding target must not be smaller than the source grid")
    if n_points == u.grid.n_points:
        return u.copy()
    grid = CircleGrid(n_points)
    out = np.zeros((u.dimension, n_points), dtype=complex)
    kmax = u.grid.max_wavenumber
    out[:, : kmax + 1] = u.coeffs[:, : kmax + 1]
    out[:, -kmax:] = u.coeffs[:, -kmax:]
    return SpectralField(out, grid)


def truncate_modes(u: SpectralField, n_points: int) -> SpectralField:
    """Drop modes beyond the coarser grid's resolution."""
    if n_points > u.grid.n_points:
        raise ValueError("truncation target must not be larger than the source grid")
    if n_points == u.grid.n_points:
        return u.copy()
    grid = CircleGrid(n_points)
    kmax = grid.max_wavenumber
    out = np.zeros((u.dimension, n_points), dtype=complex)
    out[:, : kmax + 1] = u.coeffs[:, : kmax + 1]
    out[:, -kmax:] = u.coeffs[:, -kmax:]
    return SpectralField(out, grid)


def good_grid_size(min_points: int) -> int:
    """Smallest even 5-smooth integer >= min_points (fast FFT sizes)."""
    n = max(4, int(min_points))
    if n % 2:
        n += 1
    while True:
        r = n
        for p in (2, 3, 5):
            while r % p == 0:
                r //= p
        if r == 1:
            return n
        n += 2


def dealias_grid_size(n_points: int) -> int:
    """Padded grid size for the 3/2-rule pointwise product."""
    return good_grid_size(int(np.ceil(1.5 * n_points)))
