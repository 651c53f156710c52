"""Exact spectral simulation of the coupled reference/approximate noise fields.

The reference field X is the stationary heat-noise field on the circle
(each Fourier mode a stationary Ornstein-Uhlenbeck process plus a shared
Brownian zero mode); the approximate field X_eps replaces the mode decay
rates k^2 by k^2 m(eps*k) and filters the noise amplitude by h(eps*k).
Both are driven by the same cylindrical Wiener process, which is realised
per mode, per sin/cos channel and per vector component as an exact joint
Gaussian law for the normalised pair (eta, eta_eps):

    stationary marginals   N(0, 1),
    stationary correlation rho_k = 2 sqrt(lam * lam_eps) / (lam + lam_eps),
    one-step conditional   means  (e^{-lam dt} eta, e^{-lam_eps dt} eta_eps),
    innovation covariance  Var_i = 1 - e^{-2 lam_i dt},
                           Cov   = 2 sqrt(lam lam_eps) (1 - e^{-(lam+lam_eps) dt})/(lam+lam_eps),

with lam = nu k^2 and lam_eps = nu k^2 m(eps k).  Sampling the joint
conditional law exactly preserves both marginal laws at any step size and
makes the same-noise coupling degenerate exactly (eta_eps == eta) when
m == h == 1.

Random numbers come from counter-based streams keyed by (seed, step) with
a mode-major layout, so a trajectory resolving fewer modes consumes a
prefix of the same stream: results are independent of evaluation order,
thread count, and of how many modes other trajectories resolve.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fourier import CircleGrid, SpectralField
from .schemes import SchemeSpec

__all__ = [
    "ModeState",
    "CoupledGaussianState",
    "init_stationary",
    "evolve",
    "assemble_fields",
    "noise_stream",
    "decay_factors",
]


def noise_stream(seed: int, step: int) -> np.random.Generator:
    """Counter-based generator for one (seed, step) cell of the noise grid."""
    return np.random.Generator(
        np.random.Philox(key=[np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(step)])
    )


def _draw(seed: int, step: int, n_modes: int, dim: int):
    """Layout-stable draws: w0 block first, then (mode, component, channel, 2)."""
    rng = noise_stream(seed, step)
    zw = rng.standard_normal(dim)
    z = rng.standard_normal((n_modes, dim, 2, 2))
    return zw, z[..., 0], z[..., 1]


@dataclass
class ModeState:
    """Per-mode view: unit-variance channel pairs and their OU parameters."""

    k: int
    eta: np.ndarray        # (dim, 2): sin channel, cos channel
    eta_eps: np.ndarray
    rate: float            # nu * k^2
    rate_eps: float        # nu * k^2 * m(eps k)
    amp: float             # 1
    amp_eps: float         # q_k = h(eps k) / sqrt(m(eps k))


@dataclass
class CoupledGaussianState:
    """Joint state of the reference and approximate noise fields.

    Treated as immutable: ``evolve`` returns a fresh state.  The last
    step's unit-variance innovations are retained (``innov_*``) so a
    solver can consume exactly the noise increments that advanced the
    state.
    """

    scheme: SchemeSpec
    epsilon: float
    grid: CircleGrid
    dim: int
    seed: int
    nu: float
    sigma: float
    time: float
    step_index: int
    k: np.ndarray          # (K,)
    lam: np.ndarray        # (K,)
    lam_eps: np.ndarray    # (K,)
    q: np.ndarray          # (K,)  h/sqrt(m), signed
    rho: np.ndarray        # (K,)  stationary correlation
    degenerate: np.ndarray  # (K,) bool: exact coupling, eta_eps kept == eta
    eta: np.ndarray        # (K, dim, 2)
    eta_eps: np.ndarray
    w0: np.ndarray         # (dim,)
    innov_eta: np.ndarray | None = None
    innov_eta_eps: np.ndarray | None = None
    innov_w0: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return self.k.size

    def mode_state(self, k: int) -> ModeState:
        i = k - 1
        return ModeState(
            k=k,
            eta=self.eta[i].copy(),
            eta_eps=self.eta_eps[i].copy(),
            rate=float(self.lam[i]),
            rate_eps=float(self.lam_eps[i]),
            amp=1.0,
            amp_eps=float(self.q[i]),
        )

    def dump_modes(self, path) -> None:
        """Debug dump: one CSV row per (mode, component, channel)."""
        with open(path, "w") as fh:
            fh.write("k,component,channel,eta,eta_eps\n")
            for i, k in enumerate(self.k):
                for c in range(self.dim):
                    for ch, name in enumerate(("sin", "cos")):
                        fh.write(
                            f"{int(k)},{c},{name},{self.eta[i, c, ch]!r},{self.eta_eps[i, c, ch]!r}\n"
                        )


def _mode_parameters(scheme: SchemeSpec, epsilon: float, grid: CircleGrid, nu: float):
    k = np.arange(1, grid.max_wavenumber + 1, dtype=float)
    if scheme.is_exact or epsilon == 0.0:
        m = np.ones_like(k)
        h = np.ones_like(k)
    else:
        m = np.asarray(scheme.m_fn(epsilon * k), dtype=float)
        h = np.asarray(scheme.h_fn(epsilon * k), dtype=float)
    if np.any(m <= 0):
        raise ValueError(f"scheme '{scheme.name}': m(eps*k) must be positive on resolved modes")
    lam = nu * k**2
    lam_eps = nu * k**2 * m
    q = np.where(h == 0.0, 0.0, h / np.sqrt(m))
    rho = np.where(h == 0.0, 0.0, 2.0 * np.sqrt(lam * lam_eps) / (lam + lam_eps))
    degenerate = (lam_eps == lam) & (h == 1.0)
    return k, lam, lam_eps, q, rho, degenerate


def init_stationary(
    scheme: SchemeSpec,
    epsilon: float,
    grid: CircleGrid,
    dim: int = 1,
    seed: int = 0,
    nu: float = 1.0,
    sigma: float = 1.0,
) -> CoupledGaussianState:
    """Draw (X, X_eps) from their exact joint stationary law at time 0.

    Every eta component is marginally N(0, 1); the (eta, eta_eps) pair has
    the closed-form shared-noise correlation rho_k.  The Brownian zero
    mode starts at 0.
    """
    k, lam, lam_eps, q, rho, degenerate = _mode_parameters(scheme, epsilon, grid, nu)
    _, z1, z2 = _draw(seed, 0, k.size, dim)
    rho_col = rho[:, None, None]
    eta = z1
    eta_eps = rho_col * z1 + np.sqrt(np.maximum(0.0, 1.0 - rho_col**2)) * z2
    eta_eps = np.where(degenerate[:, None, None], eta, eta_eps)
    return CoupledGaussianState(
        scheme=scheme,
        epsilon=epsilon,
        grid=grid,
        dim=dim,
        seed=seed,
        nu=nu,
        sigma=sigma,
        time=0.0,
        step_index=0,
        k=k,
        lam=lam,
        lam_eps=lam_eps,
        q=q,
        rho=rho,
        degenerate=degenerate,
        eta=eta,
        eta_eps=eta_eps,
        w0=np.zeros(dim),
    )


def decay_factors(state: CoupledGaussianState, dt: float):
    """One-step mean-reversion factors (e^{-lam dt}, e^{-lam_eps dt}).

    Shared with the SPDE steppers so that the solver's linear propagator
    is bitwise the same expression as the noise state's.
    """
    return np.exp(-state.lam * dt), np.exp(-state.lam_eps * dt)


def innovation_covariance(state: CoupledGaussianState, dt: float):
    """(var1, var2, cov) of the unit-variance channel innovations."""
    lam, lam_eps = state.lam, state.lam_eps
    var1 = -np.expm1(-(lam + lam) * dt)
    var2 = -np.expm1(-(lam_eps + lam_eps) * dt)
    cov = np.where(
        state.q == 0.0,
        0.0,
        2.0 * np.sqrt(lam * lam_eps) * (-np.expm1(-(lam + lam_eps) * dt)) / (lam + lam_eps),
    )
    return var1, var2, cov


def evolve(state: CoupledGaussianState, dt: float) -> CoupledGaussianState:
    """Advance both fields by dt with one exact joint conditional draw.

    Identical (seed, step) always reproduce identical draws; with the
    exact scheme the approximate channels stay bitwise equal to the
    reference channels.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    a1, a2 = decay_factors(state, dt)
    var1, var2, cov = innovation_covariance(state, dt)
    zw, z1, z2 = _draw(state.seed, state.step_index + 1, state.n_modes, state.dim)

    s1 = np.sqrt(var1)
    j1 = s1[:, None, None] * z1
    beta = cov / var1                      # regression coefficient of J2 on J1
    resid = np.sqrt(np.maximum(0.0, var2 - cov**2 / var1))
    j2 = beta[:, None, None] * j1 + resid[:, None, None] * z2
    j2 = np.where(state.degenerate[:, None, None], j1, j2)

    eta = a1[:, None, None] * state.eta + j1
    eta_eps = a2[:, None, None] * state.eta_eps + j2
    eta_eps = np.where(state.degenerate[:, None, None], eta, eta_eps)
    jw = np.sqrt(dt) * zw

    return replace(
        state,
        time=state.time + dt,
        step_index=state.step_index + 1,
        eta=eta,
        eta_eps=eta_eps,
        w0=state.w0 + jw,
        innov_eta=j1,
        innov_eta_eps=j2,
        innov_w0=jw,
    )


def _mode_coeffs(state: CoupledGaussianState, channel_pairs: np.ndarray, amps: np.ndarray):
    # channel_pairs: (K, dim, 2) -> complex coefficients u_hat(k), k = 1..K
    scale = state.sigma / np.sqrt(state.nu)
    return (
        scale
        * (amps / state.k)[:, None]
        * 0.5
        * (channel_pairs[:, :, 1] - 1j * channel_pairs[:, :, 0])
    )


def assemble_fields(state: CoupledGaussianState, grid: CircleGrid | None = None):
    """Realise (X, X_eps) as spectral fields.

    In the package's series convention the mode coefficients are
    u_hat(k) = sigma/sqrt(nu) * amp_k / k * (eta_cos - i eta_sin)/2 with
    amp 1 for X and q_k for X_eps, plus the shared zero mode sigma * w0.
    Passing a finer ``grid`` zero-pads; the state's own resolution is the
    default.
    """
    grid = grid or state.grid
    if grid.max_wavenumber < state.n_modes:
        raise ValueError("assembly grid resolves fewer modes than the state carries")
    kmax = state.n_modes

    def build(channel_pairs, amps):
        coeffs = np.zeros((state.dim, grid.n_points), dtype=complex)
        pos = _mode_coeffs(state, channel_pairs, amps).T  # (dim, K)
        coeffs[:, 1 : kmax + 1] = pos
        coeffs[:, -kmax:] = np.conj(pos[:, ::-1])
        coeffs[:, 0] = state.sigma * state.w0
        return SpectralField(coeffs, grid)

    x = build(state.eta, np.ones_like(state.q))
    x_eps = build(state.eta_eps, state.q)
    return x, x_eps
