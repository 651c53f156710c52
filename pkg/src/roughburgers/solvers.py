"""Exponential-Euler time stepping for the approximate and corrected SPDEs.

One step of the approximate equation advances the mode coefficients by

    u <- exp(nu dt Lap_eps) [u + dt (F(u) + G(u) D_eps u)] + sigma * (noise increment),

where the linear propagator is exact, the nonlinearity is evaluated
pointwise on a 3/2-dealiased grid, and the stochastic-convolution
increment is sampled exactly per mode from the same draws that advance
the coupled Gaussian noise state (so the linear sector has no splitting
error at all).  The corrected-limit stepper is the same map with exact
operators and the drift F_i - lambda * div G_i; it serves as the
reference integrator in convergence studies.

Trajectories stop rather than abort: NaN/overflow converts into a
blow-up event carrying the failure time, which the stopping monitors
treat as an immediate threshold crossing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import gaussian, norms, rough
from .fourier import (
    CircleGrid,
    SpectralField,
    dealias_grid_size,
    pad_modes,
    transform,
    truncate_modes,
)
from .gaussian import CoupledGaussianState, decay_factors, evolve
from .schemes import SchemeSpec, compute_lambda

__all__ = [
    "ProblemSpec",
    "TrajectoryState",
    "StoppingMonitor",
    "BlowUpError",
    "init_trajectory",
    "step_approximate",
    "step_corrected_limit",
    "monitor_stopping",
    "sup_norm",
    "correction_density",
    "CorrectionDensity",
    "burgers_problem",
    "linear_problem",
]


class BlowUpError(RuntimeError):
    """The field left the representable range; carries the failure time."""

    def __init__(self, time: float):
        super().__init__(f"field blew up at t={time}")
        self.time = time


@dataclass(frozen=True)
class ProblemSpec:
    """Reaction-transport problem data for d-dimensional fields.

    ``F`` maps values (n, M) -> (n, M); ``G`` maps values -> (n, n, M);
    ``div_G`` returns (sum_j dG_ij/du_j)_i with shape (n, M).  Either
    nonlinearity may be None (identically zero), which the steppers
    exploit to skip the dealiased product entirely.
    """

    name: str
    n: int
    F: Callable | None
    G: Callable | None
    div_G: Callable | None
    nu: float
    sigma: float
    initial_data: Callable[[np.ndarray], np.ndarray]

    @property
    def is_linear(self) -> bool:
        return self.F is None and self.G is None


def burgers_problem(nu: float = 1.0, sigma: float = 1.0, initial=None) -> ProblemSpec:
    """n = 1, F = 0, G(u) = u (so div G == 1), default data sin(x)."""
    return ProblemSpec(
        name="burgers",
        n=1,
        F=None,
        G=lambda u: u[np.newaxis, :, :],
        div_G=lambda u: np.ones_like(u),
        nu=nu,
        sigma=sigma,
        initial_data=initial or (lambda x: np.sin(x)[np.newaxis, :]),
    )


def linear_problem(nu: float = 1.0, sigma: float = 1.0, initial=None) -> ProblemSpec:
    """n = 1, F = G = 0: the stochastic heat equation (div G == 0, so the
    drift correction is a no-op)."""
    return ProblemSpec(
        name="linear",
        n=1,
        F=None,
        G=None,
        div_G=lambda u: np.zeros_like(u),
        nu=nu,
        sigma=sigma,
        initial_data=initial or (lambda x: np.sin(x)[np.newaxis, :]),
    )


@dataclass
class TrajectoryState:
    """One trajectory's field, clock and attached noise state."""

    field: SpectralField
    t: float
    noise: CoupledGaussianState
    scheme: SchemeSpec
    epsilon: float
    dt: float


def init_trajectory(
    problem: ProblemSpec,
    scheme: SchemeSpec,
    epsilon: float,
    grid: CircleGrid,
    dt: float,
    seed: int = 0,
) -> TrajectoryState:
    """Initial field from the problem data plus a fresh stationary noise state."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u0 = transform(problem.initial_data(grid.points), grid)
    if u0.dimension != problem.n:
        raise ValueError(
            f"initial data has {u0.dimension} components, problem has {problem.n}"
        )
    noise = gaussian.init_stationary(
        scheme, epsilon, grid, dim=problem.n, seed=seed, nu=problem.nu, sigma=problem.sigma
    )
    return TrajectoryState(field=u0, t=0.0, noise=noise, scheme=scheme, epsilon=epsilon, dt=dt)


def _cached_symbols(state: TrajectoryState, problem: ProblemSpec, exact: bool):
    key = ("symbols", state.epsilon, state.dt, state.field.grid.n_points, problem.nu, exact)
    cache = state.scheme._op_cache
    if key not in cache:
        grid = state.field.grid
        k = grid.wavenumbers()
        if exact:
            deriv = 1j * k.astype(float)
        else:
            deriv = state.scheme.derivative_symbol(state.epsilon, k)
        kmax = grid.max_wavenumber
        # zero-padded decay built from the noise state's rates so the
        # linear propagator is bitwise the solver == noise-state map
        a1, a2 = decay_factors(state.noise, state.dt)
        a = a1 if exact else a2
        decay = np.ones(grid.n_points)
        decay[1 : kmax + 1] = a
        decay[-kmax:] = a[::-1]
        cache[key] = (deriv, decay)
    return cache[key]


def _noise_mode_increment(noise_next: CoupledGaussianState, grid: CircleGrid, exact: bool):
    innov = noise_next.innov_eta if exact else noise_next.innov_eta_eps
    amps = np.ones_like(noise_next.q) if exact else noise_next.q
    pos = gaussian._mode_coeffs(noise_next, innov, amps).T  # (dim, K)
    kmax = noise_next.n_modes
    coeffs = np.zeros((noise_next.dim, grid.n_points), dtype=complex)
    coeffs[:, 1 : kmax + 1] = pos
    coeffs[:, -kmax:] = np.conj(pos[:, ::-1])
    coeffs[:, 0] = noise_next.sigma * noise_next.innov_w0
    return coeffs


def _nonlinearity(state: TrajectoryState, problem: ProblemSpec, deriv_symbol) -> np.ndarray:
    grid = state.field.grid
    mp = dealias_grid_size(grid.n_points)
    u_pad = pad_modes(state.field, mp)
    u_vals = u_pad.values()
    acc = np.zeros_like(u_vals)
    if problem.F is not None:
        acc += problem.F(u_vals)
    if problem.G is not None:
        du = SpectralField(state.field.coeffs * deriv_symbol, grid)
        du_vals = pad_modes(du, mp).values()
        acc += np.einsum("ij...,j...->i...", problem.G(u_vals), du_vals)
    return truncate_modes(transform(acc, CircleGrid(mp)), grid.n_points).coeffs


def _step(state: TrajectoryState, problem: ProblemSpec, exact: bool, lam: float) -> TrajectoryState:
    deriv, decay = _cached_symbols(state, problem, exact)
    c = state.field.coeffs
    # overflow inside the drift is a stopping event, not a crash
    with np.errstate(over="ignore", invalid="ignore"):
        if problem.is_linear and lam == 0.0:
            drift = 0.0
        else:
            nl = (
                _nonlinearity(state, problem, deriv)
                if not problem.is_linear
                else np.zeros_like(c)
            )
            if lam != 0.0:
                u_vals = state.field.values()
                corr = transform(lam * problem.div_G(u_vals), state.field.grid)
                nl = nl - corr.coeffs
            drift = state.dt * nl
        noise_next = evolve(state.noise, state.dt)
        new_coeffs = decay * (c + drift) + _noise_mode_increment(
            noise_next, state.field.grid, exact
        )
    if not np.all(np.isfinite(new_coeffs)):
        raise BlowUpError(state.t + state.dt)
    return replace(
        state,
        field=SpectralField(new_coeffs, state.field.grid),
        t=state.t + state.dt,
        noise=noise_next,
    )


def step_approximate(state: TrajectoryState, problem: ProblemSpec) -> TrajectoryState:
    """One exponential-Euler step of the approximate equation."""
    return _step(state, problem, exact=False, lam=0.0)


def step_corrected_limit(state: TrajectoryState, problem: ProblemSpec, lam: float) -> TrajectoryState:
    """One step of the corrected limit equation (exact operators,
    drift F - lambda * div G).  Requires the exact pseudo-scheme."""
    if not state.scheme.is_exact:
        raise ValueError("corrected-limit stepping requires the exact pseudo-scheme")
    if lam != 0.0 and problem.div_G is None:
        raise ValueError("correction requires div_G on the problem")
    return _step(state, problem, exact=True, lam=lam)


def sup_norm(field: SpectralField, oversample: int = 1) -> float:
    vals = field.values() if oversample <= 1 else field.values_on(oversample * field.grid.n_points)
    return float(np.max(np.sqrt(np.sum(vals**2, axis=0))))


@dataclass
class StoppingMonitor:
    threshold: float
    triggered_at: float | None = None

    @property
    def triggered(self) -> bool:
        return self.triggered_at is not None


def monitor_stopping(trajectory, threshold: float) -> StoppingMonitor:
    """First grid time with ||u(t)||_sup >= K over a sampled trajectory.

    ``trajectory`` is an iterable of TrajectoryState or (t, sup_norm)
    pairs.  Blow-up events recorded as (t, inf) trigger at that time.
    """
    monitor = StoppingMonitor(threshold=threshold)
    for item in trajectory:
        if isinstance(item, TrajectoryState):
            t, level = item.t, sup_norm(item.field)
        else:
            t, level = item
        if level >= threshold or not np.isfinite(level):
            monitor.triggered_at = float(t)
            break
    return monitor


# ---------------------------------------------------------------------------
# correction-density diagnostic


@dataclass
class CorrectionDensity:
    """Pointwise Lambda*Id - <D_eps X_eps, e_i (x) e_j> plus its
    negative-regularity Besov norm."""

    values: np.ndarray          # (n, n, N)
    besov: float
    lam: float
    gamma: float


def correction_density(
    state: CoupledGaussianState,
    scheme: SchemeSpec,
    epsilon: float,
    grid: CircleGrid,
    gamma: float = 0.4,
    lam: float | None = None,
) -> CorrectionDensity:
    """Evaluate the level-2 correction field of the approximate noise.

    Lifts X_eps(t, .) in space, applies the atom-sum derivative to the
    level-2 increments, and subtracts from lambda * delta_ij.  The norm
    is the Besov norm at regularity -gamma over the resolved blocks,
    maximised over components.
    """
    if scheme.is_exact:
        raise ValueError("correction density needs an atomic-measure scheme")
    if lam is None:
        lam, _ = compute_lambda(scheme, nu=state.nu, sigma=state.sigma)
    _, x_eps = gaussian.assemble_fields(state, grid)
    vals = x_eps.values()  # (n, N)
    crp = rough.lift_circle_field(vals.T, grid, p=2, mu=scheme.mu, epsilon=epsilon)
    n = state.dim
    out = np.empty((n, n, grid.n_points))
    besov = 0.0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            coeff = rough.d_eps_rough(crp, scheme.mu, epsilon, (i, j))
            h_ij = (lam if i == j else 0.0) - coeff
            out[i - 1, j - 1] = h_ij
            field = transform(h_ij, grid)
            besov = max(besov, norms.besov_norm(field, -gamma))
    return CorrectionDensity(values=out, besov=besov, lam=lam, gamma=gamma)
