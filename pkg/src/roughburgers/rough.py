"""Truncated tensor algebra over words, rough-path lifts and rough integrals.

Words are tuples of letters from {1, ..., n}.  A coefficient table maps
words to reals; the empty word's coefficient of any group-like element is
1 and is stored implicitly in the vectorised grid representation.

Conventions (fixed once, pinned by tests):

* ``<X(s,t), e_{w1...wk}>`` is the iterated integral with dX^{w1}
  innermost (earliest), so in Chen composition ``a (x) b`` the first
  factor owns the earlier subinterval and the word prefix:
  ``<a (x) b, e_w> = sum over splittings w = w1 w2 of <a, e_w1><b, e_w2>``.
* Lifts are exact chord signatures per grid step
  (coefficient ``prod_l  delta_{w_l} / |w|!`` for increment vector delta)
  composed by Chen's relation, hence group-like by construction.
* Both the shuffle and the concatenation product truncate to zero beyond
  the level cap p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Word",
    "all_words",
    "shuffle",
    "TensorElement",
    "identity_tensor",
    "chen_compose",
    "antipode",
    "GridRoughPath",
    "lift_path",
    "signature",
    "shuffle_defect",
    "integration_by_parts_check",
    "ControlledPath",
    "build_controlled_G",
    "rough_integral",
    "CircleRoughPath",
    "lift_circle_field",
    "d_eps_rough",
    "LiftResolutionError",
]

Word = tuple


class LiftResolutionError(ValueError):
    """The lift grid is too coarse to resolve the requested atom shifts."""


def all_words(n_letters: int, max_len: int, min_len: int = 1) -> list:
    """All words over {1..n_letters} with min_len <= |w| <= max_len,
    ordered by (length, lexicographic)."""
    words = []
    current = [()]
    for length in range(1, max_len + 1):
        current = [w + (a,) for w in current for a in range(1, n_letters + 1)]
        if length >= min_len:
            words.extend(current)
    if min_len == 0:
        words = [()] + words
    return words


@lru_cache(maxsize=None)
def _shuffle_cached(w: Word, wbar: Word) -> tuple:
    if not w:
        return ((wbar, 1),)
    if not wbar:
        return ((w, 1),)
    out: dict = {}
    for word, mult in _shuffle_cached(w[:-1], wbar):
        key = word + (w[-1],)
        out[key] = out.get(key, 0) + mult
    for word, mult in _shuffle_cached(w, wbar[:-1]):
        key = word + (wbar[-1],)
        out[key] = out.get(key, 0) + mult
    return tuple(sorted(out.items()))


def shuffle(w, wbar) -> dict:
    """Shuffle product of two words: all order-preserving interleavings
    with multiplicity, as a word -> count mapping."""
    return dict(_shuffle_cached(tuple(w), tuple(wbar)))


@dataclass
class TensorElement:
    """Element of the p-step truncated tensor algebra, stored sparsely."""

    level_cap: int
    coeffs: dict

    def coeff(self, w) -> float:
        return self.coeffs.get(tuple(w), 0.0)

    def words(self):
        return self.coeffs.keys()

    def is_group_like(self, tol: float = 1e-10, n_letters: int | None = None) -> bool:
        if abs(self.coeff(()) - 1.0) > tol:
            return False
        n = n_letters or max((max(w) for w in self.coeffs if w), default=1)
        for w in all_words(n, self.level_cap):
            for wbar in all_words(n, self.level_cap - len(w)):
                if shuffle_defect(self, w, wbar) > tol:
                    return False
        return True


def identity_tensor(level_cap: int) -> TensorElement:
    return TensorElement(level_cap, {(): 1.0})


def chen_compose(a: TensorElement, b: TensorElement) -> TensorElement:
    """Truncated concatenation product (Chen composition of increments)."""
    if a.level_cap != b.level_cap:
        raise ValueError(f"level caps differ: {a.level_cap} vs {b.level_cap}")
    out: dict = {}
    for w1, c1 in a.coeffs.items():
        for w2, c2 in b.coeffs.items():
            if len(w1) + len(w2) <= a.level_cap:
                w = w1 + w2
                out[w] = out.get(w, 0.0) + c1 * c2
    return TensorElement(a.level_cap, out)


def antipode(a: TensorElement) -> TensorElement:
    """Group inverse of a group-like element: reverse words, alternate signs."""
    out = {w[::-1]: (-1.0) ** len(w) * c for w, c in a.coeffs.items()}
    return TensorElement(a.level_cap, out)


def shuffle_defect(a: TensorElement, w, wbar) -> float:
    """|<a, e_w shuffle e_wbar> - <a, e_w><a, e_wbar>| (0 beyond the cap
    by the truncation convention)."""
    w, wbar = tuple(w), tuple(wbar)
    if len(w) + len(wbar) > a.level_cap:
        return 0.0
    lhs = sum(mult * a.coeff(word) for word, mult in shuffle(w, wbar).items())
    return abs(lhs - a.coeff(w) * a.coeff(wbar))


# ---------------------------------------------------------------------------
# grid rough paths


def _chord_signature_arrays(delta: np.ndarray, p: int) -> dict:
    # delta: (M, n) step increments; exact signature of a linear segment
    m, n = delta.shape
    out = {}
    for w in all_words(n, p):
        prod = np.ones(m)
        for letter in w:
            prod = prod * delta[:, letter - 1]
        out[w] = prod / math.factorial(len(w))
    return out


def _chen_arrays(a: dict, b: dict, words: list) -> dict:
    # empty-word coefficient 1 implicit in both factors
    out = {}
    for w in words:
        acc = a[w] + b[w]
        for i in range(1, len(w)):
            w1, w2 = w[:i], w[i:]
            acc = acc + a[w1] * b[w2]
        out[w] = acc
    return out


def _antipode_arrays(d: dict) -> dict:
    return {w[::-1]: (-1.0) ** len(w) * arr for w, arr in d.items()}


@dataclass
class GridRoughPath:
    """Rough-path lift of a sampled path: group-like one-step increments
    on an ordered grid, composable via Chen's relation."""

    grid: np.ndarray      # (M+1,) sample locations
    level_cap: int
    n_letters: int
    one_step: dict        # word -> (M,) array, <X(x_i, x_{i+1}), e_w>
    alpha: float | None = None

    @property
    def n_steps(self) -> int:
        return self.grid.size - 1

    def increment(self, i: int, j: int) -> TensorElement:
        """<X(x_i, x_j)> as a tensor element; j < i returns the group inverse."""
        if not (0 <= i <= self.n_steps and 0 <= j <= self.n_steps):
            raise ValueError(f"indices ({i}, {j}) outside grid of {self.n_steps} steps")
        if j < i:
            return antipode(self.increment(j, i))
        acc = identity_tensor(self.level_cap)
        words = all_words(self.n_letters, self.level_cap)
        for r in range(i, j):
            step = TensorElement(
                self.level_cap, {(): 1.0, **{w: self.one_step[w][r] for w in words}}
            )
            acc = chen_compose(acc, step)
        return acc

    def increments_with_shift(self, q: int) -> dict:
        """Vectorised <X(x_i, x_{i+q})> for all admissible i; q >= 1."""
        if q < 1:
            raise ValueError(f"shift must be >= 1, got {q}")
        if q > self.n_steps:
            raise LiftResolutionError(f"shift {q} exceeds {self.n_steps} lift steps")
        words = all_words(self.n_letters, self.level_cap)
        count = self.n_steps - q + 1
        acc = {w: self.one_step[w][:count].copy() for w in words}
        for r in range(1, q):
            step = {w: self.one_step[w][r : r + count] for w in words}
            acc = _chen_arrays(acc, step, words)
        return acc


def lift_path(samples, p: int, grid=None, alpha: float | None = None) -> GridRoughPath:
    """Canonical lift of sampled path values: exact chord signatures per
    step.  ``samples`` is (M+1,) or (M+1, n); ``grid`` defaults to
    0..M."""
    if p < 1:
        raise ValueError(f"level cap must be >= 1, got {p}")
    s = np.asarray(samples, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.shape[0] < 2:
        raise ValueError("need at least two sample points")
    if grid is None:
        grid = np.arange(s.shape[0], dtype=float)
    grid = np.asarray(grid, dtype=float)
    if grid.shape != (s.shape[0],):
        raise ValueError("grid length must match the sample count")
    delta = np.diff(s, axis=0)
    return GridRoughPath(
        grid=grid,
        level_cap=p,
        n_letters=s.shape[1],
        one_step=_chord_signature_arrays(delta, p),
        alpha=alpha,
    )


def signature(rp: GridRoughPath) -> TensorElement:
    """Signature of the whole sampled interval."""
    return rp.increment(0, rp.n_steps)


def integration_by_parts_check(rp: GridRoughPath, i: int, j: int, s: int, t: int) -> float:
    """|<X, e_i e_j> + <X, e_j e_i> - X^i(s,t) X^j(s,t)| at grid indices s, t."""
    inc = rp.increment(s, t)
    lhs = inc.coeff((i, j)) + inc.coeff((j, i))
    rhs = inc.coeff((i,)) * inc.coeff((j,))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# controlled paths and rough integration


@dataclass
class ControlledPath:
    """Coefficient tables <Y(x), e_w> for |w| <= p - 1 at every grid point."""

    base: GridRoughPath
    coeffs: dict   # word (incl. ()) -> (M+1,) array

    def coeff_at(self, w, idx: int) -> float:
        return float(self.coeffs[tuple(w)][idx])


def build_controlled_G(u_samples, rp: GridRoughPath, g_derivs, p: int | None = None) -> ControlledPath:
    """Controlled path of G(u) along the lift of u.

    The coefficient of word w is D^w G(u(x)) with unit combinatorial
    constants: the symmetrised Taylor expansion combined with the shuffle
    identity already absorbs the 1/k! factors into the iterated
    integrals (the gradient chain-rule test pins this convention).

    ``g_derivs`` is a sequence [G, G', G'', ...] for scalar paths, or a
    mapping word -> callable for vector paths.  A missing derivative
    order raises ValueError.
    """
    p = p or rp.level_cap
    u = np.asarray(u_samples, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.shape[0] != rp.grid.size:
        raise ValueError("sample count does not match the rough path grid")
    coeffs = {}
    if isinstance(g_derivs, dict):
        getter = lambda w: g_derivs[w]
    else:
        seq = list(g_derivs)
        if rp.n_letters != 1:
            raise ValueError("sequence-of-derivatives form requires a scalar path")
        if len(seq) < p:
            raise ValueError(f"need derivatives up to order {p - 1}, got {len(seq) - 1}")
        getter = lambda w: seq[len(w)]
    for w in all_words(rp.n_letters, p - 1, min_len=0):
        try:
            fn = getter(w)
        except KeyError:
            raise ValueError(f"missing derivative for word {w}") from None
        vals = fn(u[:, 0] if rp.n_letters == 1 else u)
        coeffs[w] = np.broadcast_to(np.asarray(vals, dtype=float), (u.shape[0],)).copy()
    return ControlledPath(rp, coeffs)


def controlled_remainder(y: ControlledPath, rp: GridRoughPath, w, s: int, t: int) -> float:
    """Remainder R_Y^w(s, t) of the controlled expansion at word w.

    R_Y^w(s,t) = <Y(t), e_w> - sum over words wbar with |wbar| <= p-1-|w|
    of <Y(s), e_wbar (x) e_w> <X(s,t), e_wbar>.  Diagnostic only: the
    rough integral never consumes it, but its size against
    |t-s|^((p-|w|) alpha) is the controlledness certificate.
    """
    w = tuple(w)
    inc = rp.increment(s, t)
    p = rp.level_cap
    total = y.coeffs[w][t]
    for wbar in all_words(rp.n_letters, p - 1 - len(w), min_len=0):
        key = wbar + w
        if key in y.coeffs:
            total -= y.coeffs[key][s] * inc.coeff(wbar)
    return float(total)


def compensated_cell(y: ControlledPath, rp: GridRoughPath, letter: int, u: int, v: int) -> float:
    """Xi_letter(u, v): the one-cell compensated Riemann term."""
    inc = rp.increment(u, v)
    total = 0.0
    for w, table in y.coeffs.items():
        total += table[u] * inc.coeff(w + (letter,))
    return total


def rough_integral(y: ControlledPath, rp: GridRoughPath, letter: int, s: int, t: int) -> float:
    """Compensated-sum rough integral of Y against dX^letter over grid
    indices [s, t], evaluated on the finest grid partition.

    Additive over consecutive intervals by construction (same cells).
    """
    if y.base is not rp and y.base.grid.shape != rp.grid.shape:
        raise ValueError("controlled path and rough path live on different grids")
    if not 0 <= s <= t <= rp.n_steps:
        raise ValueError(f"invalid index range ({s}, {t})")
    total = 0.0
    for w, table in y.coeffs.items():
        key = w + (letter,)
        if key not in rp.one_step:
            continue
        total += float(np.dot(table[s:t], rp.one_step[key][s:t]))
    return total


# ---------------------------------------------------------------------------
# D_eps applied to rough paths over the circle


@dataclass
class CircleRoughPath:
    """Lift of a circle field on a periodically extended uniform grid.

    ``base_offset`` is the node index of the circle point x_0 = -pi; the
    n_base base nodes cover one fundamental domain.
    """

    rp: GridRoughPath
    n_base: int
    base_offset: int
    spacing: float


def _atom_shift_steps(mu, epsilon: float, spacing: float) -> dict:
    shifts = {}
    for y, c in mu.atoms:
        q = epsilon * y / spacing
        q_int = int(round(q))
        if abs(q - q_int) > 1e-8 * max(1.0, abs(q)):
            raise LiftResolutionError(
                f"atom shift eps*y = {epsilon * y!r} is not an integer multiple "
                f"of the lift spacing {spacing!r}"
            )
        shifts[(y, c)] = q_int
    return shifts


def lift_circle_field(values, grid, p: int, mu, epsilon: float, alpha=None) -> CircleRoughPath:
    """Lift field samples on the circle grid, extended periodically far
    enough that every atom shift eps*y_j stays on the lift grid."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    n = grid.n_points
    if v.shape[0] != n:
        raise ValueError("value count does not match the circle grid")
    spacing = grid.spacing
    shifts = _atom_shift_steps(mu, epsilon, spacing)
    left = max(0, -min(shifts.values()))
    right = max(0, max(shifts.values()))
    idx = np.arange(-left, n + right + 1) % n
    extended = v[idx]
    x = -np.pi + spacing * np.arange(-left, n + right + 1)
    crp = CircleRoughPath(
        rp=lift_path(extended, p, grid=x, alpha=alpha),
        n_base=n,
        base_offset=left,
        spacing=spacing,
    )
    return crp


def d_eps_rough(crp: CircleRoughPath, mu, epsilon: float, w) -> np.ndarray:
    """<D_eps X(.; y), e_w> on the circle grid: the atom sum
    (1/eps) sum_j c_j <X(y, y + eps z_j), e_w> of lifted increments."""
    w = tuple(w)
    if len(w) > crp.rp.level_cap:
        raise ValueError(f"word {w} exceeds the lift level cap {crp.rp.level_cap}")
    shifts = _atom_shift_steps(mu, epsilon, crp.spacing)
    out = np.zeros(crp.n_base)
    base = np.arange(crp.base_offset, crp.base_offset + crp.n_base)
    for (y, c), q in shifts.items():
        if q == 0 or len(w) == 0:
            continue  # identity increment carries no word of length >= 1
        if q > 0:
            inc = crp.rp.increments_with_shift(q)
            out += c * inc[w][base]
        else:
            inc = _antipode_arrays(crp.rp.increments_with_shift(-q))
            out += c * inc[w][base + q]
    return out / epsilon
