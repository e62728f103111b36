"""Tabulated matrix solutions on a shared spatial grid.

A :class:`Discretization` fixes the output grid for one potential: uniform
spacing within each smooth span, with every piece boundary and delta
location landed on exactly.  Solution fields store (psi, psi') per grid
point; psi' is double-valued at delta locations and the stored array holds
the right-sided value by convention, with left-sided values kept alongside.

Off-grid evaluation uses piecewise cubic Hermite interpolation from the
stored values and derivatives; grid quadrature uses the derivative-corrected
trapezoid rule, whose O(h^4) error constant integrates the same Hermite
error term exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import OutOfGrid
from .model import KIND_GRID, KIND_SECH_STAR, KIND_ZERO, PotentialModel

__all__ = [
    "Discretization",
    "SolutionField",
    "corrected_trapezoid",
    "cumulative_to_end",
    "discretize",
]


@dataclass
class Segment:
    """One smooth span: grid index range plus the kernel payload."""

    i_lo: int
    i_hi: int
    kind: int
    params: np.ndarray
    knots: np.ndarray
    coeffs: np.ndarray


_EMPTY_PARAMS = np.zeros(3)
_EMPTY_KNOTS = np.zeros(0)
_EMPTY_COEFFS = np.zeros((1, 1, 1, 1), dtype=np.complex128)


def _payload(piece):
    if piece is None or piece.kind == KIND_ZERO:
        return KIND_ZERO, _EMPTY_PARAMS, _EMPTY_KNOTS, _EMPTY_COEFFS
    if piece.kind == KIND_SECH_STAR:
        params = np.array([piece.scale, float(piece.row), float(piece.col)])
        return KIND_SECH_STAR, params, _EMPTY_KNOTS, _EMPTY_COEFFS
    return (KIND_GRID, _EMPTY_PARAMS, np.ascontiguousarray(piece.knots),
            np.ascontiguousarray(piece.coeffs))


@dataclass
class Discretization:
    """Shared output grid and smooth-segment decomposition for one model."""

    pot: PotentialModel
    x_max: float
    grid: np.ndarray
    segments: list[Segment]
    delta_indices: dict[int, int]  # grid index -> index into pot.deltas

    @property
    def m(self):
        return len(self.grid)

    def index_of(self, x):
        """Exact grid index of x, or -1 when x is not a grid point."""
        i = int(np.searchsorted(self.grid, x))
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(self.grid) and math.isclose(
                    self.grid[j], x, rel_tol=0.0, abs_tol=1e-12):
                return j
        return -1

    def interval_of(self, x):
        """Grid interval index i with grid[i] <= x <= grid[i+1]."""
        if x < self.grid[0] - 1e-12 or x > self.grid[-1] + 1e-12:
            raise OutOfGrid(f"x={x:g} outside [{self.grid[0]:g}, "
                            f"{self.grid[-1]:g}]")
        i = int(np.searchsorted(self.grid, x, side="right")) - 1
        return min(max(i, 0), len(self.grid) - 2)


def discretize(pot, grid_h=0.02, x_max=None):
    """Build the shared grid: uniform per smooth span, breakpoints exact."""
    horizon = float(x_max) if x_max is not None else pot.x_max
    breaks = [b for b in pot.breakpoints() if 0.0 <= b <= horizon]
    if not breaks or breaks[0] > 0.0:
        breaks.insert(0, 0.0)
    if breaks[-1] < horizon:
        breaks.append(horizon)
    # drop near-coincident breakpoints
    cleaned = [breaks[0]]
    for b in breaks[1:]:
        if b - cleaned[-1] > 1e-9:
            cleaned.append(b)
    xs = [np.array([0.0])]
    segments = []
    start_idx = 0
    for lo, hi in zip(cleaned[:-1], cleaned[1:]):
        count = max(2, int(math.ceil((hi - lo) / grid_h)) + 1)
        span = np.linspace(lo, hi, count)
        xs.append(span[1:])
        piece = pot.piece_at(0.5 * (lo + hi))
        kind, params, knots, coeffs = _payload(piece)
        end_idx = start_idx + count - 1
        segments.append(Segment(i_lo=start_idx, i_hi=end_idx, kind=kind,
                                params=params, knots=knots, coeffs=coeffs))
        start_idx = end_idx
    grid = np.concatenate(xs)
    delta_indices = {}
    for di, d in enumerate(pot.deltas):
        if d.x0 > horizon:
            continue
        gi = int(np.searchsorted(grid, d.x0))
        for j in (gi - 1, gi, gi + 1):
            if 0 <= j < len(grid) and math.isclose(grid[j], d.x0,
                                                   rel_tol=0.0,
                                                   abs_tol=1e-12):
                delta_indices[j] = di
                break
        else:
            raise AssertionError("delta location missing from grid")
    return Discretization(pot=pot, x_max=horizon, grid=grid,
                          segments=segments, delta_indices=delta_indices)


@dataclass
class SolutionField:
    """A matrix solution (psi, psi') tabulated on the shared grid."""

    k: complex
    kind: str
    disc: Discretization
    psi: np.ndarray          # (m, n, n); continuous through deltas
    psi_prime: np.ndarray    # (m, n, n); right-sided value at deltas
    psi_prime_left: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def n(self):
        return self.psi.shape[1]

    @property
    def grid(self):
        return self.disc.grid

    @property
    def jump_points(self):
        return [self.disc.grid[i] for i in sorted(self.psi_prime_left)]

    def deriv_at_index(self, i, side=1):
        if side < 0 and i in self.psi_prime_left:
            return self.psi_prime_left[i]
        return self.psi_prime[i]

    def _second_deriv(self, i, side=1):
        v = self.disc.pot.value(self.grid[i], side=side)
        return v @ self.psi[i] - (self.k ** 2) * self.psi[i]

    def at(self, x, side=1):
        """(psi, psi') at x; Hermite interpolation between grid points."""
        gi = self.disc.index_of(x)
        if gi >= 0:
            return self.psi[gi].copy(), self.deriv_at_index(gi, side).copy()
        i = self.disc.interval_of(x)
        x0, x1 = self.grid[i], self.grid[i + 1]
        h = x1 - x0
        t = (x - x0) / h
        p0, p1 = self.psi[i], self.psi[i + 1]
        d0 = self.deriv_at_index(i, side=1)
        d1 = self.deriv_at_index(i + 1, side=-1)
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        val = h00 * p0 + h10 * h * d0 + h01 * p1 + h11 * h * d1
        s0 = self._second_deriv(i, side=1)
        s1 = self._second_deriv(i + 1, side=-1)
        der = h00 * d0 + h10 * h * s0 + h01 * d1 + h11 * h * s1
        return val, der

    def value(self, x, side=1):
        return self.at(x, side)[0]

    def derivative(self, x, side=1):
        return self.at(x, side)[1]

    def prime_sides(self):
        """(right-sided, left-sided) psi' arrays over the whole grid."""
        right = self.psi_prime
        left = self.psi_prime.copy()
        for i, v in self.psi_prime_left.items():
            left[i] = v
        return right, left


def corrected_trapezoid(xs, g, gp_right, gp_left, i_lo=0, i_hi=None,
                        g_left=None):
    """Integrate grid data with the derivative-corrected trapezoid rule.

    Per interval: h/2 (g_i + g_{i+1}) + h^2/12 (g'_i - g'_{i+1}), with
    right-sided data at the left end and left-sided data at the right end,
    so one-sided jumps of g or g' at breakpoints are integrated correctly.
    ``g_left`` defaults to ``g`` (continuous integrand).  Error is
    O(h^5 g'''') per interval.
    """
    if i_hi is None:
        i_hi = len(xs) - 1
    if g_left is None:
        g_left = g
    h = (xs[i_lo + 1:i_hi + 1] - xs[i_lo:i_hi]).reshape(
        (-1,) + (1,) * (g.ndim - 1))
    seg = 0.5 * h * (g[i_lo:i_hi] + g_left[i_lo + 1:i_hi + 1]) \
        + (h * h / 12.0) * (gp_right[i_lo:i_hi] - gp_left[i_lo + 1:i_hi + 1])
    return seg.sum(axis=0)


def cumulative_to_end(xs, g, gp_right, gp_left, g_left=None):
    """Array Q with Q[i] = integral from xs[i] to xs[-1] of g."""
    if g_left is None:
        g_left = g
    h = (xs[1:] - xs[:-1]).reshape((-1,) + (1,) * (g.ndim - 1))
    seg = 0.5 * h * (g[:-1] + g_left[1:]) \
        + (h * h / 12.0) * (gp_right[:-1] - gp_left[1:])
    out = np.zeros_like(g)
    out[:-1] = seg[::-1].cumsum(axis=0)[::-1]
    return out
