"""Matrix ODE engine: Jost and companion solutions with their tail data.

All fields produced here share one discretization per (model, config) pair,
so values at the base point, Wronskian pairings, and grid quadrature line
up exactly.  Integration runs piecewise through the smooth spans of the
potential; at each delta location the derivative jump
psi'(x0+) - psi'(x0-) = gamma psi(x0) is applied between kernel calls and
both one-sided derivatives are recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoInvertiblePoint, OutOfDomain, StepFailure
from .fields import (
    Discretization,
    SolutionField,
    corrected_trapezoid,
    cumulative_to_end,
    discretize,
)
from .model import PotentialModel, matrix_norm

__all__ = [
    "SolverConfig",
    "ZeroEnergyBundle",
    "jost_field",
    "omega1_pair",
    "omega_field",
    "p_matrix",
    "regular_field",
    "wronskian_dagger",
    "zero_energy_bundle",
]


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs.

    ``rtol``/``atol`` are the per-step mixed error tolerances of the
    adaptive integrator; they are set near the double-precision floor
    (rather than the looser 1e-10 that would already meet most checks)
    because the exceptional-case scattering matrix at k ~ 1e-3 amplifies
    Jost-matrix errors by ~1/k.  ``grid_h`` is the output grid spacing,
    which also bounds the integrator step.  Direct Jost integration is
    refused below ``k_floor``; the small-k expansions serve that regime.
    """

    rtol: float = 1e-13
    atol: float = 1e-14
    grid_h: float = 0.015625
    k_floor: float = 1e-6
    max_steps: int = 2_000_000
    x_max: float | None = None
    cond_cap: float = 1e6
    rank_tol: float = 1e-9

    def discretization(self, pot):
        return discretize(pot, grid_h=self.grid_h, x_max=self.x_max)


def _drive(disc, ksq, i_from, i_to, y_init, cfg):
    """Integrate between two grid indices, through segments and deltas.

    Returns (psi, psi_prime, psi_prime_left) arrays covering only the
    traversed index range; entries outside it are zero.
    """
    grid = disc.grid
    n = y_init.shape[1]
    m = len(grid)
    psi = np.zeros((m, n, n), dtype=np.complex128)
    psip = np.zeros((m, n, n), dtype=np.complex128)
    psip_left = {}
    deltas = disc.pot.deltas

    y = np.ascontiguousarray(y_init, dtype=np.complex128)
    psi[i_from] = y[0]
    psip[i_from] = y[1]

    forward = i_to >= i_from
    if forward:
        segs = [s for s in disc.segments if s.i_hi > i_from and s.i_lo < i_to]
    else:
        segs = [s for s in disc.segments if s.i_lo < i_from and s.i_hi > i_to]
        segs.reverse()

    # handle a start point sitting exactly on a delta: moving left from it
    # starts on the left side of the jump
    if not forward and i_from in disc.delta_indices:
        d = deltas[disc.delta_indices[i_from]]
        psip_left[i_from] = y[1] - d.gamma @ y[0]
        y = np.array([y[0], psip_left[i_from]])

    for seg in segs:
        if forward:
            a = max(seg.i_lo, i_from)   # entry index of this call
            b = min(seg.i_hi, i_to)     # exit index
            if b <= a:
                continue
            xs = grid[a:b + 1]
        else:
            a = min(seg.i_hi, i_from)
            b = max(seg.i_lo, i_to)
            if a <= b:
                continue
            xs = grid[b:a + 1][::-1].copy()
        ys, status, _ = kernels.integrate_piece(
            y, xs, complex(ksq), seg.kind, seg.params, seg.knots, seg.coeffs,
            cfg.rtol, cfg.atol, cfg.max_steps)
        if status != kernels.STATUS_OK:
            raise StepFailure(
                f"integrator status {status} on [{xs[0]:g}, {xs[-1]:g}] "
                f"at k^2={ksq:g}")
        # fill everything except the entry index, which was stored when the
        # previous segment exited (with its proper one-sided derivative)
        if forward:
            psi[a + 1:b + 1] = ys[1:, 0]
            psip[a + 1:b + 1] = ys[1:, 1]
        else:
            psi[b:a] = ys[1:, 0][::-1]
            psip[b:a] = ys[1:, 1][::-1]
        y = ys[-1].copy()
        # crossing a delta: record both one-sided derivatives; the stored
        # array keeps the right-sided value by convention
        if b in disc.delta_indices:
            d = deltas[disc.delta_indices[b]]
            if forward:
                psip_left[b] = y[1].copy()        # arrived from the left
                y[1] = y[1] + d.gamma @ y[0]
                psip[b] = y[1]
            else:
                psip[b] = y[1]                    # arrived from the right
                psip_left[b] = y[1] - d.gamma @ y[0]
                if b != i_to:
                    y = np.array([y[0], psip_left[b]])
    return psi, psip, psip_left


def _check_k_domain(k, cfg, allow_zero=False):
    k = complex(k)
    if k.imag < -1e-14:
        raise OutOfDomain(f"Im k = {k.imag:g} < 0")
    if not allow_zero and abs(k) < cfg.k_floor:
        raise OutOfDomain(
            f"|k| = {abs(k):g} below the direct-integration floor "
            f"{cfg.k_floor:g}; use the zero-energy bundle and expansions")
    return k


def jost_field(pot, k, cfg=SolverConfig()):
    """Jost solution f(k, .), normalized to e^{ikx} I at the horizon."""
    k = _check_k_domain(k, cfg)
    disc = cfg.discretization(pot)
    n = pot.n
    phase = np.exp(1j * k * disc.x_max)
    y0 = np.zeros((2, n, n), dtype=np.complex128)
    y0[0] = phase * np.eye(n)
    y0[1] = 1j * k * phase * np.eye(n)
    psi, psip, left = _drive(disc, k * k, disc.m - 1, 0, y0, cfg)
    return SolutionField(k=k, kind="jost", disc=disc, psi=psi,
                         psi_prime=psip, psi_prime_left=left)


def _zero_field(pot, disc, cfg, kderiv):
    n = pot.n
    y0 = np.zeros((2, n, n), dtype=np.complex128)
    if kderiv:
        y0[0] = 1j * disc.x_max * np.eye(n)
        y0[1] = 1j * np.eye(n)
        kind = "jost_zero_kderiv"
    else:
        y0[0] = np.eye(n)
        kind = "jost_zero"
    psi, psip, left = _drive(disc, 0.0 + 0.0j, disc.m - 1, 0, y0, cfg)
    return SolutionField(k=0.0 + 0.0j, kind=kind, disc=disc, psi=psi,
                         psi_prime=psip, psi_prime_left=left)


@dataclass
class ZeroEnergyBundle:
    """Zero-energy pair plus the tail integrals the expansions consume."""

    f0: SolutionField
    f0dot: SolutionField
    a: float
    a_index: int
    q_tail: np.ndarray       # integral_a^xmax (f† f - I)
    trace_tail: np.ndarray   # integral_a^xmax (f - I)
    tail_note: float         # estimated contribution beyond x_max
    _q_cumulative: np.ndarray | None = None

    @property
    def n(self):
        return self.f0.n

    def f_at_a(self):
        return self.f0.psi[self.a_index], self.f0.psi_prime[self.a_index]

    def fdot_at_a(self):
        return self.f0dot.psi[self.a_index], self.f0dot.psi_prime[self.a_index]

    def q_integral_from_index(self, i):
        """integral from grid[i] to x_max of (f† f - I)."""
        return self._q_cumulative[i]


def zero_energy_bundle(pot, cfg=SolverConfig()):
    """Integrate f(0,.) and its k-derivative; pick the base point a."""
    disc = cfg.discretization(pot)
    f0 = _zero_field(pot, disc, cfg, kderiv=False)
    f0dot = _zero_field(pot, disc, cfg, kderiv=True)

    a_index = -1
    for i in range(disc.m):
        if i in disc.delta_indices:
            continue
        if np.linalg.cond(f0.psi[i]) <= cfg.cond_cap:
            a_index = i
            break
    if a_index < 0:
        raise NoInvertiblePoint(
            f"no grid point with cond(f(0,a)) <= {cfg.cond_cap:g}; "
            f"x_max={disc.x_max:g} is likely too small")

    xs = disc.grid
    eye = np.eye(pot.n)
    fr, fl = f0.prime_sides()
    g_q = np.einsum("mij,mik->mjk", f0.psi.conj(), f0.psi) - eye
    gp_q_r = np.einsum("mij,mik->mjk", fr.conj(), f0.psi) \
        + np.einsum("mij,mik->mjk", f0.psi.conj(), fr)
    gp_q_l = np.einsum("mij,mik->mjk", fl.conj(), f0.psi) \
        + np.einsum("mij,mik->mjk", f0.psi.conj(), fl)
    q_cum = cumulative_to_end(xs, g_q, gp_q_r, gp_q_l)

    g_t = f0.psi - eye
    trace_tail = corrected_trapezoid(xs, g_t, fr, fl, i_lo=a_index)

    # geometric extrapolation of |f† f - I| beyond the horizon
    tail_note = 0.0
    v_end = matrix_norm(g_q[-1])
    if v_end > 0.0:
        i_back = disc.interval_of(max(0.0, disc.x_max - 1.0))
        v_back = matrix_norm(g_q[i_back])
        if v_back > v_end:
            rate = np.log(v_back / v_end) / (xs[-1] - xs[i_back])
            tail_note = v_end / rate
        else:
            tail_note = np.inf

    bundle = ZeroEnergyBundle(f0=f0, f0dot=f0dot, a=float(xs[a_index]),
                              a_index=a_index, q_tail=q_cum[a_index],
                              trace_tail=trace_tail, tail_note=tail_note)
    bundle._q_cumulative = q_cum
    return bundle


def regular_field(pot, bc, k, cfg=SolverConfig()):
    """The solution with phi(k,0) = A, phi'(k,0) = B."""
    k = complex(k)
    disc = cfg.discretization(pot)
    y0 = np.array([bc.A, bc.B], dtype=np.complex128)
    psi, psip, left = _drive(disc, k * k, 0, disc.m - 1, y0, cfg)
    return SolutionField(k=k, kind="regular_phi", disc=disc, psi=psi,
                         psi_prime=psip, psi_prime_left=left)


def omega_field(pot, bundle, k, cfg=SolverConfig()):
    """The solution sharing zero-energy data at the base point a."""
    k = complex(k)
    disc = bundle.f0.disc
    ai = bundle.a_index
    fa, fpa = bundle.f_at_a()
    y0 = np.array([fa, fpa], dtype=np.complex128)
    psi_b, psip_b, left_b = _drive(disc, k * k, ai, 0, y0, cfg)
    psi_f, psip_f, left_f = _drive(disc, k * k, ai, disc.m - 1, y0, cfg)
    psi = psi_f
    psi[:ai] = psi_b[:ai]
    psip = psip_f
    psip[:ai] = psip_b[:ai]
    left = dict(left_b)
    left.update(left_f)
    return SolutionField(k=k, kind="omega", disc=disc, psi=psi,
                         psi_prime=psip, psi_prime_left=left)


def wronskian_dagger(field_f, field_g, x, side=1):
    """F(x)† G'(x) - F'(x)† G(x), both derivatives from the same side."""
    fv, fd = field_f.at(x, side=side)
    gv, gd = field_g.at(x, side=side)
    return fv.conj().T @ gd - fd.conj().T @ gv


def p_matrix(bundle, jost_k):
    """f(0,a)† f'(k,a) - f'(0,a)† f(k,a), evaluated at the base point."""
    ai = bundle.a_index
    fa, fpa = bundle.f_at_a()
    return fa.conj().T @ jost_k.psi_prime[ai] - fpa.conj().T @ jost_k.psi[ai]


def omega1_pair(bundle):
    """(omega_1(0), omega_1'(0)) from the quadratures G1, G2 on [0, a]."""
    ai = bundle.a_index
    f0, f0d = bundle.f0, bundle.f0dot
    n = bundle.n
    if ai == 0:
        z = np.zeros((n, n), dtype=np.complex128)
        return z, z.copy()
    xs = f0.grid
    fr, fl = f0.prime_sides()
    dr, dl = f0d.prime_sides()
    # G1 = int_a^0 fdot† f = -int_0^a;  G2 likewise with f† f
    g1 = np.einsum("mij,mik->mjk", f0d.psi.conj(), f0.psi)
    g1p_r = np.einsum("mij,mik->mjk", dr.conj(), f0.psi) \
        + np.einsum("mij,mik->mjk", f0d.psi.conj(), fr)
    g1p_l = np.einsum("mij,mik->mjk", dl.conj(), f0.psi) \
        + np.einsum("mij,mik->mjk", f0d.psi.conj(), fl)
    g2 = np.einsum("mij,mik->mjk", f0.psi.conj(), f0.psi)
    g2p_r = np.einsum("mij,mik->mjk", fr.conj(), f0.psi) \
        + np.einsum("mij,mik->mjk", f0.psi.conj(), fr)
    g2p_l = np.einsum("mij,mik->mjk", fl.conj(), f0.psi) \
        + np.einsum("mij,mik->mjk", f0.psi.conj(), fl)
    G1 = -corrected_trapezoid(xs, g1, g1p_r, g1p_l, i_lo=0, i_hi=ai)
    G2 = -corrected_trapezoid(xs, g2, g2p_r, g2p_l, i_lo=0, i_hi=ai)
    omega1 = f0.psi[0] @ G1 + f0d.psi[0] @ G2
    omega1_prime = f0.psi_prime[0] @ G1 + f0d.psi_prime[0] @ G2
    return omega1, omega1_prime
