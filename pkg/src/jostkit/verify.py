"""Named verification suites: Wronskian relations, solution identities,
and small-k expansion order checks.

Each check returns a :class:`CheckResult`; residual checks pass when the
measured value stays below the threshold, order checks pass when the
normalized residual sequence keeps shrinking by the required factor per
k-halving.  The suites run on any validated model, adapting the expansion
checks to the generic or exceptional regime of its J(0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import RankAmbiguous
from .fields import corrected_trapezoid, cumulative_to_end
from .scattering import big_j, jost_matrix, jost_matrix_from_field, s_grid
from .smallk import (
    classify,
    exceptional_expansion,
    generic_expansion,
    jost_zero_pair,
    make_order_check,
    ratio_expansion,
)
from .solve import (
    SolverConfig,
    jost_field,
    omega_field,
    p_matrix,
    regular_field,
    wronskian_dagger,
    zero_energy_bundle,
)

__all__ = ["CheckResult", "run_suites", "suite_expansions",
           "suite_identities", "suite_wronskian"]

ORDER_KS = [0.1 * 2.0 ** (-m) for m in range(7)]


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    kind: str = "residual"   # residual: value <= threshold
    #                          order: value (min ratio) >= threshold

    def line(self):
        state = "PASS" if self.passed else "FAIL"
        rel = "<=" if self.kind == "residual" else ">="
        return (f"{self.name:<58s} {self.value:>12.3e} {rel} "
                f"{self.threshold:<9.1e} {state}")


def _res(name, value, threshold):
    return CheckResult(name=name, value=float(value),
                       threshold=threshold, passed=bool(value <= threshold))


def _order(check, name=None):
    return CheckResult(name=name or check.name, value=check.min_ratio,
                       threshold=check.required_ratio, passed=check.passed,
                       kind="order")


def _mabs(m):
    return float(np.abs(m).max())


def suite_wronskian(pot, bc, cfg=SolverConfig()):
    """Wronskian relations and x-constancy of the pairing."""
    out = []
    eye = np.eye(pot.n)
    xs_probe = [0.0, 1.7, 0.5 * pot.x_max]
    for k in (0.7, 1.3):
        f = jost_field(pot, k, cfg)
        worst = max(_mabs(wronskian_dagger(f, f, x) - 2j * k * eye)
                    for x in xs_probe)
        out.append(_res(f"wronskian [f(k)†; f(k)] = 2ik I (k={k:g})",
                        worst, 1e-8))
    kc = 0.4 + 0.3j
    f_plus = jost_field(pot, kc, cfg)
    f_mstar = jost_field(pot, -np.conj(kc), cfg)
    worst = max(_mabs(wronskian_dagger(f_mstar, f_plus, x)) for x in xs_probe)
    out.append(_res("wronskian [f(-k*)†; f(k)] = 0 (k=0.4+0.3i)", worst, 1e-8))

    k = 0.9
    phi = regular_field(pot, bc, k, cfg)
    fm = jost_field(pot, -k, cfg)
    j_ref = jost_matrix_from_field(fm, bc)
    worst = max(_mabs(wronskian_dagger(fm, phi, x) - j_ref) for x in xs_probe)
    out.append(_res("Jost pairing [f(-k*)†; phi(k)] independent of x",
                    worst, 1e-8))

    bundle = zero_energy_bundle(pot, cfg)
    fk = jost_field(pot, 0.37, cfg)
    om = omega_field(pot, bundle, -0.37, cfg)
    p_ref = p_matrix(bundle, fk)
    worst = max(_mabs(wronskian_dagger(om, fk, x) - p_ref)
                for x in (bundle.a, bundle.a + 2.0))
    out.append(_res("P(k) Wronskian independent of x", worst, 1e-8))
    return out


def _moment_identity_arrays(pot, bundle, power):
    """One-sided grid arrays of g = y^power V(y) f(0,y) and g'."""
    f0 = bundle.f0
    xs = f0.grid
    m = len(xs)
    n = pot.n
    g_r = np.zeros((m, n, n), dtype=np.complex128)
    g_l = np.zeros_like(g_r)
    gp_r = np.zeros_like(g_r)
    gp_l = np.zeros_like(g_r)
    fr, fl = f0.prime_sides()
    for i, x in enumerate(xs):
        for side, g, gp in ((1, g_r, gp_r), (-1, g_l, gp_l)):
            v = pot.value(x, side=side)
            vp = pot.derivative(x, side=side)
            fp = fr[i] if side > 0 else fl[i]
            vf = v @ f0.psi[i]
            g[i] = (x ** power) * vf
            gp[i] = (power * x ** (power - 1) if power else 0.0) * vf \
                + (x ** power) * (vp @ f0.psi[i] + v @ fp)
    return g_r, g_l, gp_r, gp_l


def suite_identities(pot, bc, cfg=SolverConfig()):
    """Zero-energy integral identities, the 2n x 2n inverse, unitarity."""
    out = []
    n = pot.n
    eye = np.eye(n)
    bundle = zero_energy_bundle(pot, cfg)
    f0 = bundle.f0
    f0d = bundle.f0dot
    xs = f0.grid

    # block identity between the bounded/unbounded pair (all grid rows)
    rng = np.random.default_rng(7)
    idxs = rng.choice(len(xs), size=min(20, len(xs)), replace=False)
    worst = 0.0
    for i in idxs:
        top = np.hstack([f0.psi[i], f0d.psi[i]])
        bot = np.hstack([f0.psi_prime[i], f0d.psi_prime[i]])
        big = np.vstack([top, bot])
        comp = np.vstack([
            np.hstack([f0d.psi_prime[i].conj().T, -f0d.psi[i].conj().T]),
            np.hstack([f0.psi_prime[i].conj().T, -f0.psi[i].conj().T])])
        worst = max(worst, _mabs(big @ comp + 1j * np.eye(2 * n)))
    out.append(_res("pair identity [f, fdot; f', fdot'] inverse", worst, 1e-8))

    # integral identities for the moments of V f(0, .)
    fr, fl = f0.prime_sides()
    trace_cum = cumulative_to_end(xs, f0.psi - eye, fr, fl)
    probes = sorted({0.0, bundle.a, min(1.5, 0.9 * pot.x_max)})
    for power in (0, 1, 2):
        g_r, g_l, gp_r, gp_l = _moment_identity_arrays(pot, bundle, power)
        worst = 0.0
        for x in probes:
            i = f0.disc.index_of(x)
            if i < 0:
                continue
            lhs = corrected_trapezoid(xs, g_r, gp_r, gp_l, i_lo=i,
                                      g_left=g_l)
            for d in pot.deltas:
                if d.x0 > x:
                    fx = f0.value(d.x0)
                    lhs = lhs + (d.x0 ** power) * (d.gamma @ fx)
            fx, fpx = f0.psi[i], f0.psi_prime[i]
            if power == 0:
                rhs = -fpx
            elif power == 1:
                rhs = -eye + fx - x * fpx
            else:
                rhs = -x * x * fpx + 2 * x * (fx - eye) + 2 * trace_cum[i]
            worst = max(worst, _mabs(lhs - rhs))
        out.append(_res(f"moment-{power} integral identity of V f(0,.)",
                        worst, 1e-7))

    bj = big_j(bundle, bc)
    worst = _mabs(bj.calJ @ bj.calJ_inv - np.eye(2 * n))
    out.append(_res("closed-form inverse of [[J,K],[Jdot,Kdot]]", worst, 1e-8))

    ks = np.geomspace(1e-3, 3.0, 12)
    grid = s_grid(pot, bc, ks, cfg)
    out.append(_res("unitarity |S S† - I| on k grid", grid.max_defect, 1e-7))
    worst = 0.0
    for k in (1e-3, 0.3, 2.0):
        pair = jost_matrix(pot, bc, k, cfg)
        s_plus = -pair.Jminus @ linalg.inverse(pair.J, cond_cap=1e13)
        s_minus = -pair.J @ linalg.inverse(pair.Jminus, cond_cap=1e13)
        worst = max(worst, _mabs(s_plus @ s_minus - eye))
    out.append(_res("S(k) S(-k) = I", worst, 1e-7))
    return out


def _ode_residual(field, pot):
    """Max interior residual of -psi'' + V psi - k^2 psi by 6th-order FD."""
    stencil = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20,
                        1 / 90])
    worst = 0.0
    ksq = field.k ** 2
    for seg in field.disc.segments:
        i0, i1 = seg.i_lo, seg.i_hi
        if i1 - i0 < 7:
            continue
        xs = field.grid[i0:i1 + 1]
        h = xs[1] - xs[0]
        psi = field.psi[i0:i1 + 1]
        for i in range(3, len(xs) - 3):
            d2 = np.tensordot(stencil, psi[i - 3:i + 4], axes=(0, 0)) / h ** 2
            v = pot.value(xs[i])
            res = -d2 + v @ psi[i] - ksq * psi[i]
            worst = max(worst, _mabs(res))
    return worst


def suite_expansions(pot, bc, cfg=SolverConfig()):
    """Order checks for the small-k theorems, adapted to the J(0) regime."""
    out = []
    n = pot.n
    eye = np.eye(n)
    bundle = zero_energy_bundle(pot, cfg)
    a = bundle.a
    fa, fpa = bundle.f_at_a()
    fda, fdpa = bundle.fdot_at_a()

    jost_cache = {k: jost_field(pot, k, cfg) for k in ORDER_KS}

    res = [ _mabs(jost_cache[k].psi[bundle.a_index] - fa - k * fda)
            for k in ORDER_KS]
    out.append(_order(make_order_check(
        "f(k,a) = f(0,a) + k fdot(0,a) + o(k)", ORDER_KS, res, order=1)))
    res = [_mabs(jost_cache[k].psi_prime[bundle.a_index] - fpa - k * fdpa)
           for k in ORDER_KS]
    out.append(_order(make_order_check(
        "f'(k,a) = f'(0,a) + k fdot'(0,a) + o(k)", ORDER_KS, res, order=1)))

    coeff = -a * eye + bundle.q_tail
    res = [_mabs(p_matrix(bundle, jost_cache[k]) - 1j * k * eye
                 - k * k * coeff) for k in ORDER_KS]
    out.append(_order(make_order_check(
        "P(k) = ik I + k^2 (-a I + q_tail) + o(k^2)", ORDER_KS, res,
        order=2)))

    ratio = ratio_expansion(bundle, a)
    res = []
    for k in ORDER_KS:
        fk = jost_cache[k]
        lhs = fk.psi_prime[bundle.a_index] @ linalg.inverse(
            fk.psi[bundle.a_index])
        res.append(_mabs(lhs - ratio.c0 - k * ratio.c1 - k * k * ratio.c2))
    out.append(_order(make_order_check(
        "f'(k,a) f(k,a)^-1 second-order expansion", ORDER_KS, res, order=2)))

    j0, j0dot = jost_zero_pair(bundle, bc)
    pairs = {k: jost_matrix(pot, bc, k, cfg) for k in ORDER_KS}
    res = [_mabs(pairs[k].J - j0 - k * j0dot) for k in ORDER_KS]
    out.append(_order(make_order_check(
        "J(k) = J(0) + k Jdot(0) + o(k)", ORDER_KS, res, order=1)))

    try:
        cls = classify(j0, cfg.rank_tol)
    except RankAmbiguous:
        cls = None
    if cls is not None and cls.case == "exceptional":
        phi0 = regular_field(pot, bc, 0.0, cfg)
        rep = exceptional_expansion(bundle, bc, phi0, rank_tol=cfg.rank_tol)
        res = [_mabs(linalg.inverse(pairs[k].J, cond_cap=1e14)
                     - rep.Jinv_pole / k - rep.Jinv_const)
               for k in ORDER_KS]
        out.append(_order(make_order_check(
            "J(k)^-1 = pole/k + E1 + o(1)", ORDER_KS, res, order=0)))
        res = []
        for k in ORDER_KS:
            s = -pairs[k].Jminus @ linalg.inverse(pairs[k].J, cond_cap=1e14)
            res.append(_mabs(s - rep.S0 - k * rep.S0dot))
        out.append(_order(make_order_check(
            "S(k) = S(0) + k Sdot(0) + o(k)", ORDER_KS, res, order=1)))
    elif cls is not None:
        rep = generic_expansion(bundle, bc, rank_tol=cfg.rank_tol)
        j0_inv = rep.Jinv_const
        res = [_mabs(linalg.inverse(pairs[k].J) - j0_inv
                     - k * rep.intermediates["Jinv_linear"])
               for k in ORDER_KS]
        out.append(_order(make_order_check(
            "J(k)^-1 first-order expansion", ORDER_KS, res, order=1)))
        res = []
        for k in ORDER_KS:
            s = -pairs[k].Jminus @ linalg.inverse(pairs[k].J)
            res.append(_mabs(s - rep.S0 - k * rep.S0dot))
        out.append(_order(make_order_check(
            "S(k) = -I + 2k Jdot(0) J(0)^-1 + o(k)", ORDER_KS, res,
            order=1)))

    worst = max(_ode_residual(jost_cache[0.1], pot),
                _ode_residual(bundle.f0, pot))
    out.append(_res("interior ODE residual (6th-order differences)",
                    worst, 1e-6 * (1.0 + 0.1 ** 2)))
    return out


SUITES = {
    "wronskian": suite_wronskian,
    "identities": suite_identities,
    "expansions": suite_expansions,
}


def run_suites(pot, bc, cfg=SolverConfig(), which="all"):
    """Run one suite or all of them, returning the flat check list."""
    names = list(SUITES) if which == "all" else [which]
    results = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from "
                             f"{['all'] + list(SUITES)}")
        results.extend(SUITES[name](pot, bc, cfg))
    return results
