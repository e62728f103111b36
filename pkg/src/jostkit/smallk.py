"""Small-k expansions of J(k), J(k)^-1, and S(k).

Generic case (J(0) invertible): the expansions come straight from the
zero-energy boundary data.  Exceptional case (J(0) singular): the block
pipeline runs in the coordinates that isolate the zero eigenvalue of J(0),
where J(k)'s leading block vanishes linearly; the pole of J(k)^-1, its
constant term, S(0), and Sdot(0) all come from closed forms in those
blocks.  Every o(k)/o(k^2) statement is validated elsewhere as a
decreasing-residual sequence, never as a single absolute threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    BasePointSingular,
    BlockSingular,
    NotExceptional,
    NotGeneric,
    RankAmbiguous,
)
from .solve import (
    SolverConfig,
    jost_field,
    omega1_pair,
    p_matrix,
    regular_field,
    zero_energy_bundle,
)

__all__ = [
    "Classification",
    "OrderCheck",
    "RatioExpansion",
    "SmallKReport",
    "classify",
    "exceptional_expansion",
    "generic_expansion",
    "jost_zero_pair",
    "p_expansion_check",
    "ratio_expansion",
    "smallk_report",
]


def jost_zero_pair(bundle, bc):
    """(J(0), Jdot(0)) from the zero-energy boundary values."""
    f0, fp0 = bundle.f0.psi[0], bundle.f0.psi_prime[0]
    fd0, fdp0 = bundle.f0dot.psi[0], bundle.f0dot.psi_prime[0]
    j0 = f0.conj().T @ bc.B - fp0.conj().T @ bc.A
    j0dot = fdp0.conj().T @ bc.A - fd0.conj().T @ bc.B
    return j0, j0dot


@dataclass(frozen=True)
class Classification:
    case: str                  # "generic" | "exceptional"
    mu: int
    nu: int
    zed: linalg.ZeroEigenData | None


def classify(j0, tol=linalg.DEFAULT_RANK_TOL):
    """Generic iff the smallest singular value of J(0) clears tol * |J(0)|."""
    zed = linalg.zero_eigen_structure(j0, tol)
    if zed.mu == 0:
        return Classification(case="generic", mu=0, nu=0, zed=None)
    return Classification(case="exceptional", mu=zed.mu, nu=zed.nu, zed=zed)


@dataclass
class SmallKReport:
    """Classified small-k expansion of J(k), J(k)^-1, and S(k)."""

    case: str
    mu: int
    nu: int
    a: float
    rank_tol: float
    J0: np.ndarray
    J0dot: np.ndarray
    Jinv_pole: np.ndarray | None     # residue of the 1/k term, None if generic
    Jinv_const: np.ndarray           # J(0)^-1 (generic) or E1 (exceptional)
    S0: np.ndarray
    S0dot: np.ndarray
    intermediates: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        def enc(m):
            if m is None:
                return None
            a = np.asarray(m, dtype=np.complex128)
            out = np.empty(a.shape + (2,))
            out[..., 0] = a.real
            out[..., 1] = a.imag
            return out.tolist()

        return {
            "case": self.case,
            "mu": self.mu,
            "nu": self.nu,
            "a": self.a,
            "rank_tol": self.rank_tol,
            "J0": enc(self.J0),
            "J0dot": enc(self.J0dot),
            "Jinv_pole": enc(self.Jinv_pole),
            "Jinv_const": enc(self.Jinv_const),
            "S0": enc(self.S0),
            "S0dot": enc(self.S0dot),
            "intermediates": {k: enc(v) if isinstance(v, np.ndarray) else v
                              for k, v in self.intermediates.items()},
            "warnings": list(self.warnings),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), indent=2, **kwargs)


def generic_expansion(bundle, bc, rank_tol=linalg.DEFAULT_RANK_TOL):
    """Theorem-level expansions when J(0) is invertible."""
    j0, j0dot = jost_zero_pair(bundle, bc)
    cls = classify(j0, rank_tol)
    if cls.case != "generic":
        raise NotGeneric(f"J(0) has a zero eigenvalue of multiplicity "
                         f"{cls.mu}; use exceptional_expansion")
    n = j0.shape[0]
    j0_inv = linalg.inverse(j0)
    report = SmallKReport(
        case="generic", mu=0, nu=0, a=bundle.a, rank_tol=rank_tol,
        J0=j0, J0dot=j0dot,
        Jinv_pole=None,
        Jinv_const=j0_inv,
        S0=-np.eye(n, dtype=np.complex128),
        S0dot=2.0 * j0dot @ j0_inv,
    )
    report.intermediates["Jinv_linear"] = -j0_inv @ j0dot @ j0_inv
    return report


def _blocks(z, mu):
    return z[:mu, :mu], z[:mu, mu:], z[mu:, :mu], z[mu:, mu:]


def exceptional_expansion(bundle, bc, phi0, rank_tol=linalg.DEFAULT_RANK_TOL):
    """The exceptional-case pipeline from the zero-energy data.

    ``phi0`` is the regular solution at k = 0 (initial data (A, B)).  The
    steps: base-point ratio R, the tail matrix q1(a), the omega_1 pair, the
    second-order coefficient F2, the zero-eigenvalue transform of J(0), the
    block splits, and finally the pole residue, E1, S(0), and Sdot(0).
    """
    j0, j0dot_direct = jost_zero_pair(bundle, bc)
    cls = classify(j0, rank_tol)
    if cls.case != "exceptional":
        raise NotExceptional("J(0) is invertible; use generic_expansion")
    zed = cls.zed
    mu = zed.mu
    n = j0.shape[0]
    ai = bundle.a_index
    a = bundle.a

    fa, _ = bundle.f_at_a()
    fda, _ = bundle.fdot_at_a()
    fa_inv = linalg.inverse(fa)
    # X = fdot(0,a)† [f(0,a)†]^-1 appears in every a-dependent correction
    x_corr = fda.conj().T @ fa_inv.conj().T

    r_mat = fa_inv @ phi0.psi[ai]
    q1a = -a * np.eye(n) - 1j * fa_inv @ fda + bundle.q_tail
    w1, w1p = omega1_pair(bundle)
    f2 = 1j * (w1p.conj().T @ bc.A - w1.conj().T @ bc.B) \
        - q1a.conj().T @ r_mat

    zj = zed.to_block_frame(j0)
    d0 = zj[mu:, mu:]
    zr = -1j * zed.to_block_frame(r_mat)
    a1, b1, c1, d1 = _blocks(zr, mu)
    zf = zed.to_block_frame(f2)
    a2, b2, c2, d2 = _blocks(zf, mu)

    try:
        a1_inv = linalg.inverse(a1)
    except linalg.Singular as exc:
        raise BlockSingular(f"leading block A1 not invertible: {exc}") from exc
    try:
        d0_inv = linalg.inverse(d0)
    except linalg.Singular as exc:
        raise BlockSingular(f"trailing block D0 not invertible: {exc}") from exc

    # J(0) and Jdot(0) reassembled from the block data
    zeros_d0 = np.zeros_like(zj)
    zeros_d0[mu:, mu:] = d0
    j0_blocks = zed.from_block_frame(zeros_d0)
    j0dot = -x_corr @ j0_blocks + zed.from_block_frame(zr)

    # pole residue and constant term of J(k)^-1
    lead_inv = np.zeros((n, n), dtype=np.complex128)
    lead_inv[:mu, :mu] = a1_inv
    pole = zed.from_inverse_frame(lead_inv)
    y1 = a1_inv @ (b1 @ d0_inv @ c1 - a2) @ a1_inv
    const_frame = np.zeros((n, n), dtype=np.complex128)
    const_frame[:mu, :mu] = y1
    const_frame[:mu, mu:] = -a1_inv @ b1 @ d0_inv
    const_frame[mu:, :mu] = -d0_inv @ c1 @ a1_inv
    const_frame[mu:, mu:] = d0_inv
    e1 = pole @ x_corr + zed.from_inverse_frame(const_frame)

    # S(0) and Sdot(0)
    s0_frame = np.zeros((n, n), dtype=np.complex128)
    s0_frame[:mu, :mu] = np.eye(mu)
    s0_frame[mu:, :mu] = 2.0 * c1 @ a1_inv
    s0_frame[mu:, mu:] = -np.eye(n - mu)
    s0 = zed.from_s_frame(s0_frame)

    e3 = (c1 @ a1_inv @ b1 @ d0_inv @ c1 - c1 @ a1_inv @ a2
          - d1 @ d0_inv @ c1) @ a1_inv
    e2 = np.zeros((n, n), dtype=np.complex128)
    e2[:mu, :mu] = -2.0 * a2 @ a1_inv
    e2[mu:, :mu] = 2.0 * e3
    e2[mu:, mu:] = 2.0 * (d1 - c1 @ a1_inv @ b1) @ d0_inv
    s0dot = zed.from_s_frame(e2) + s0 @ x_corr + x_corr @ s0

    report = SmallKReport(
        case="exceptional", mu=mu, nu=zed.nu, a=a, rank_tol=rank_tol,
        J0=j0, J0dot=j0dot, Jinv_pole=pole, Jinv_const=e1,
        S0=s0, S0dot=s0dot,
    )
    report.intermediates.update({
        "R": r_mat, "F2": f2, "q1a": q1a,
        "omega1_0": w1, "omega1_prime_0": w1p,
        "A1": a1, "B1": b1, "C1": c1, "D1": d1,
        "A2": a2, "B2": b2, "C2": c2, "D2": d2,
        "D0": d0, "E2": e2, "E3": e3,
        "S_transform": zed.S, "p1": zed.p1.tolist(), "p2": zed.p2.tolist(),
        "J0dot_direct": j0dot_direct,
    })
    return report


@dataclass
class RatioExpansion:
    """Second-order coefficients of f'(k,x) f(k,x)^-1 (and the mirror)."""

    x: float
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    q1x: np.ndarray
    c0_prime: np.ndarray | None = None
    c1_prime: np.ndarray | None = None
    c2_prime: np.ndarray | None = None
    q2x: np.ndarray | None = None


def _q_integral_from(bundle, x):
    """integral_x^xmax (f† f - I): cumulative grid data, Hermite off grid."""
    disc = bundle.f0.disc
    q = bundle._q_cumulative
    gi = disc.index_of(x)
    if gi >= 0:
        return q[gi]
    i = disc.interval_of(x)
    x0, x1 = disc.grid[i], disc.grid[i + 1]
    t = (x - x0) / (x1 - x0)
    h = x1 - x0
    f0v, _ = bundle.f0.at(x0)
    f1v, _ = bundle.f0.at(x1)
    eye = np.eye(bundle.n)
    dq0 = -(f0v.conj().T @ f0v - eye)   # dQ/dx = -(f† f - I)
    dq1 = -(f1v.conj().T @ f1v - eye)
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return h00 * q[i] + h10 * h * dq0 + h01 * q[i + 1] + h11 * h * dq1


def ratio_expansion(bundle, x, cond_cap=1e6):
    """Coefficients of the o(k^2) expansions of f' f^-1 and f (f')^-1."""
    fv, fp = bundle.f0.at(x)
    fdv, fdp = bundle.f0dot.at(x)
    n = bundle.n
    qx = _q_integral_from(bundle, x)
    if np.linalg.cond(fv) > cond_cap:
        raise BasePointSingular(f"f(0,{x:g}) is not invertible at tolerance")
    f_inv = linalg.inverse(fv)
    q1x = -x * np.eye(n) - 1j * f_inv @ fdv + qx
    out = RatioExpansion(
        x=float(x),
        c0=fp @ f_inv,
        c1=1j * f_inv.conj().T @ f_inv,
        c2=f_inv.conj().T @ q1x @ f_inv,
        q1x=q1x,
    )
    if np.linalg.cond(fp) <= cond_cap:
        fp_inv = linalg.inverse(fp)
        q2x = x * np.eye(n) + 1j * fp_inv @ fdp - qx
        out.c0_prime = fv @ fp_inv
        out.c1_prime = -1j * fp_inv.conj().T @ fp_inv
        out.c2_prime = fp_inv.conj().T @ q2x @ fp_inv
        out.q2x = q2x
    return out


@dataclass
class OrderCheck:
    """A decreasing-residual order check along a k-halving sequence."""

    name: str
    ks: list
    residuals: list
    normalized: list         # residual / k^order
    min_ratio: float         # smallest consecutive decrease factor
    passed: bool
    required_ratio: float = 1.5

    def rows(self):
        return list(zip(self.ks, self.residuals, self.normalized))


def make_order_check(name, ks, residuals, order, required_ratio=1.5,
                     tail_points=3):
    """Package residuals r(k) as an o(k^order) check.

    The normalized sequence r(k)/k^order must (i) decrease by at least
    ``required_ratio`` per halving over the last ``tail_points`` points,
    where the asymptotics have set in, and (ii) decrease by that factor per
    halving in geometric mean over the whole sequence.  The split keeps
    pre-asymptotic wobble at the largest k from masking a real order
    failure, which a plateau at small k would still trip.
    """
    normalized = [r / k ** order for k, r in zip(ks, residuals)]
    ratios = [normalized[i] / normalized[i + 1] if normalized[i + 1] > 0
              else np.inf
              for i in range(len(normalized) - 1)]
    tail = ratios[-(tail_points - 1):] if ratios else []
    tail_min = min(tail) if tail else np.inf
    if normalized[-1] > 0 and len(normalized) > 1:
        geomean = (normalized[0] / normalized[-1]) ** (1.0 / (len(ks) - 1))
    else:
        geomean = np.inf
    min_ratio = min(tail_min, geomean)
    return OrderCheck(name=name, ks=list(ks), residuals=list(residuals),
                      normalized=normalized, min_ratio=float(min_ratio),
                      passed=bool(min_ratio >= required_ratio),
                      required_ratio=required_ratio)


def p_expansion_check(bundle, ks, cfg=SolverConfig()):
    """Order check of P(k) = ik I + k^2 (-a I + q_tail) + o(k^2)."""
    pot = bundle.f0.disc.pot
    n = bundle.n
    eye = np.eye(n)
    coeff = -bundle.a * eye + bundle.q_tail
    residuals = []
    for k in ks:
        fk = jost_field(pot, k, cfg)
        p = p_matrix(bundle, fk)
        residuals.append(float(np.abs(p - 1j * k * eye - k * k * coeff).max()))
    return make_order_check("P(k) second-order tail", ks, residuals, order=2,
                            tail_points=3)


def smallk_report(pot, bc, cfg=SolverConfig(), a_override=None):
    """End-to-end report: bundle, classification, and the right expansion.

    On a rank-ambiguous J(0), both branches are computed with nudged rank
    tolerances and returned inside a report tagged "ambiguous".
    """
    if a_override is not None:
        bundle = zero_energy_bundle(pot, cfg)
        idx = bundle.f0.disc.index_of(a_override)
        if idx < 0:
            raise ValueError(f"a={a_override:g} is not a grid point")
        bundle = _rebase_bundle(bundle, idx)
    else:
        bundle = zero_energy_bundle(pot, cfg)
    j0, _ = jost_zero_pair(bundle, bc)
    try:
        cls = classify(j0, cfg.rank_tol)
    except RankAmbiguous as exc:
        sigma = exc.sigma
        norm = float(np.linalg.norm(j0, 2))
        tol_generic = sigma / (20.0 * norm)
        tol_exceptional = min(20.0 * sigma / norm, 0.5)
        phi0 = regular_field(pot, bc, 0.0, cfg)
        branch_g = generic_expansion(bundle, bc, rank_tol=tol_generic)
        branch_e = exceptional_expansion(bundle, bc, phi0,
                                         rank_tol=tol_exceptional)
        report = SmallKReport(
            case="ambiguous", mu=branch_e.mu, nu=branch_e.nu, a=bundle.a,
            rank_tol=cfg.rank_tol, J0=j0, J0dot=branch_g.J0dot,
            Jinv_pole=None, Jinv_const=branch_g.Jinv_const,
            S0=branch_g.S0, S0dot=branch_g.S0dot)
        report.warnings.append(str(exc))
        report.intermediates["generic_branch"] = branch_g.to_dict()
        report.intermediates["exceptional_branch"] = branch_e.to_dict()
        return report
    if cls.case == "generic":
        return generic_expansion(bundle, bc, rank_tol=cfg.rank_tol)
    phi0 = regular_field(pot, bc, 0.0, cfg)
    return exceptional_expansion(bundle, bc, phi0, rank_tol=cfg.rank_tol)


def _rebase_bundle(bundle, idx, cond_cap=1e6):
    """Clone a bundle with the base point moved to grid index ``idx``."""
    from .solve import ZeroEnergyBundle
    from .fields import corrected_trapezoid

    f0 = bundle.f0
    if np.linalg.cond(f0.psi[idx]) > cond_cap:
        raise BasePointSingular(
            f"f(0, {f0.grid[idx]:g}) condition exceeds {cond_cap:g}")
    xs = f0.grid
    fr, fl = f0.prime_sides()
    eye = np.eye(bundle.n)
    g_t = f0.psi - eye
    trace_tail = corrected_trapezoid(xs, g_t, fr, fl, i_lo=idx)
    nb = ZeroEnergyBundle(
        f0=bundle.f0, f0dot=bundle.f0dot, a=float(xs[idx]), a_index=idx,
        q_tail=bundle._q_cumulative[idx], trace_tail=trace_tail,
        tail_note=bundle.tail_note, _q_cumulative=bundle._q_cumulative)
    return nb
