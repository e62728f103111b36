"""Problem data: the matrix potential and the boundary matrices.

A potential is a finite list of non-overlapping "pieces" on [0, x_max]
(closed-form builtins or sampled grids with spline interpolation) plus a
finite list of point interactions: matrix-weighted Dirac deltas implemented
as jump conditions psi'(x0+) - psi'(x0-) = gamma psi(x0).

Documents are JSON: top-level keys ``n``, ``x_max``, ``regular``, ``deltas``,
``boundary``; complex entries are encoded as ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.integrate
from scipy.interpolate import CubicSpline

from .errors import (
    MomentWarning,
    NotPositive,
    NotSelfadjoint,
    NotSelfadjointPairing,
    OverlappingPieces,
    ParseError,
)

__all__ = [
    "BoundaryCondition",
    "Piece",
    "PotentialModel",
    "load_document",
    "load_potential",
    "matrix_norm",
    "moment_norm",
    "serialize",
    "validate_boundary",
]

SELFADJOINT_TOL = 1e-12
MOMENT_CAP = 1e6

KIND_ZERO = 0
KIND_SECH_STAR = 1
KIND_GRID = 2

_BUILTIN_NAMES = {"zero": KIND_ZERO, "sech_star": KIND_SECH_STAR}


def matrix_norm(m):
    """Max absolute row sum, the norm used for the potential moments."""
    a = np.atleast_2d(np.asarray(m))
    return float(np.abs(a).sum(axis=1).max())


def sech_star_profile(x):
    """The reference well profile 32 e^{2x} / (4 e^{2x} - 1)^2."""
    e = np.exp(2.0 * x)
    return 32.0 * e / (4.0 * e - 1.0) ** 2


def sech_star_profile_deriv(x):
    e = np.exp(2.0 * x)
    return -64.0 * e * (4.0 * e + 1.0) / (4.0 * e - 1.0) ** 3


@dataclass
class Piece:
    """One smooth span of the regular part of the potential."""

    kind: int
    x_lo: float
    x_hi: float
    # sech_star: scale and target entry
    scale: float = 1.0
    row: int = 0
    col: int = 0
    # grid: knots and polynomial coefficients, highest power first, shaped
    # (degree+1, len(knots)-1, n, n); evaluation at x in [knots[j], knots[j+1]]
    # is sum_d coeffs[d, j] * (x - knots[j])^(deg-d)
    knots: np.ndarray | None = None
    coeffs: np.ndarray | None = None
    # original samples, kept for serialization round trips
    samples: np.ndarray | None = None
    interpolation: str = "cubic"

    def value(self, x, n):
        v = np.zeros((n, n), dtype=np.complex128)
        if self.kind == KIND_ZERO:
            return v
        if self.kind == KIND_SECH_STAR:
            p = self.scale * sech_star_profile(x)
            v[self.row, self.col] = p
            v[self.col, self.row] = p
            return v
        j = int(np.searchsorted(self.knots, x, side="right")) - 1
        j = min(max(j, 0), len(self.knots) - 2)
        dx = x - self.knots[j]
        acc = self.coeffs[0, j].copy()
        for d in range(1, self.coeffs.shape[0]):
            acc = acc * dx + self.coeffs[d, j]
        return acc

    def derivative(self, x, n):
        v = np.zeros((n, n), dtype=np.complex128)
        if self.kind == KIND_ZERO:
            return v
        if self.kind == KIND_SECH_STAR:
            p = self.scale * sech_star_profile_deriv(x)
            v[self.row, self.col] = p
            v[self.col, self.row] = p
            return v
        j = int(np.searchsorted(self.knots, x, side="right")) - 1
        j = min(max(j, 0), len(self.knots) - 2)
        dx = x - self.knots[j]
        deg = self.coeffs.shape[0] - 1
        acc = deg * self.coeffs[0, j]
        for d in range(1, deg):
            acc = acc * dx + (deg - d) * self.coeffs[d, j]
        return acc if deg >= 1 else v


@dataclass
class Delta:
    """Point interaction: psi'(x0+) - psi'(x0-) = gamma psi(x0)."""

    x0: float
    gamma: np.ndarray


@dataclass
class PotentialModel:
    """Validated potential: regular pieces plus point interactions."""

    n: int
    pieces: list[Piece]
    deltas: list[Delta]
    x_max: float
    tail_bound: float = 0.0
    _doc: dict | None = field(default=None, repr=False)

    def piece_at(self, x, side=1):
        """Piece covering x, or None.  ``side`` breaks ties at boundaries."""
        for p in self.pieces:
            if p.x_lo < x < p.x_hi:
                return p
            if x == p.x_lo and side > 0:
                return p
            if x == p.x_hi and side < 0:
                return p
        return None

    def value(self, x, side=1):
        """V(x); zero outside declared pieces."""
        p = self.piece_at(x, side)
        if p is None:
            return np.zeros((self.n, self.n), dtype=np.complex128)
        return p.value(x, self.n)

    def derivative(self, x, side=1):
        p = self.piece_at(x, side)
        if p is None:
            return np.zeros((self.n, self.n), dtype=np.complex128)
        return p.derivative(x, self.n)

    def breakpoints(self):
        """Sorted x-values where V or psi' may be non-smooth."""
        pts = {0.0, self.x_max}
        for p in self.pieces:
            pts.add(p.x_lo)
            pts.add(p.x_hi)
        for d in self.deltas:
            pts.add(d.x0)
        return sorted(pts)


@dataclass(frozen=True)
class BoundaryCondition:
    """Selfadjoint boundary pair: B†A = A†B and A†A + B†B > 0."""

    A: np.ndarray
    B: np.ndarray
    pairing_residual: float
    positivity_floor: float

    @property
    def n(self):
        return self.A.shape[0]


def validate_boundary(a, b):
    """Check the selfadjointness conditions on (A, B) and wrap them."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParseError(f"boundary matrices must be square and of equal "
                         f"size, got {a.shape} and {b.shape}")
    bda = b.conj().T @ a
    adb = a.conj().T @ b
    norm_a = np.linalg.norm(a, 2)
    norm_b = np.linalg.norm(b, 2)
    pairing = float(np.linalg.norm(bda - adb, 2))
    if pairing > SELFADJOINT_TOL * (norm_a * norm_b + 1.0):
        raise NotSelfadjointPairing(
            f"B†A - A†B has norm {pairing:.3e}, beyond tolerance")
    gram = a.conj().T @ a + b.conj().T @ b
    floor = float(np.linalg.eigvalsh(gram).min())
    if floor < SELFADJOINT_TOL:
        raise NotPositive(
            f"smallest eigenvalue of A†A + B†B is {floor:.3e}")
    return BoundaryCondition(A=a.copy(), B=b.copy(),
                             pairing_residual=pairing,
                             positivity_floor=floor)


def _decode_complex_matrix(obj, n, what):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: cannot decode matrix: {exc}") from None
    if arr.shape == (n, n):          # bare reals are accepted
        return arr.astype(np.complex128)
    if arr.shape == (n, n, 2):       # [re, im] pairs
        return arr[..., 0] + 1j * arr[..., 1]
    raise ParseError(f"{what}: expected shape {(n, n)} or {(n, n, 2)}, "
                     f"got {arr.shape}")


def _encode_complex_matrix(m):
    m = np.asarray(m, dtype=np.complex128)
    out = np.empty(m.shape + (2,), dtype=float)
    out[..., 0] = m.real
    out[..., 1] = m.imag
    return out.tolist()


def _check_selfadjoint(v, what):
    dev = np.linalg.norm(v - v.conj().T, 2)
    if dev > SELFADJOINT_TOL * max(np.linalg.norm(v, 2), 1e-300):
        raise NotSelfadjoint(f"{what}: |V - V†| = {dev:.3e} is beyond "
                             f"{SELFADJOINT_TOL:g} relative")


def _parse_piece(entry, n, idx, x_max_hint):
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ParseError(f"regular[{idx}]: each piece needs a 'kind'")
    kind = entry["kind"]
    if kind == "builtin":
        name = entry.get("name")
        if name not in _BUILTIN_NAMES:
            raise ParseError(f"regular[{idx}]: unknown builtin {name!r}")
        params = entry.get("params", {}) or {}
        x_lo = float(entry.get("x_lo", 0.0))
        x_hi = entry.get("x_hi")
        x_hi = float(x_hi) if x_hi is not None else None
        piece = Piece(kind=_BUILTIN_NAMES[name], x_lo=x_lo,
                      x_hi=x_hi if x_hi is not None else math.inf,
                      scale=float(params.get("scale", 1.0)),
                      row=int(params.get("entry", [0, 0])[0]),
                      col=int(params.get("entry", [0, 0])[1]))
        if not (0 <= piece.row < n and 0 <= piece.col < n):
            raise ParseError(f"regular[{idx}]: entry outside the matrix")
        return piece
    if kind == "grid":
        xs = np.asarray(entry.get("xs", []), dtype=float)
        if xs.ndim != 1 or len(xs) < 2 or not np.all(np.diff(xs) > 0):
            raise ParseError(f"regular[{idx}]: 'xs' must be strictly "
                             f"increasing with at least two samples")
        raw = entry.get("values")
        if raw is None or len(raw) != len(xs):
            raise ParseError(f"regular[{idx}]: one matrix per sample point "
                             f"required")
        vals = np.stack([_decode_complex_matrix(v, n, f"regular[{idx}]")
                         for v in raw])
        for i, v in enumerate(vals):
            _check_selfadjoint(v, f"regular[{idx}] at x={xs[i]:g}")
        vals = 0.5 * (vals + np.conj(np.transpose(vals, (0, 2, 1))))
        order = entry.get("interpolation", "cubic")
        if order == "cubic" and len(xs) >= 4:
            spline = CubicSpline(xs, vals, axis=0)
            coeffs = spline.c  # (4, m-1, n, n)
        elif order in ("linear", "cubic"):
            m = len(xs)
            coeffs = np.zeros((2, m - 1, n, n), dtype=np.complex128)
            dx = np.diff(xs)[:, None, None]
            coeffs[0] = (vals[1:] - vals[:-1]) / dx
            coeffs[1] = vals[:-1]
            order = "linear"
        else:
            raise ParseError(f"regular[{idx}]: interpolation must be "
                             f"'cubic' or 'linear'")
        x_lo = float(entry.get("x_lo", xs[0]))
        x_hi = float(entry.get("x_hi", xs[-1]))
        if x_lo < xs[0] - 1e-12 or x_hi > xs[-1] + 1e-12:
            raise ParseError(f"regular[{idx}]: span exceeds the sampled "
                             f"range [{xs[0]:g}, {xs[-1]:g}]")
        return Piece(kind=KIND_GRID, x_lo=x_lo, x_hi=x_hi, knots=xs,
                     coeffs=coeffs, samples=vals, interpolation=order)
    raise ParseError(f"regular[{idx}]: kind must be 'builtin' or 'grid'")


def _estimate_tail_bound(model):
    """Geometric extrapolation of the (1+x)^2 |V| tail beyond x_max."""
    x1 = model.x_max - 1.0
    x2 = model.x_max
    v1 = matrix_norm(model.value(x1, side=-1))
    v2 = matrix_norm(model.value(x2, side=-1))
    if v2 <= 0.0:
        return 0.0
    if v1 <= v2:
        return math.inf
    rate = math.log(v1 / v2)  # per unit length
    return (1.0 + x2) ** 2 * v2 / rate


def load_document(source):
    """Parse a potential document; returns (model, boundary-or-None)."""
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    elif isinstance(source, Path):
        doc = json.loads(source.read_text())
    elif isinstance(source, dict):
        doc = source
    else:
        raise ParseError(f"unsupported document source {type(source)!r}")

    if "n" not in doc:
        raise ParseError("document must declare the matrix size 'n'")
    n = int(doc["n"])
    if n < 1:
        raise ParseError("matrix size n must be positive")

    deltas = []
    for i, d in enumerate(doc.get("deltas", [])):
        try:
            x0 = float(d["x0"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"deltas[{i}]: needs a numeric 'x0'") from None
        gamma = _decode_complex_matrix(d.get("gamma"), n, f"deltas[{i}]")
        try:
            _check_selfadjoint(gamma, f"deltas[{i}] at x0={x0:g}")
        except NotSelfadjoint:
            raise
        deltas.append(Delta(x0=x0, gamma=0.5 * (gamma + gamma.conj().T)))
    deltas.sort(key=lambda d: d.x0)
    last_delta = deltas[-1].x0 if deltas else 0.0

    pieces = [_parse_piece(p, n, i, doc.get("x_max"))
              for i, p in enumerate(doc.get("regular", []))]

    x_max = doc.get("x_max")
    if x_max is None:
        x_max = 12.0 + last_delta
        for p in pieces:
            if math.isfinite(p.x_hi):
                x_max = max(x_max, p.x_hi)
    x_max = float(x_max)
    for p in pieces:
        if not math.isfinite(p.x_hi):
            p.x_hi = x_max
    pieces.sort(key=lambda p: (p.x_lo, p.x_hi))

    for i, p in enumerate(pieces):
        if p.x_lo < -1e-12 or p.x_hi > x_max + 1e-12:
            raise ParseError(f"piece {i} spans [{p.x_lo:g}, {p.x_hi:g}] "
                             f"outside [0, {x_max:g}]")
        if p.x_hi <= p.x_lo:
            raise ParseError(f"piece {i} has empty span")
        if i and p.x_lo < pieces[i - 1].x_hi - 1e-12:
            raise OverlappingPieces(
                f"pieces {i - 1} and {i} overlap near x={p.x_lo:g}")
    for i, d in enumerate(deltas):
        if not 0.0 < d.x0 < x_max:
            raise ParseError(f"deltas[{i}]: x0={d.x0:g} must lie strictly "
                             f"inside (0, {x_max:g})")
        if i and deltas[i - 1].x0 == d.x0:
            raise ParseError(f"deltas[{i}]: duplicate location x0={d.x0:g}")

    # spot-check selfadjointness of builtin/interpolated values
    model = PotentialModel(n=n, pieces=pieces, deltas=deltas, x_max=x_max,
                           _doc=doc)
    for p in pieces:
        for x in np.linspace(p.x_lo, min(p.x_hi, x_max), 17):
            _check_selfadjoint(p.value(x, n), f"V at x={x:g}")

    model.tail_bound = _estimate_tail_bound(model)
    second_moment = moment_norm(model, 2)
    if second_moment > MOMENT_CAP:
        warnings.warn(
            f"estimated second moment {second_moment:.3e} exceeds the cap "
            f"{MOMENT_CAP:g}; results use the truncation at x_max={x_max:g}",
            MomentWarning)

    boundary = None
    if "boundary" in doc:
        bdoc = doc["boundary"]
        a = _decode_complex_matrix(bdoc.get("A"), n, "boundary.A")
        b = _decode_complex_matrix(bdoc.get("B"), n, "boundary.B")
        boundary = validate_boundary(a, b)
    return model, boundary


def load_potential(source):
    """Parse and validate a potential document; boundary data is ignored."""
    model, _ = load_document(source)
    return model


def serialize(model):
    """Document dict reproducing the model (round-trips evaluations)."""
    regular = []
    for p in model.pieces:
        if p.kind == KIND_ZERO:
            regular.append({"kind": "builtin", "name": "zero",
                            "x_lo": p.x_lo, "x_hi": p.x_hi})
        elif p.kind == KIND_SECH_STAR:
            regular.append({"kind": "builtin", "name": "sech_star",
                            "x_lo": p.x_lo, "x_hi": p.x_hi,
                            "params": {"scale": p.scale,
                                       "entry": [p.row, p.col]}})
        else:
            regular.append({"kind": "grid", "x_lo": p.x_lo, "x_hi": p.x_hi,
                            "xs": p.knots.tolist(),
                            "values": [_encode_complex_matrix(v)
                                       for v in p.samples],
                            "interpolation": p.interpolation})
    doc = {
        "n": model.n,
        "x_max": model.x_max,
        "regular": regular,
        "deltas": [{"x0": d.x0, "gamma": _encode_complex_matrix(d.gamma)}
                   for d in model.deltas],
    }
    if model._doc and "boundary" in model._doc:
        doc["boundary"] = model._doc["boundary"]
    return doc


def moment_norm(model, j):
    """The j-th moment: integral of (1+x)^j |V(x)| plus the delta masses."""
    if j not in (0, 1, 2):
        raise ValueError("moment order must be 0, 1, or 2")
    total = 0.0
    for p in model.pieces:
        spans = [(p.x_lo, p.x_hi)]
        if p.kind == KIND_GRID:
            inner = p.knots[(p.knots > p.x_lo) & (p.knots < p.x_hi)]
            edges = np.concatenate([[p.x_lo], inner, [p.x_hi]])
            spans = list(zip(edges[:-1], edges[1:]))
        for lo, hi in spans:
            val, _ = scipy.integrate.quad(
                lambda x: (1.0 + x) ** j * matrix_norm(p.value(x, model.n)),
                lo, hi, epsabs=1e-12, epsrel=1e-9, limit=200)
            total += val
    for d in model.deltas:
        total += (1.0 + d.x0) ** j * matrix_norm(d.gamma)
    return total
