"""Jost matrix, scattering matrix, and the always-invertible 2n x 2n block.

The Jost matrix normalization is fixed verbatim to
J(k) = f(-k*, 0)† B - f'(-k*, 0)† A; the right-multiplication gauge freedom
is never exercised, so entrywise comparisons against tabulated references
are meaningful.  J(-k) for real k comes from a separate integration at -k,
not by symmetry, which makes the unitarity checks genuine cross-validation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ClosedFormMismatch, JostSingular, OutOfDomain
from .solve import SolverConfig, jost_field

__all__ = [
    "BigJ",
    "JostPair",
    "SGrid",
    "big_j",
    "jost_matrix",
    "jost_matrix_from_field",
    "k_matrices_zero",
    "s_grid",
    "scattering_matrix",
]


def jost_matrix_from_field(field_minus_kstar, bc):
    """J(k) = f(-k*,0)† B - f'(-k*,0)† A from the field at -k*."""
    f0 = field_minus_kstar.psi[0]
    fp0 = field_minus_kstar.psi_prime[0]
    return f0.conj().T @ bc.B - fp0.conj().T @ bc.A


@dataclass(frozen=True)
class JostPair:
    """J(k) and, for real k, its mirror J(-k)."""

    k: complex
    J: np.ndarray
    Jminus: np.ndarray | None


def jost_matrix(pot, bc, k, cfg=SolverConfig()):
    """Assemble J(k); for real k the pair (J(k), J(-k)) is returned."""
    k = complex(k)
    field = jost_field(pot, -np.conj(k), cfg)
    jk = jost_matrix_from_field(field, bc)
    jminus = None
    if abs(k.imag) < 1e-14:
        field_m = jost_field(pot, k.real, cfg)
        jminus = jost_matrix_from_field(field_m, bc)
    return JostPair(k=k, J=jk, Jminus=jminus)


def k_matrices_zero(bundle, bc):
    """K(0) and Kdot(0): the Jost data with (A, B) replaced by (-B, A)."""
    f0, fp0 = bundle.f0.psi[0], bundle.f0.psi_prime[0]
    fd0, fdp0 = bundle.f0dot.psi[0], bundle.f0dot.psi_prime[0]
    k0 = f0.conj().T @ bc.A + fp0.conj().T @ bc.B
    k0dot = -fd0.conj().T @ bc.A - fdp0.conj().T @ bc.B
    return k0, k0dot


@dataclass(frozen=True)
class BigJ:
    """The 2n x 2n matrix [[J(0), K(0)], [Jdot(0), Kdot(0)]] and its inverse."""

    J0: np.ndarray
    J0dot: np.ndarray
    K0: np.ndarray
    K0dot: np.ndarray
    calJ: np.ndarray
    calJ_inv: np.ndarray


def big_j(bundle, bc, mismatch_tol=1e-8):
    """Assemble the block matrix and its closed-form inverse.

    The inverse is computed twice: numerically and from the closed form
    built on (A†A + B†B)^-1; they must agree, which cross-checks the
    upstream zero-energy fields.  The closed form is the stored value.
    """
    f0, fp0 = bundle.f0.psi[0], bundle.f0.psi_prime[0]
    fd0, fdp0 = bundle.f0dot.psi[0], bundle.f0dot.psi_prime[0]
    a, b = bc.A, bc.B
    j0 = f0.conj().T @ b - fp0.conj().T @ a
    j0dot = fdp0.conj().T @ a - fd0.conj().T @ b
    k0, k0dot = k_matrices_zero(bundle, bc)
    cal = np.block([[j0, k0], [j0dot, k0dot]])

    gram_inv = linalg.inverse(a.conj().T @ a + b.conj().T @ b)
    closed = np.block([
        [1j * gram_inv @ k0dot.conj().T, 1j * gram_inv @ k0.conj().T],
        [-1j * gram_inv @ j0dot.conj().T, -1j * gram_inv @ j0.conj().T],
    ])
    numeric = linalg.inverse(cal)
    diff = np.abs(numeric - closed).max()
    if diff > mismatch_tol:
        raise ClosedFormMismatch(
            f"numerical and closed-form inverses differ by {diff:.3e}; "
            f"the zero-energy fields are suspect")
    return BigJ(J0=j0, J0dot=j0dot, K0=k0, K0dot=k0dot, calJ=cal,
                calJ_inv=closed)


def scattering_matrix(pot, bc, k, cfg=SolverConfig()):
    """S(k) = -J(-k) J(k)^-1 for real k away from zero."""
    k = float(k)
    if abs(k) < cfg.k_floor:
        raise OutOfDomain(f"|k| = {abs(k):g} below k_floor {cfg.k_floor:g}")
    pair = jost_matrix(pot, bc, k, cfg)
    try:
        j_inv = linalg.inverse(pair.J, cond_cap=1e13)
    except linalg.Singular as exc:  # pragma: no cover - signals upstream bug
        raise JostSingular(f"J({k:g}) numerically singular: {exc}") from exc
    return -pair.Jminus @ j_inv


@dataclass
class SGridRow:
    k: float
    S: np.ndarray | None
    unitarity_defect: float | None
    error: str | None = None


@dataclass
class SGrid:
    """S(k) tabulated over a k grid, with per-row unitarity defects."""

    n: int
    rows: list[SGridRow]

    @property
    def max_defect(self):
        defects = [r.unitarity_defect for r in self.rows if r.S is not None]
        return max(defects) if defects else float("nan")

    @property
    def failed_rows(self):
        return [r for r in self.rows if r.S is None]

    def to_csv(self, header_lines=()):
        """CSV with columns k, re_ij/im_ij in row-major order, defect.

        Numeric formatting uses the shortest round-trip decimal (repr), so
        identical inputs produce byte-identical files.
        """
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        cols = ["k"]
        for i in range(self.n):
            for j in range(self.n):
                cols += [f"re_{i + 1}{j + 1}", f"im_{i + 1}{j + 1}"]
        cols.append("unitarity_defect")
        writer.writerow(cols)
        for row in self.rows:
            if row.S is None:
                writer.writerow([repr(float(row.k))]
                                + ["nan"] * (2 * self.n ** 2)
                                + [f"error: {row.error}"])
                continue
            cells = [repr(float(row.k))]
            for i in range(self.n):
                for j in range(self.n):
                    cells += [repr(float(row.S[i, j].real)),
                              repr(float(row.S[i, j].imag))]
            cells.append(repr(float(row.unitarity_defect)))
            writer.writerow(cells)
        return buf.getvalue()


def s_grid(pot, bc, ks, cfg=SolverConfig()):
    """S(k) for each k in ``ks``; row-level failures do not abort the grid."""
    rows = []
    eye = np.eye(pot.n)
    for k in ks:
        try:
            s = scattering_matrix(pot, bc, k, cfg)
        except Exception as exc:  # noqa: BLE001 - row-level error contract
            rows.append(SGridRow(k=float(k), S=None, unitarity_defect=None,
                                 error=str(exc)))
            continue
        defect = float(np.linalg.norm(s @ s.conj().T - eye, 2))
        rows.append(SGridRow(k=float(k), S=s, unitarity_defect=defect))
    return SGrid(n=pot.n, rows=rows)
