"""Dense complex matrix helpers and zero-eigenvalue structure analysis.

Matrices are plain ``numpy.ndarray`` objects with ``complex128`` entries.
Besides small wrappers around inversion and determinants, this module
computes the similarity transform that isolates the zero eigenvalue of a
matrix: its geometric and algebraic multiplicities (mu, nu), a transform S
whose leading columns are Jordan chains for the zero eigenvalue, and index
permutations (p1, p2) such that ``P2 S^-1 M S P1`` is block diagonal with a
leading mu x mu zero block and an invertible trailing block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    BadSplit,
    ChainConstructionFailed,
    NonSquare,
    RankAmbiguous,
    Singular,
)

__all__ = [
    "BlockPartition",
    "ZeroEigenData",
    "adjoint",
    "ascomplex",
    "det",
    "inverse",
    "partition",
    "zero_eigen_structure",
]

DEFAULT_RANK_TOL = 1e-9
DEFAULT_COND_CAP = 1e12


def ascomplex(m, name="matrix"):
    """Coerce to a 2-D complex128 array, rejecting non-finite entries."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise NonSquare(f"{name} must be 2-D, got shape {a.shape}")
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def adjoint(m):
    """Conjugate transpose (the dagger)."""
    return np.ascontiguousarray(np.conj(np.asarray(m)).T)


def _require_square(m, name="matrix"):
    a = ascomplex(m, name)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {a.shape}")
    return a


def det(m):
    """Determinant of a square complex matrix."""
    return complex(np.linalg.det(_require_square(m)))


def inverse(m, cond_cap=DEFAULT_COND_CAP):
    """Inverse of a square complex matrix.

    Uses an LU factorization with a pivot check, followed by one step of
    Newton refinement so that ``M @ inverse(M)`` is close to the identity
    well below the usual ``n * eps * cond`` bound.  Raises
    :class:`Singular` on a negligible pivot or when the condition number
    exceeds ``cond_cap``.
    """
    a = _require_square(m)
    n = a.shape[0]
    if n == 0:
        return a.copy()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.min() <= 100.0 * np.finfo(float).eps * max(diag.max(), 1e-300):
        raise Singular("pivot below tolerance; matrix is numerically singular")
    x = scipy.linalg.lu_solve((lu, piv), np.eye(n, dtype=np.complex128),
                              check_finite=False)
    cond = np.linalg.norm(a, 2) * np.linalg.norm(x, 2)
    if not np.isfinite(cond) or cond > cond_cap:
        raise Singular(f"condition estimate {cond:.3e} exceeds cap {cond_cap:.3e}")
    x += x @ (np.eye(n) - a @ x)
    return x


@dataclass(frozen=True)
class BlockPartition:
    """Four-block split of a square matrix at row/column index mu."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def assemble(self):
        """Reassemble the original matrix (bit-exact round trip)."""
        top = np.hstack([self.A, self.B])
        bottom = np.hstack([self.C, self.D])
        return np.vstack([top, bottom])


def partition(m, mu):
    """Split ``m`` into blocks [[A, B], [C, D]] at index ``mu``."""
    a = _require_square(m)
    n = a.shape[0]
    if not 0 <= mu <= n:
        raise BadSplit(f"split index {mu} outside [0, {n}]")
    return BlockPartition(
        A=a[:mu, :mu].copy(),
        B=a[:mu, mu:].copy(),
        C=a[mu:, :mu].copy(),
        D=a[mu:, mu:].copy(),
    )


@dataclass(frozen=True)
class ZeroEigenData:
    """Zero-eigenvalue structure of a square matrix.

    ``mu``/``nu`` are the geometric and algebraic multiplicities of the
    eigenvalue 0.  The columns of ``S`` start with Jordan chains for the
    zero eigenvalue; ``p1``/``p2`` are index permutations such that
    ``P2 S^-1 M S P1`` is block diagonal with a leading mu x mu zero block
    and an invertible trailing block.  Permutations are stored as index
    arrays and applied without materializing permutation matrices:
    ``(P2 X)[r, :] = X[p2[r], :]`` and ``(X P1)[:, c] = X[:, p1[c]]``.
    """

    mu: int
    nu: int
    S: np.ndarray
    Sinv: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    tol: float

    @property
    def n(self):
        return self.S.shape[0]

    def _inv_perm(self, p):
        inv = np.empty_like(p)
        inv[p] = np.arange(len(p))
        return inv

    def to_block_frame(self, m):
        """Conjugate into block coordinates: ``P2 S^-1 M S P1``."""
        x = self.Sinv @ np.asarray(m) @ self.S
        return x[self.p2][:, self.p1]

    def from_block_frame(self, t):
        """Inverse of :meth:`to_block_frame`: ``S P2^-1 T P1^-1 S^-1``."""
        x = np.asarray(t)[self._inv_perm(self.p2)][:, self._inv_perm(self.p1)]
        return self.S @ x @ self.Sinv

    def from_inverse_frame(self, t):
        """Conjugation used for inverses: ``S P1 T P2 S^-1``.

        If ``Z = P2 S^-1 M S P1`` then ``M^-1 = S P1 Z^-1 P2 S^-1``.
        """
        inv1 = self._inv_perm(self.p1)
        inv2 = self._inv_perm(self.p2)
        x = np.asarray(t)[inv1][:, inv2]
        return self.S @ x @ self.Sinv

    def from_s_frame(self, t):
        """Similarity with the column permutation only: ``S P2^-1 T P2 S^-1``."""
        inv2 = self._inv_perm(self.p2)
        x = np.asarray(t)[inv2][:, inv2]
        return self.S @ x @ self.Sinv


def _rank(m, tol, scale=None):
    """Rank with singular values <= tol * scale counted as zero.

    ``scale`` defaults to sigma_max of ``m`` itself; for powers M^j pass
    ``|M|^j`` so that a numerically-zero power (all roundoff) reports rank 0.
    """
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    cutoff = tol * (s[0] if scale is None else scale)
    return int(np.count_nonzero(s > cutoff))


def _kernel_basis(m, dim):
    """Orthonormal basis (columns) of the ``dim``-dimensional kernel."""
    _, _, vh = np.linalg.svd(m)
    n = m.shape[0]
    return vh[n - dim:].conj().T.copy() if dim > 0 else np.zeros((n, 0), complex)


def _normalize_last_entry(v, scale_tol=1e-12):
    """Scale a vector so its last nonzero entry equals 1."""
    mags = np.abs(v)
    big = mags.max()
    if big == 0.0:
        return v
    idx = np.nonzero(mags > scale_tol * big)[0][-1]
    return v / v[idx]


def _build_zero_chains(m, mu, nu, tol, norm_m):
    """Jordan chains for the zero eigenvalue, as a list of column lists.

    Chains are recovered top-down through the kernels of successive powers:
    heads of maximal height are chosen first and mapped down by ``m``, so
    the chain relations M v_{j} = v_{j-1} hold exactly by construction.
    """
    n = m.shape[0]
    # kernel dimensions kappa_j of m^j up to stabilization at nu
    kappas = [0]
    power = np.eye(n, dtype=np.complex128)
    while kappas[-1] < nu:
        power = power @ m
        kappas.append(n - _rank(power, tol, scale=norm_m ** len(kappas)))
        if len(kappas) > n + 1:
            raise ChainConstructionFailed("kernel dimensions failed to stabilize")
    height = len(kappas) - 1
    # c_j = number of chains of length >= j
    c = [kappas[j] - kappas[j - 1] for j in range(1, height + 1)]

    powers = [np.eye(n, dtype=np.complex128)]
    for _ in range(height):
        powers.append(powers[-1] @ m)

    levels = {j: [] for j in range(1, height + 2)}
    heads_by_level = {}
    for j in range(height, 0, -1):
        carried = [m @ v for v in levels[j + 1]]
        needed = c[j - 1] - len(carried)
        if needed < 0:
            raise ChainConstructionFailed("inconsistent chain counts")
        new_heads = []
        if needed > 0:
            kj = _kernel_basis(powers[j], kappas[j])
            avoid = [_kernel_basis(powers[j - 1], kappas[j - 1])] if j > 1 else []
            avoid.extend(np.asarray(v).reshape(-1, 1) for v in carried)
            proj = kj.copy()
            if avoid:
                q, _ = np.linalg.qr(np.hstack(avoid))
                proj = proj - q @ (q.conj().T @ proj)
            # pick the `needed` strongest independent directions
            u, s, _ = np.linalg.svd(proj, full_matrices=False)
            if s.size < needed or s[needed - 1] <= 10.0 * tol:
                raise ChainConstructionFailed(
                    "cannot extend Jordan chains stably at height %d" % j)
            new_heads = [u[:, i].copy() for i in range(needed)]
        heads_by_level[j] = new_heads
        levels[j] = carried + new_heads

    # a head of height j generates the chain [m^(j-1) h, ..., m h, h];
    # chains are scaled uniformly so the kernel vector has last entry 1,
    # which keeps the chain relations M v_j = v_{j-1} intact
    chains = []
    for j in range(height, 0, -1):
        for h in heads_by_level[j]:
            chain = [h]
            for _ in range(j - 1):
                chain.append(m @ chain[-1])
            chain.reverse()  # kernel vector first
            v0 = chain[0]
            mags = np.abs(v0)
            idx = np.nonzero(mags > 1e-12 * mags.max())[0][-1]
            chains.append([v / v0[idx] for v in chain])
    if len(chains) != mu:
        raise ChainConstructionFailed(
            f"built {len(chains)} chains, expected mu={mu}")
    return chains


def _trailing_complement(m, nu, norm_m, cutoff):
    """Columns spanning an M-invariant complement of the generalized kernel.

    Ordinary eigenvectors (sorted by descending real part, then imaginary
    part) when the nonzero spectrum is simple enough; otherwise an ordered
    Schur basis of the invariant subspace.  Returns (columns, used_schur).

    The nu smallest-magnitude eigenvalues are the numerical images of the
    zero eigenvalue; a defective zero eigenvalue scatters them to roughly
    eps**(1/height) * |M|, well above the rank cutoff, so the split is by
    count, not by the cutoff itself.
    """
    n = m.shape[0]
    want = n - nu
    if want == 0:
        return np.zeros((n, 0), dtype=np.complex128), False
    evals, evecs = np.linalg.eig(m)
    by_mag = np.argsort(np.abs(evals))
    lo = float(np.abs(evals[by_mag[nu - 1]])) if nu else 0.0
    hi = float(np.abs(evals[by_mag[nu]]))
    if hi <= 10.0 * max(lo, cutoff):
        raise ChainConstructionFailed(
            f"cannot separate the zero eigenvalue cluster (|lambda| gap "
            f"{lo:.3e} .. {hi:.3e})")
    nonzero = by_mag[nu:]
    order = sorted(nonzero, key=lambda i: (-evals[i].real, -evals[i].imag))
    cols = np.column_stack([_normalize_last_entry(evecs[:, i]) for i in order])
    if np.linalg.cond(cols) < 1e8:
        return cols, False
    # defective or nearly defective trailing spectrum: fall back to an
    # ordered Schur basis (invertible completion, not literal Jordan form)
    threshold = np.sqrt(max(lo, np.finfo(float).eps * norm_m) * hi)
    _, z, sdim = scipy.linalg.schur(
        m, output="complex", sort=lambda lam: abs(lam) > threshold)
    if sdim != want:
        raise ChainConstructionFailed(
            "Schur ordering found %d nonzero directions, expected %d"
            % (sdim, want))
    return z[:, :want].copy(), True


def zero_eigen_structure(m, tol=DEFAULT_RANK_TOL):
    """Analyze the zero eigenvalue of ``m``.

    Singular values below ``tol * sigma_max`` count as zero.  Raises
    :class:`RankAmbiguous` when a singular value of ``m`` lies within a
    factor of 10 of the cutoff on either side, and
    :class:`ChainConstructionFailed` when the generalized-eigenvector
    construction cannot be completed stably.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = _require_square(m)
    n = a.shape[0]
    sing = np.linalg.svd(a, compute_uv=False)
    norm_a = sing[0] if sing.size else 0.0
    identity = np.arange(n)

    if norm_a == 0.0:
        eye = np.eye(n, dtype=np.complex128)
        return ZeroEigenData(mu=n, nu=n, S=eye, Sinv=eye.copy(),
                             p1=identity, p2=identity.copy(), tol=tol)

    cutoff = tol * norm_a
    ambiguous = (sing > cutoff / 10.0) & (sing < cutoff * 10.0)
    if np.any(ambiguous):
        bad = sing[ambiguous][0]
        raise RankAmbiguous(
            f"singular value {bad:.6e} within a factor of 10 of the cutoff "
            f"{cutoff:.6e}; adjust tol", sigma=float(bad), cutoff=float(cutoff))

    mu = int(np.count_nonzero(sing <= cutoff))
    if mu == 0:
        eye = np.eye(n, dtype=np.complex128)
        return ZeroEigenData(mu=0, nu=0, S=eye, Sinv=eye.copy(),
                             p1=identity, p2=identity.copy(), tol=tol)

    # algebraic multiplicity from rank stabilization of powers
    nu_prev = mu
    power = a.copy()
    j = 1
    for _ in range(n):
        power = power @ a
        j += 1
        nu_next = n - _rank(power, tol, scale=norm_a ** j)
        if nu_next == nu_prev:
            break
        nu_prev = nu_next
    nu = nu_prev

    chains = _build_zero_chains(a, mu, nu, tol, norm_a)
    trailing, _ = _trailing_complement(a, nu, norm_a, cutoff)

    cols = []
    col_index = {}
    for b, chain in enumerate(chains):
        for j, v in enumerate(chain, start=1):
            col_index[(b, j)] = len(cols)
            cols.append(v)
    s_mat = np.column_stack(cols + [trailing[:, i] for i in range(trailing.shape[1])]) \
        if cols or trailing.size else np.eye(n, dtype=np.complex128)
    if s_mat.shape != (n, n):
        raise ChainConstructionFailed(
            f"transform has shape {s_mat.shape}, expected {(n, n)}")
    cond_s = np.linalg.cond(s_mat)
    if not np.isfinite(cond_s) or cond_s > 1e12:
        raise ChainConstructionFailed(
            f"transform condition {cond_s:.3e} too large")
    s_inv = inverse(s_mat, cond_cap=1e13)

    # permutations sending the Jordan data to diag(0_mu, I_{nu-mu}, D0):
    # columns of chain starts first, rows of chain ends first, then the
    # (col of v_j, row of v_{j-1}) pairs that park superdiagonal 1s on the
    # diagonal, then the trailing block in natural order.
    p1 = [col_index[(b, 1)] for b in range(len(chains))]
    p2 = [col_index[(b, len(chains[b]))] for b in range(len(chains))]
    for b, chain in enumerate(chains):
        for j in range(2, len(chain) + 1):
            p1.append(col_index[(b, j)])
            p2.append(col_index[(b, j - 1)])
    p1.extend(range(nu, n))
    p2.extend(range(nu, n))

    zed = ZeroEigenData(mu=mu, nu=nu, S=s_mat, Sinv=s_inv,
                        p1=np.asarray(p1), p2=np.asarray(p2), tol=tol)

    block = zed.to_block_frame(a)
    lead = np.abs(block[:mu, :mu]).max() if mu else 0.0
    if lead > 10.0 * cutoff:
        raise ChainConstructionFailed(
            f"leading block residual {lead:.3e} exceeds 10*tol*|M| = "
            f"{10.0 * cutoff:.3e}")
    return zed
