"""Hot integration kernels: adaptive DOP853 over one smooth potential piece.

The stepper advances the first-order system (psi, psi') of the matrix
Schrodinger equation -psi'' + V(x) psi = k^2 psi through a single smooth
piece of the potential, landing exactly on every requested output point.
Delta jumps and piece changes are handled by the driver in
:mod:`jostkit.solve`, which stitches piece integrations together.

The same source is executed two ways: compiled with ``numba.njit`` (the
default) or as plain numpy.  Selection happens once at import time from the
``JOSTKIT_BACKEND`` environment variable (``numba`` or ``numpy``); the
un-jitted implementations always remain available with a ``_py`` suffix for
benchmarking.
"""

import math
import os

import numpy as np

from ._dop853 import A as _A, B as _B, C as _C, E3 as _E3, E5 as _E5

N_STAGES = 12
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0  # embedded estimator has order 7

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_UNDERFLOW = 2

KIND_ZERO = 0
KIND_SECH_STAR = 1
KIND_GRID = 2


def _eval_potential(x, n, kind, params, knots, coeffs, out):
    """Write V(x) for one piece into ``out`` (n x n complex)."""
    out[:, :] = 0.0
    if kind == KIND_ZERO:
        return
    if kind == KIND_SECH_STAR:
        e = math.exp(2.0 * x)
        p = params[0] * 32.0 * e / (4.0 * e - 1.0) ** 2
        r = int(params[1])
        c = int(params[2])
        out[r, c] = p
        out[c, r] = p
        return
    j = np.searchsorted(knots, x, side="right") - 1
    if j < 0:
        j = 0
    if j > len(knots) - 2:
        j = len(knots) - 2
    dx = x - knots[j]
    ndeg = coeffs.shape[0]
    for r in range(n):
        for c in range(n):
            acc = coeffs[0, j, r, c]
            for d in range(1, ndeg):
                acc = acc * dx + coeffs[d, j, r, c]
            out[r, c] = acc


def _rhs(x, y, ksq, kind, params, knots, coeffs, vbuf, out):
    """Schrodinger right-hand side: out = (psi', V psi - k^2 psi)."""
    n = y.shape[1]
    _eval_potential(x, n, kind, params, knots, coeffs, vbuf)
    out[0, :, :] = y[1]
    out[1, :, :] = np.dot(vbuf, y[0]) - ksq * y[0]


def _error_norm(K, h, scale):
    """DOP853 stretched error norm combining the order-5 and order-3 pairs."""
    err5 = np.zeros_like(K[0])
    err3 = np.zeros_like(K[0])
    for s in range(N_STAGES + 1):
        if _E5[s] != 0.0:
            err5 += _E5[s] * K[s]
        if _E3[s] != 0.0:
            err3 += _E3[s] * K[s]
    e5 = np.abs(err5) / scale
    e3 = np.abs(err3) / scale
    n5 = float(np.sum(e5 * e5))
    n3 = float(np.sum(e3 * e3))
    if n5 == 0.0 and n3 == 0.0:
        return 0.0
    denom = n5 + 0.01 * n3
    return abs(h) * n5 / math.sqrt(denom * e5.size)


def integrate_piece(y0, xs_out, ksq, kind, params, knots, coeffs,
                    rtol, atol, max_steps):
    """Integrate one smooth piece, reporting the state at each output point.

    ``xs_out`` is strictly monotone (either direction) with the initial
    point first; ``y0`` has shape (2, n, n) holding (psi, psi').  Returns
    ``(ys, status, nsteps)`` where ``ys[i]`` is the state at ``xs_out[i]``.
    """
    m = xs_out.shape[0]
    n = y0.shape[1]
    ys = np.empty((m, 2, n, n), dtype=np.complex128)
    ys[0] = y0

    direction = 1.0 if xs_out[m - 1] >= xs_out[0] else -1.0
    x = xs_out[0]
    y = y0.copy()

    K = np.empty((N_STAGES + 1, 2, n, n), dtype=np.complex128)
    vbuf = np.empty((n, n), dtype=np.complex128)
    ytmp = np.empty((2, n, n), dtype=np.complex128)
    ynew = np.empty((2, n, n), dtype=np.complex128)

    _rhs(x, y, ksq, kind, params, knots, coeffs, vbuf, K[0])

    h_abs = abs(xs_out[1] - xs_out[0])
    if h_abs == 0.0:
        h_abs = 1e-6
    nsteps = 0
    i_out = 1
    while i_out < m:
        if nsteps >= max_steps:
            return ys, STATUS_MAX_STEPS, nsteps
        target = xs_out[i_out]
        dist = (target - x) * direction
        if dist <= 0.0:
            # duplicate output point
            ys[i_out] = y
            i_out += 1
            continue
        hmin = 1e3 * 2.220446049250313e-16 * max(abs(x), 1.0)
        if h_abs < hmin:
            return ys, STATUS_UNDERFLOW, nsteps
        clamped = h_abs >= dist
        h_try = dist if clamped else h_abs
        h = h_try * direction

        # the 12 stages plus the new-point evaluation used by the estimator
        for s in range(1, N_STAGES):
            ytmp[:, :, :] = y
            for j in range(s):
                aij = _A[s, j]
                if aij != 0.0:
                    ytmp += (h * aij) * K[j]
            _rhs(x + _C[s] * h, ytmp, ksq, kind, params, knots, coeffs,
                 vbuf, K[s])
        ynew[:, :, :] = y
        for j in range(N_STAGES):
            bj = _B[j]
            if bj != 0.0:
                ynew += (h * bj) * K[j]
        x_new = target if clamped else x + h
        _rhs(x_new, ynew, ksq, kind, params, knots, coeffs, vbuf,
             K[N_STAGES])

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = _error_norm(K, h, scale)
        nsteps += 1
        if err < 1.0:
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            x = x_new
            y[:, :, :] = ynew
            K[0] = K[N_STAGES]
            h_abs = h_try * factor
            if clamped:
                ys[i_out] = y
                i_out += 1
        else:
            h_abs = h_try * max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
    return ys, STATUS_OK, nsteps


# the un-jitted implementations stay importable for benchmarking
integrate_piece_py = integrate_piece
eval_potential_py = _eval_potential


def _resolve_backend():
    choice = os.environ.get("JOSTKIT_BACKEND", "numba").strip().lower()
    if choice not in ("numba", "numpy"):
        raise ValueError(f"JOSTKIT_BACKEND must be 'numba' or 'numpy', "
                         f"got {choice!r}")
    if choice == "numba":
        try:
            import numba  # noqa: F401
        except ImportError:
            choice = "numpy"
    return choice


BACKEND = _resolve_backend()
if BACKEND == "numba":
    # jit in dependency order; the stepper picks up the jitted helpers
    # through the module globals when it is first compiled
    import numba

    _eval_potential = numba.njit(cache=True)(_eval_potential)
    _rhs = numba.njit(cache=True)(_rhs)
    _error_norm = numba.njit(cache=True)(_error_norm)
    integrate_piece = numba.njit(cache=True)(integrate_piece)

eval_potential = _eval_potential
