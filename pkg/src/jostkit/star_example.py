"""Closed-form oracle: three wires with Kirchhoff coupling at the vertex.

The model: one wire carries the reference well profile
32 e^{2x} / (4 e^{2x} - 1)^2, and a point interaction at x0 = 1 couples the
other two wires with strength parameter gamma.  The Jost solution is known
in closed form, and every matrix the small-k pipeline produces has an
exact reference value: rational for gamma-rational data, with sqrt(26273)
surds appearing in the exceptional-case block data at gamma = -31/77.

References are stored as exact fractions (and surd pairs) and converted to
floating point only at comparison time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "EXCEPTIONAL_GAMMA",
    "KirchhoffExample",
    "det3_exact",
    "j0_exact",
    "kirchhoff",
]

EXCEPTIONAL_GAMMA = Fraction(-31, 77)
_ROOT = 26273
_RT = math.sqrt(_ROOT)

F = Fraction


def _surd(p, q=0):
    """float value of p + q*sqrt(26273) with exact rational p, q."""
    return float(F(p)) + float(F(q)) * _RT


def _cmat(rows):
    """Complex matrix from entries that are numbers or (re, im) pairs."""
    n = len(rows)
    out = np.zeros((n, len(rows[0])), dtype=np.complex128)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if isinstance(v, tuple):
                out[i, j] = float(v[0]) + 1j * float(v[1])
            else:
                out[i, j] = float(v)
    return out


def boundary_matrices():
    """The Kirchhoff vertex matrices: continuity plus current conservation."""
    a = np.array([[0, 0, 1], [0, 0, 1], [0, 0, 1]], dtype=np.complex128)
    b = np.array([[-1, 0, 0], [1, -1, 0], [0, 1, 0]], dtype=np.complex128)
    return a, b


def j0_exact(gamma):
    """J(0) over exact fractions (gamma must be a Fraction)."""
    g = F(gamma)
    return [[F(-5, 3), F(0), F(16, 9)],
            [F(2), F(-1), F(2)],
            [F(1), g, 1 + g]]


def det3_exact(m):
    """Exact 3x3 determinant over fractions."""
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _sinratio(z):
    """sin(z)/z, stable at z = 0 (series below 1e-4)."""
    z = complex(z)
    if abs(z) < 1e-4:
        z2 = z * z
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    return np.sin(z) / z


@dataclass(frozen=True)
class KirchhoffExample:
    """Closed-form Jost evaluator and reference ledger for one gamma."""

    gamma: float
    gamma_exact: Fraction

    @property
    def is_exceptional(self):
        return self.gamma_exact == EXCEPTIONAL_GAMMA

    def exact_jost(self, k, x):
        """(f(k,x), f'(k,x)) from the closed forms; valid for Im k >= 0.

        The removable 1/k singularities are written through sin(z)/z, so
        k = 0 evaluates to the zero-energy limits directly.
        """
        k = complex(k)
        g = self.gamma
        eikx = np.exp(1j * k * x)
        den = 4.0 * math.exp(2.0 * x) - 1.0
        u = 1.0 / den
        up = -8.0 * math.exp(2.0 * x) / den ** 2
        ck = 2j / (k + 1j)
        f1 = eikx * (1.0 + ck * u)
        f1p = 1j * k * f1 + eikx * ck * up
        f = np.zeros((3, 3), dtype=np.complex128)
        fp = np.zeros((3, 3), dtype=np.complex128)
        f[0, 0] = f1
        fp[0, 0] = f1p
        if x >= 1.0:
            f[1, 1] = f[2, 2] = eikx
            fp[1, 1] = fp[2, 2] = 1j * k * eikx
            return f, fp
        eik = np.exp(1j * k)
        s = (x - 1.0) * _sinratio(k * (x - 1.0))   # sin(k(x-1))/k
        c = np.cos(k * (x - 1.0))
        f[1, 1] = eikx - eik * s
        f[1, 2] = f[2, 1] = -eik * s
        f[2, 2] = eikx - g * eik * s
        fp[1, 1] = 1j * k * eikx - eik * c
        fp[1, 2] = fp[2, 1] = -eik * c
        fp[2, 2] = 1j * k * eikx - g * eik * c
        return f, fp

    def reference(self, label):
        """Reference matrix/value by label; raises KeyError when a label
        only exists in the other (generic/exceptional) regime."""
        return _references(self)[label]

    def document(self, x_max=None):
        """Potential document for this example (consumed by the loader)."""
        a, b = boundary_matrices()
        delta = [[0.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, self.gamma]]

        def enc(m):
            return [[[float(np.real(v)), float(np.imag(v))] for v in row]
                    for row in np.asarray(m)]

        doc = {
            "n": 3,
            "regular": [{"kind": "builtin", "name": "sech_star",
                         "x_lo": 0.0, "x_hi": None,
                         "params": {"scale": 1.0, "entry": [0, 0]}}],
            "deltas": [{"x0": 1.0, "gamma": enc(delta)}],
            "boundary": {"A": enc(a), "B": enc(b)},
        }
        if x_max is not None:
            doc["x_max"] = float(x_max)
        return doc


def kirchhoff(gamma):
    """Build the example for a given coupling parameter."""
    exact = gamma if isinstance(gamma, Fraction) else F(gamma)
    if math.isclose(float(exact), float(EXCEPTIONAL_GAMMA),
                    rel_tol=0.0, abs_tol=1e-15):
        exact = EXCEPTIONAL_GAMMA
    return KirchhoffExample(gamma=float(exact), gamma_exact=exact)


def _references(ex):
    g = ex.gamma_exact
    refs = {}

    refs["f0"] = _cmat([[F(5, 3), 0, 0], [0, 2, 1], [0, 1, 1 + g]])
    refs["f0_prime"] = _cmat([[F(-16, 9), 0, 0], [0, -1, -1], [0, -1, -g]])
    refs["f0_dot"] = _cmat([[(0, F(2, 3)), 0, 0],
                            [0, (0, 1), (0, 1)],
                            [0, (0, 1), (0, g)]])
    refs["f0_dot_prime"] = _cmat([[(0, F(-1, 9)), 0, 0],
                                  [0, 0, (0, -1)],
                                  [0, (0, -1), (0, 1 - g)]])
    refs["J0"] = _cmat([[F(-5, 3), 0, F(16, 9)],
                        [2, -1, 2],
                        [1, g, 1 + g]])
    refs["J0dot"] = _cmat([[(0, F(-2, 3)), 0, (0, F(1, 9))],
                           [(0, 1), 0, (0, 1)],
                           [(0, 1), (0, g - 1), (0, g)]])
    refs["det_J0"] = float((31 + 77 * g) / 9)
    refs["phi0"] = _cmat([[0, 0, 1], [0, 0, 1], [0, 0, 1]])

    if not ex.is_exceptional:
        d = 77 * g + 31
        refs["S0"] = -np.eye(3, dtype=np.complex128)
        refs["S0dot"] = _cmat([
            [(0, 2 * (20 * g + 7) / d), (0, -18 * g / d), (0, F(-18) / d)],
            [(0, -18 * g / d), (0, 62 * g / d), (0, F(62) / d)],
            [(0, F(-18) / d), (0, F(62) / d), (0, 2 * (77 * g - 46) / d)],
        ])
        return refs

    # exceptional regime: gamma = -31/77
    m1 = _cmat([[F(144, 6971), F(-496, 6971), F(1232, 6971)],
                [F(558, 6971), F(-1922, 6971), F(4774, 6971)],
                [F(135, 6971), F(-465, 6971), F(1155, 6971)]])
    m2 = _cmat([
        [F(-16095714, 48594841), F(22880111, 145784523),
         F(32930051, 145784523)],
        [F(-10281837, 48594841), F(-30462632, 145784523),
         F(61380319, 145784523)],
        [F(11927250, 48594841), F(8244046, 48594841),
         F(7573258, 48594841)]])
    refs["M1"] = m1
    refs["M2"] = m2
    refs["Jinv_pole"] = 1j * m1
    refs["E1"] = m2

    refs["S0"] = _cmat([
        [F(-6809, 6971), F(-558, 6971), F(1386, 6971)],
        [F(-558, 6971), F(-5049, 6971), F(-4774, 6971)],
        [F(1386, 6971), F(-4774, 6971), F(4887, 6971)]])
    refs["S0dot"] = 1j * _cmat([
        [F(24111452, 48594841), F(-8336928, 48594841),
         F(-12952632, 48594841)],
        [F(-8336928, 48594841), F(95224498, 145784523),
         F(111299650, 145784523)],
        [F(-12952632, 48594841), F(111299650, 145784523),
         F(-124617494, 145784523)]])

    refs["eigenvalues"] = np.array(
        [0.0, _surd(F(-239, 231), F(2, 231)), _surd(F(-239, 231), F(-2, 231))])
    refs["v1"] = np.array([float(F(16, 15)), float(F(62, 15)), 1.0])
    refs["similarity"] = np.array([
        [float(F(16, 15)), _surd(F(-73, 102), F(1, 102)),
         _surd(F(-73, 102), F(-1, 102))],
        [float(F(62, 15)), _surd(F(2399, 1054), F(3, 1054)),
         _surd(F(2399, 1054), F(-3, 1054))],
        [1.0, 1.0, 1.0]], dtype=np.complex128)
    refs["D0"] = np.diag([_surd(F(-239, 231), F(2, 231)),
                          _surd(F(-239, 231), F(-2, 231))]).astype(complex)

    refs["q1_0"] = _cmat([[F(16, 15), 0, 0],
                          [0, F(-2, 5), F(2438, 385)],
                          [0, F(2438, 385), F(-275162, 29645)]])
    refs["R"] = _cmat([[0, 0, F(3, 5)],
                       [0, 0, F(-31, 15)],
                       [0, 0, F(77, 15)]])
    refs["F2"] = _cmat([[0, 0, F(-16, 25)],
                        [0, 0, F(-100, 3)],
                        [0, 0, F(70148, 1155)]])
    refs["omega1_0"] = np.zeros((3, 3), dtype=np.complex128)
    refs["omega1_prime_0"] = np.zeros((3, 3), dtype=np.complex128)

    refs["A1"] = np.array([[1j * float(F(6971, 623))]])
    refs["B1"] = np.array([[1j * float(F(6971, 623)),
                            1j * float(F(6971, 623))]])
    # entries are (-76268/9345 -+ 11541857/(9345 sqrt(26273)))i; the 1/sqrt
    # part is stored as a sqrt(26273)/(9345*26273) surd coefficient
    c_re = F(-76268, 9345)
    c_ir = F(-11541857, 9345 * _ROOT)
    refs["C1"] = np.array([[1j * _surd(c_re, c_ir)],
                           [1j * _surd(c_re, -c_ir)]])
    refs["D1"] = np.array([
        [1j * _surd(c_re, c_ir), 1j * _surd(c_re, c_ir)],
        [1j * _surd(c_re, -c_ir), 1j * _surd(c_re, -c_ir)]])
    refs["A2"] = np.array([[_surd(F(-427808, 3115))]], dtype=np.complex128)
    refs["B2"] = np.array([[_surd(F(-427808, 3115))] * 2], dtype=np.complex128)
    e_re = F(10180418, 102795)
    e_ir = F(7539081034, 513975 * _ROOT)
    refs["C2"] = np.array([[_surd(e_re, e_ir)], [_surd(e_re, -e_ir)]],
                          dtype=np.complex128)
    refs["D2"] = np.array([
        [_surd(e_re, e_ir), _surd(e_re, e_ir)],
        [_surd(e_re, -e_ir), _surd(e_re, -e_ir)]], dtype=np.complex128)

    big = 95754919319475
    e3_re = F(427808 * 2003789164, big)
    e3_ir = F(427808 * 11541857, big)
    refs["E3"] = np.array([[1j * _surd(e3_re, e3_ir)],
                           [1j * _surd(e3_re, -e3_ir)]])
    e2 = np.zeros((3, 3), dtype=np.complex128)
    e2[0, 0] = 1j * _surd(F(-855616, 34855))
    e2[1, 0] = 2j * _surd(e3_re, e3_ir)
    e2[2, 0] = 2j * _surd(e3_re, -e3_ir)
    refs["E2"] = e2
    return refs
