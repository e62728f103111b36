"""Potential document parsing, validation, and moments."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import random_boundary, random_smooth_document
from jostkit import model as jm
from jostkit.errors import (
    NotPositive,
    NotSelfadjoint,
    NotSelfadjointPairing,
    OverlappingPieces,
    ParseError,
)


class TestLoadPotential:
    def test_star_document(self, star_exceptional):
        pot, bc = jm.load_document(star_exceptional.document())
        assert pot.n == 3
        assert pot.x_max == 13.0  # 12 + last delta location
        assert len(pot.deltas) == 1 and pot.deltas[0].x0 == 1.0
        assert bc is not None
        # V(0) entry (1,1) is 32/9
        assert_allclose(pot.value(0.0)[0, 0], 32.0 / 9.0, rtol=1e-14)

    def test_free_model(self):
        pot = jm.load_potential({"n": 2, "regular": [], "deltas": []})
        assert pot.x_max == 12.0
        assert np.all(pot.value(3.0) == 0)
        assert jm.moment_norm(pot, 2) == 0.0

    def test_json_text_source(self, star_exceptional):
        text = json.dumps(star_exceptional.document())
        pot = jm.load_potential(text)
        assert pot.n == 3

    def test_rejects_bad_json(self):
        with pytest.raises(ParseError):
            jm.load_potential("{not json")

    def test_rejects_non_selfadjoint_delta(self):
        doc = {"n": 2, "regular": [],
               "deltas": [{"x0": 1.0, "gamma": [[0, 1], [0, 0]]}]}
        with pytest.raises(NotSelfadjoint):
            jm.load_potential(doc)

    def test_rejects_overlapping_pieces(self):
        doc = {"n": 1, "x_max": 5.0, "regular": [
            {"kind": "builtin", "name": "sech_star", "x_lo": 0.0, "x_hi": 3.0},
            {"kind": "builtin", "name": "sech_star", "x_lo": 2.0, "x_hi": 4.0},
        ], "deltas": []}
        with pytest.raises(OverlappingPieces):
            jm.load_potential(doc)

    def test_rejects_delta_outside_domain(self):
        doc = {"n": 1, "x_max": 5.0, "regular": [],
               "deltas": [{"x0": 7.0, "gamma": [[1.0]]}]}
        with pytest.raises(ParseError):
            jm.load_potential(doc)

    def test_grid_piece_evaluation(self):
        xs = np.linspace(0.0, 4.0, 33)
        vals = [[[math.exp(-x)]] for x in xs]
        doc = {"n": 1, "x_max": 6.0,
               "regular": [{"kind": "grid", "xs": xs.tolist(),
                            "values": vals}],
               "deltas": []}
        pot = jm.load_potential(doc)
        for x in (0.3, 1.7, 3.9):
            assert abs(pot.value(x)[0, 0] - math.exp(-x)) < 1e-6
        # spline derivative close to the true derivative
        assert abs(pot.derivative(1.7)[0, 0] + math.exp(-1.7)) < 1e-4

    def test_serialize_round_trip(self, star_exceptional):
        pot = jm.load_potential(star_exceptional.document())
        pot2 = jm.load_potential(jm.serialize(pot))
        rng = np.random.default_rng(2)
        for x in rng.uniform(0.0, pot.x_max, size=1000):
            assert np.abs(pot.value(x) - pot2.value(x)).max() < 1e-14

    def test_serialize_round_trip_grid(self):
        doc = random_smooth_document(2, seed=42)
        pot = jm.load_potential(doc)
        pot2 = jm.load_potential(jm.serialize(pot))
        rng = np.random.default_rng(3)
        for x in rng.uniform(0.0, pot.x_max, size=1000):
            assert np.abs(pot.value(x) - pot2.value(x)).max() < 1e-14


class TestBoundary:
    def test_kirchhoff_pair(self, star_pot):
        _, bc = star_pot
        assert bc.pairing_residual == 0.0

    def test_dirichlet_and_neumann(self):
        jm.validate_boundary(np.zeros((2, 2)), np.eye(2))
        jm.validate_boundary(np.eye(2), np.zeros((2, 2)))

    def test_rejects_bad_pairing(self):
        with pytest.raises(NotSelfadjointPairing):
            jm.validate_boundary(np.eye(2), 1j * np.eye(2))

    def test_rejects_degenerate_pair(self):
        with pytest.raises(NotPositive):
            jm.validate_boundary(np.zeros((2, 2)), np.diag([1.0, 0.0]))

    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(min_value=1, max_value=4),
           seed=st.integers(min_value=0, max_value=9999))
    def test_accepts_iff_right_multiplied_by_unitary(self, n, seed):
        """(A,B) valid iff (AU, BU) valid for unitary U."""
        rng = np.random.default_rng(seed)
        a, b = random_boundary(n, rng)
        z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        q, r = np.linalg.qr(z)
        u = q * (np.diag(r) / np.abs(np.diag(r)))
        jm.validate_boundary(a, b)
        jm.validate_boundary(a @ u, b @ u)


class TestMoments:
    def test_zero_potential(self):
        pot = jm.load_potential({"n": 3, "regular": [], "deltas": []})
        for j in (0, 1, 2):
            assert jm.moment_norm(pot, j) == 0.0

    def test_star_zeroth_moment(self, star_pot):
        """Closed form: integral of the well profile is 4/3, plus |Gamma|."""
        pot, _ = star_pot
        gamma_norm = jm.matrix_norm(pot.deltas[0].gamma)
        expect = 4.0 / 3.0 + gamma_norm
        assert abs(jm.moment_norm(pot, 0) - expect) < 1e-8 * expect

    def test_delta_only_second_moment(self):
        doc = {"n": 2, "x_max": 5.0, "regular": [],
               "deltas": [{"x0": 1.0,
                           "gamma": [[1.0, 0.0], [0.0, 1.0]]}]}
        pot = jm.load_potential(doc)
        assert abs(jm.moment_norm(pot, 2) - 4.0) < 1e-12

    def test_monotone_in_j(self, star_pot):
        pot, _ = star_pot
        m0, m1, m2 = (jm.moment_norm(pot, j) for j in (0, 1, 2))
        assert m0 <= m1 <= m2
