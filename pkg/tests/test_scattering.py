"""Jost matrix assembly, S(k), the 2n x 2n inverse, and the k grid."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import approx_err, random_smooth_document
from jostkit import model as jm
from jostkit import scattering, solve
from jostkit.errors import ClosedFormMismatch, OutOfDomain


class TestJostMatrix:
    def test_free_dirichlet_identity(self, free_models, cfg):
        pot, dirichlet, _ = free_models
        for k in (0.3, 1.0, 2.5):
            pair = scattering.jost_matrix(pot, dirichlet, k, cfg)
            assert approx_err(pair.J, np.eye(2)) < 1e-12
            assert approx_err(pair.Jminus, np.eye(2)) < 1e-12

    def test_free_neumann_is_minus_ik(self, free_models, cfg):
        pot, _, neumann = free_models
        k = 0.7
        pair = scattering.jost_matrix(pot, neumann, k, cfg)
        assert approx_err(pair.J, -1j * k * np.eye(2)) < 1e-12
        assert approx_err(pair.Jminus, 1j * k * np.eye(2)) < 1e-12

    def test_star_jost_zero_limit(self, star_pot, star_bundle,
                                  star_exceptional, cfg):
        """J(k) at small k approaches J(0) + k Jdot(0) from the paper data."""
        pot, bc = star_pot
        j0 = star_exceptional.reference("J0")
        j0dot = star_exceptional.reference("J0dot")
        k = 1e-3
        pair = scattering.jost_matrix(pot, bc, k, cfg)
        assert approx_err(pair.J, j0 + k * j0dot) < 1e-5

    def test_complex_k_skips_mirror(self, star_pot, cfg):
        pot, bc = star_pot
        pair = scattering.jost_matrix(pot, bc, 0.5 + 0.2j, cfg)
        assert pair.Jminus is None


class TestKMatrices:
    def test_free_dirichlet(self, free_models, cfg):
        pot, dirichlet, _ = free_models
        b = solve.zero_energy_bundle(pot, cfg)
        k0, k0dot = scattering.k_matrices_zero(b, dirichlet)
        assert np.abs(k0).max() < 1e-12
        assert approx_err(k0dot, 1j * np.eye(2)) < 1e-12

    def test_star_cross_check(self, star_bundle, star_pot,
                              star_exceptional, cfg):
        """K(0) assembled from the tabulated boundary values."""
        _, bc = star_pot
        k0, k0dot = scattering.k_matrices_zero(star_bundle, bc)
        f0 = star_exceptional.reference("f0")
        fp0 = star_exceptional.reference("f0_prime")
        fd0 = star_exceptional.reference("f0_dot")
        fdp0 = star_exceptional.reference("f0_dot_prime")
        assert approx_err(k0, f0.conj().T @ bc.A + fp0.conj().T @ bc.B) < 1e-8
        assert approx_err(
            k0dot, -fd0.conj().T @ bc.A - fdp0.conj().T @ bc.B) < 1e-8


class TestBigJ:
    def test_closed_form_inverse(self, star_bundle, star_pot):
        _, bc = star_pot
        bj = scattering.big_j(star_bundle, bc)
        assert approx_err(bj.calJ @ bj.calJ_inv, np.eye(6)) < 1e-8
        # invertible even though det J(0) = 0 here
        assert abs(np.linalg.det(bj.J0)) < 1e-8
        assert np.isfinite(np.linalg.cond(bj.calJ))

    def test_free_dirichlet_block_values(self, free_models, cfg):
        pot, dirichlet, _ = free_models
        b = solve.zero_energy_bundle(pot, cfg)
        bj = scattering.big_j(b, dirichlet)
        z = np.zeros((2, 2))
        assert approx_err(bj.calJ, np.block(
            [[np.eye(2), z], [z, 1j * np.eye(2)]])) < 1e-10
        assert approx_err(bj.calJ_inv, np.block(
            [[np.eye(2), z], [z, -1j * np.eye(2)]])) < 1e-10

    def test_mismatch_guard(self, star_bundle, star_pot):
        _, bc = star_pot
        with pytest.raises(ClosedFormMismatch):
            scattering.big_j(star_bundle, bc, mismatch_tol=1e-18)


class TestScatteringMatrix:
    def test_free_limits(self, free_models, cfg):
        pot, dirichlet, neumann = free_models
        for k in (0.4, 1.1, 2.7):
            assert approx_err(
                scattering.scattering_matrix(pot, dirichlet, k, cfg),
                -np.eye(2)) < 1e-10
            assert approx_err(
                scattering.scattering_matrix(pot, neumann, k, cfg),
                np.eye(2)) < 1e-10

    def test_star_small_k_matches_expansion(self, star_pot, star_exceptional,
                                            cfg):
        pot, bc = star_pot
        k = 1e-3
        s = scattering.scattering_matrix(pot, bc, k, cfg)
        s_ref = star_exceptional.reference("S0") \
            + k * star_exceptional.reference("S0dot")
        assert approx_err(s, s_ref) < 5e-6  # O(k^2) truncation

    def test_rejects_k_below_floor(self, star_pot, cfg):
        pot, bc = star_pot
        with pytest.raises(OutOfDomain):
            scattering.scattering_matrix(pot, bc, 1e-9, cfg)

    def test_normalization_invariance(self, star_pot, cfg):
        """S(k) is unchanged under (A, B) -> (A M, B M), M invertible."""
        pot, bc = star_pot
        rng = np.random.default_rng(17)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        bc2 = jm.validate_boundary(bc.A @ m, bc.B @ m)
        for k in (0.05, 0.9):
            s1 = scattering.scattering_matrix(pot, bc, k, cfg)
            s2 = scattering.scattering_matrix(pot, bc2, k, cfg)
            assert approx_err(s1, s2) < 1e-8


class TestSGrid:
    def test_single_row_free(self, free_models, cfg):
        pot, dirichlet, _ = free_models
        grid = scattering.s_grid(pot, dirichlet, [1.0], cfg)
        assert len(grid.rows) == 1
        assert approx_err(grid.rows[0].S, -np.eye(2)) < 1e-10
        assert grid.rows[0].unitarity_defect < 1e-12

    def test_star_log_grid_unitary(self, star_pot, cfg):
        pot, bc = star_pot
        ks = np.geomspace(1e-3, 1.0, 12)
        grid = scattering.s_grid(pot, bc, ks, cfg)
        assert not grid.failed_rows
        assert grid.max_defect <= 1e-7

    def test_zero_k_is_row_level_error(self, star_pot, cfg):
        pot, bc = star_pot
        grid = scattering.s_grid(pot, bc, [0.5, 0.0, 1.0], cfg)
        assert len(grid.failed_rows) == 1
        assert grid.rows[1].error is not None
        assert grid.rows[0].S is not None and grid.rows[2].S is not None

    def test_csv_deterministic_and_parseable(self, star_pot, cfg):
        import csv
        import io

        pot, bc = star_pot
        grid = scattering.s_grid(pot, bc, [0.5, 1.5], cfg)
        text1 = grid.to_csv(header_lines=["config x = 1"])
        text2 = scattering.s_grid(pot, bc, [0.5, 1.5], cfg).to_csv(
            header_lines=["config x = 1"])
        assert text1 == text2
        body = [ln for ln in text1.splitlines() if not ln.startswith("#")]
        rows = list(csv.reader(io.StringIO("\n".join(body))))
        assert rows[0][0] == "k"
        assert len(rows) == 3
        k0 = float(rows[1][0])
        re11 = float(rows[1][1])
        assert k0 == 0.5
        assert abs(re11 - grid.rows[0].S[0, 0].real) == 0.0

    def test_random_potential_unitarity(self, cfg):
        doc = random_smooth_document(2, seed=7)
        pot, bc = jm.load_document(doc)
        ks = np.geomspace(1e-2, 2.0, 8)
        grid = scattering.s_grid(pot, bc, ks, cfg)
        assert not grid.failed_rows
        assert grid.max_defect <= 1e-7
