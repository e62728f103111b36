"""Small-k expansions: classification, both regimes, ratio checks."""

from fractions import Fraction

import numpy as np
import pytest

from conftest import approx_err
from jostkit import linalg, model as jm, scattering, smallk, solve
from jostkit import star_example as star
from jostkit.errors import NotExceptional, NotGeneric


class TestClassify:
    def test_star_regimes(self, star_exceptional):
        j0_exc = star_exceptional.reference("J0")
        cls = smallk.classify(j0_exc)
        assert cls.case == "exceptional" and (cls.mu, cls.nu) == (1, 1)
        j0_gen = star.kirchhoff(Fraction(0)).reference("J0")
        assert smallk.classify(j0_gen).case == "generic"

    def test_zero_matrix_fully_exceptional(self):
        cls = smallk.classify(np.zeros((3, 3)))
        assert cls.case == "exceptional" and (cls.mu, cls.nu) == (3, 3)


class TestGenericExpansion:
    @pytest.mark.parametrize("gamma", [0, 1, 2])
    def test_star_reference_values(self, gamma, cfg):
        ex = star.kirchhoff(Fraction(gamma))
        pot, bc = jm.load_document(ex.document())
        bundle = solve.zero_energy_bundle(pot, cfg)
        rep = smallk.generic_expansion(bundle, bc)
        assert rep.case == "generic"
        assert approx_err(rep.J0, ex.reference("J0")) < 1e-7
        assert approx_err(rep.J0dot, ex.reference("J0dot")) < 1e-7
        assert approx_err(rep.S0dot, ex.reference("S0dot")) < 1e-7
        assert np.array_equal(rep.S0, -np.eye(3))

    def test_trivial_dirichlet(self, free_models, cfg):
        pot, dirichlet, _ = free_models
        bundle = solve.zero_energy_bundle(pot, cfg)
        rep = smallk.generic_expansion(bundle, dirichlet)
        assert approx_err(rep.J0, np.eye(2)) < 1e-10
        assert np.abs(rep.J0dot).max() < 1e-10
        assert np.abs(rep.S0dot).max() < 1e-10

    def test_refuses_exceptional_input(self, star_bundle, star_pot):
        _, bc = star_pot
        with pytest.raises(NotGeneric):
            smallk.generic_expansion(star_bundle, bc)


class TestExceptionalExpansion:
    @pytest.fixture(scope="class")
    def report(self, star_bundle, star_pot, star_phi0):
        _, bc = star_pot
        return smallk.exceptional_expansion(star_bundle, bc, star_phi0)

    def test_case_and_multiplicities(self, report):
        assert report.case == "exceptional"
        assert (report.mu, report.nu) == (1, 1)

    @pytest.mark.parametrize("attr,label", [
        ("J0", "J0"), ("J0dot", "J0dot"), ("Jinv_pole", "Jinv_pole"),
        ("Jinv_const", "E1"), ("S0", "S0"), ("S0dot", "S0dot"),
    ])
    def test_top_level_outputs(self, report, star_exceptional, attr, label):
        assert approx_err(getattr(report, attr),
                          star_exceptional.reference(label)) < 1e-7

    @pytest.mark.parametrize("key,label", [
        ("R", "R"), ("F2", "F2"), ("q1a", "q1_0"), ("A1", "A1"),
        ("B1", "B1"), ("C1", "C1"), ("D1", "D1"), ("A2", "A2"),
        ("B2", "B2"), ("C2", "C2"), ("D2", "D2"), ("D0", "D0"),
        ("E2", "E2"), ("E3", "E3"), ("S_transform", "similarity"),
        ("omega1_0", "omega1_0"), ("omega1_prime_0", "omega1_prime_0"),
    ])
    def test_intermediates(self, report, star_exceptional, key, label):
        assert approx_err(report.intermediates[key],
                          star_exceptional.reference(label)) < 1e-7

    def test_s0_involution(self, report):
        assert approx_err(report.S0 @ report.S0, np.eye(3)) < 1e-8

    def test_pole_consistency_with_direct_inverse(self, report, star_pot,
                                                  cfg):
        """k J(k)^-1 at k = 1e-4 approaches the computed residue."""
        pot, bc = star_pot
        k = 1e-4
        pair = scattering.jost_matrix(pot, bc, k, cfg)
        direct = k * linalg.inverse(pair.J, cond_cap=1e15)
        rel = np.abs(direct - report.Jinv_pole).max() \
            / np.abs(report.Jinv_pole).max()
        assert rel < 1e-3

    def test_refuses_generic_input(self, cfg, star_phi0):
        ex = star.kirchhoff(Fraction(0))
        pot, bc = jm.load_document(ex.document())
        bundle = solve.zero_energy_bundle(pot, cfg)
        phi0 = solve.regular_field(pot, bc, 0.0, cfg)
        with pytest.raises(NotExceptional):
            smallk.exceptional_expansion(bundle, bc, phi0)

    def test_free_neumann_all_channels_exceptional(self, free_models, cfg):
        pot, _, neumann = free_models
        bundle = solve.zero_energy_bundle(pot, cfg)
        phi0 = solve.regular_field(pot, neumann, 0.0, cfg)
        rep = smallk.exceptional_expansion(bundle, neumann, phi0)
        assert (rep.mu, rep.nu) == (2, 2)
        assert approx_err(rep.intermediates["A1"], -1j * np.eye(2)) < 1e-10
        assert approx_err(rep.Jinv_pole, 1j * np.eye(2)) < 1e-10
        assert approx_err(rep.S0, np.eye(2)) < 1e-10
        assert np.abs(rep.S0dot).max() < 1e-10

    def test_base_point_independence(self, star_bundle, star_pot, star_phi0,
                                     report):
        """Moving a from 0 to 0.5 leaves the observables unchanged."""
        _, bc = star_pot
        idx = star_bundle.f0.disc.index_of(0.5)
        rebased = smallk._rebase_bundle(star_bundle, idx)
        rep2 = smallk.exceptional_expansion(rebased, bc, star_phi0)
        assert rep2.a == 0.5
        assert approx_err(rep2.S0, report.S0) < 1e-7
        assert approx_err(rep2.S0dot, report.S0dot) < 1e-7
        assert approx_err(rep2.Jinv_pole, report.Jinv_pole) < 1e-7
        assert approx_err(rep2.Jinv_const, report.Jinv_const) < 1e-7

    def test_gauge_invariance(self, star_bundle, star_pot, report, cfg):
        """(A, B) -> (A M, B M) leaves S0 and S0dot unchanged."""
        pot, bc = star_pot
        rng = np.random.default_rng(23)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        bc2 = jm.validate_boundary(bc.A @ m, bc.B @ m)
        phi2 = solve.regular_field(pot, bc2, 0.0, cfg)
        rep2 = smallk.exceptional_expansion(star_bundle, bc2, phi2)
        assert approx_err(rep2.S0, report.S0) < 1e-7
        assert approx_err(rep2.S0dot, report.S0dot) < 1e-7


class TestRatioExpansion:
    def test_free_coefficients(self, free_models, cfg):
        """V = 0: c0 = 0, c1 = iI, c2 = 0 (q1 vanishes identically)."""
        pot, _, _ = free_models
        bundle = solve.zero_energy_bundle(pot, cfg)
        r = smallk.ratio_expansion(bundle, 0.0)
        assert np.abs(r.c0).max() < 1e-10
        assert approx_err(r.c1, 1j * np.eye(2)) < 1e-10
        assert np.abs(r.c2).max() < 1e-10

    def test_free_q1_at_positive_x(self, free_models, cfg):
        """q1(x) = -x I - i(ix I) + 0 = 0 for the free field, any x."""
        pot, _, _ = free_models
        bundle = solve.zero_energy_bundle(pot, cfg)
        r = smallk.ratio_expansion(bundle, 2.0)
        assert np.abs(r.q1x).max() < 1e-9

    def test_star_q1_reference(self, star_bundle, star_exceptional):
        r = smallk.ratio_expansion(star_bundle, 0.0)
        assert approx_err(r.q1x, star_exceptional.reference("q1_0")) < 1e-7

    def test_order_against_direct_fields(self, star_pot, star_bundle, cfg):
        pot, _ = star_pot
        ai = star_bundle.a_index
        r = smallk.ratio_expansion(star_bundle, star_bundle.a)
        ks = [0.05 * 2.0 ** (-m) for m in range(5)]
        res = []
        for k in ks:
            fk = solve.jost_field(pot, k, cfg)
            lhs = fk.psi_prime[ai] @ linalg.inverse(fk.psi[ai])
            res.append(np.abs(lhs - r.c0 - k * r.c1 - k * k * r.c2).max())
        check = smallk.make_order_check("ratio", ks, res, order=2)
        assert check.passed

    def test_mirror_variant_when_f_prime_invertible(self, star_pot,
                                                    star_bundle, cfg):
        """f(k,x) f'(k,x)^-1 expansion at a point where f'(0,x) invertible."""
        pot, _ = star_pot
        x = 0.5
        r = smallk.ratio_expansion(star_bundle, x)
        assert r.c0_prime is not None
        ks = [0.04 * 2.0 ** (-m) for m in range(5)]
        res = []
        for k in ks:
            fk = solve.jost_field(pot, k, cfg)
            fv, fd = fk.at(x)
            lhs = fv @ linalg.inverse(fd)
            res.append(np.abs(lhs - r.c0_prime - k * r.c1_prime
                              - k * k * r.c2_prime).max())
        check = smallk.make_order_check("mirror ratio", ks, res, order=2)
        assert check.passed


class TestPExpansionCheck:
    def test_star_passes(self, star_bundle, cfg):
        ks = [0.1 * 2.0 ** (-m) for m in range(6)]
        check = smallk.p_expansion_check(star_bundle, ks, cfg)
        assert check.passed

    def test_corrupted_tail_fails(self, star_bundle, star_pot, cfg):
        """Negative control: a shifted q_tail plateaus the sequence."""
        from dataclasses import replace

        pot, _ = star_pot
        bad = smallk._rebase_bundle(star_bundle, star_bundle.a_index)
        bad.q_tail = star_bundle.q_tail + np.eye(3)
        ks = [0.1 * 2.0 ** (-m) for m in range(6)]
        check = smallk.p_expansion_check(bad, ks, cfg)
        assert not check.passed


class TestSmallKReport:
    def test_end_to_end_exceptional(self, star_pot, cfg, star_exceptional):
        pot, bc = star_pot
        rep = smallk.smallk_report(pot, bc, cfg)
        assert rep.case == "exceptional"
        assert approx_err(rep.S0, star_exceptional.reference("S0")) < 1e-7

    def test_serialization_round_trip(self, star_pot, cfg):
        import json

        pot, bc = star_pot
        rep = smallk.smallk_report(pot, bc, cfg)
        payload = json.loads(rep.to_json())
        assert payload["case"] == "exceptional"
        s0 = np.asarray(payload["S0"])
        assert approx_err(s0[..., 0] + 1j * s0[..., 1], rep.S0) == 0.0

    def test_ambiguous_carries_both_branches(self, star_pot, cfg):
        """Near the transition, a coarse tolerance reports both regimes."""
        from jostkit.star_example import kirchhoff

        ex = kirchhoff(Fraction(-31, 77) + Fraction(1, 10 ** 7))
        pot, bc = jm.load_document(ex.document())
        coarse = solve.SolverConfig(rank_tol=3e-8)
        rep = smallk.smallk_report(pot, bc, coarse)
        assert rep.case == "ambiguous"
        assert "generic_branch" in rep.intermediates
        assert "exceptional_branch" in rep.intermediates
        assert rep.warnings

    def test_near_transition_agreement(self, cfg):
        """Near-singular generic case: the expansion works inside its window.

        At gamma = -31/77 + 1e-3 the smallest singular value of J(0) is
        ~1.1e-3, so the first-order S(k) expansion is valid only for
        k << 1e-3 (S0dot has entries ~2e3).  Inside that window the direct
        S(k) matches the expansion to 5e-3; beyond it (k = 0.01) the direct
        S(k) has already crossed over toward the exceptional-case S(0) of
        the neighbouring singular parameter.
        """
        ex = star.kirchhoff(Fraction(-31, 77) + Fraction(1, 1000))
        pot, bc = jm.load_document(ex.document())
        bundle = solve.zero_energy_bundle(pot, cfg)
        rep = smallk.generic_expansion(bundle, bc)
        k_in = 1e-5
        s_direct = scattering.scattering_matrix(pot, bc, k_in, cfg)
        assert approx_err(s_direct, rep.S0 + k_in * rep.S0dot) < 5e-3
        # crossover: far outside the window the exceptional S(0) wins
        s_out = scattering.scattering_matrix(pot, bc, 0.01, cfg)
        s0_exc = star.kirchhoff(Fraction(-31, 77)).reference("S0")
        dist_exc = approx_err(s_out, s0_exc)
        dist_taylor = approx_err(s_out, rep.S0 + 0.01 * rep.S0dot)
        assert dist_exc < 1.0 < dist_taylor
