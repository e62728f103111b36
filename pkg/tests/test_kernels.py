"""Integration kernel: accuracy on closed forms and backend equivalence."""

import numpy as np
from numpy.testing import assert_allclose

from jostkit import kernels

EMPTY_P = np.zeros(3)
EMPTY_K = np.zeros(0)
EMPTY_C = np.zeros((1, 1, 1, 1), dtype=np.complex128)


def free_initial(n, k, x0):
    y = np.zeros((2, n, n), dtype=np.complex128)
    phase = np.exp(1j * k * x0)
    y[0] = phase * np.eye(n)
    y[1] = 1j * k * phase * np.eye(n)
    return y


def test_free_solution_machine_accuracy():
    k = 1.7 + 0.0j
    xs = np.linspace(8.0, 0.0, 401)
    ys, status, _ = kernels.integrate_piece(
        free_initial(2, k, 8.0), xs, k ** 2, kernels.KIND_ZERO,
        EMPTY_P, EMPTY_K, EMPTY_C, 1e-13, 1e-14, 10 ** 6)
    assert status == kernels.STATUS_OK
    exact = np.exp(1j * k * xs)[:, None, None] * np.eye(2)
    assert np.abs(ys[:, 0] - exact).max() < 1e-12
    assert np.abs(ys[:, 1] - 1j * k * exact).max() < 1e-12


def test_upper_half_plane_k():
    k = 0.4 + 0.6j
    xs = np.linspace(6.0, 0.0, 301)
    ys, status, _ = kernels.integrate_piece(
        free_initial(1, k, 6.0), xs, k ** 2, kernels.KIND_ZERO,
        EMPTY_P, EMPTY_K, EMPTY_C, 1e-13, 1e-14, 10 ** 6)
    assert status == kernels.STATUS_OK
    exact = np.exp(1j * k * xs)
    assert np.abs(ys[:, 0, 0, 0] - exact).max() < 1e-11


def test_sech_star_against_closed_form():
    """Entry (0,0) follows the exactly solvable well profile."""
    k = 1.3
    x_max = 13.0
    xs = np.linspace(x_max, 0.0, 651)
    params = np.array([1.0, 0.0, 0.0])
    ys, status, _ = kernels.integrate_piece(
        free_initial(1, k, x_max), xs, complex(k) ** 2,
        kernels.KIND_SECH_STAR, params, EMPTY_K, EMPTY_C,
        1e-13, 1e-14, 10 ** 6)
    assert status == kernels.STATUS_OK
    f1 = np.exp(1j * k * xs) * (1 + 2j / ((k + 1j) * (4 * np.exp(2 * xs) - 1)))
    assert np.abs(ys[:, 0, 0, 0] - f1).max() < 1e-10


def test_eval_potential_matches_model_pieces():
    from jostkit.model import sech_star_profile

    out = np.empty((2, 2), dtype=np.complex128)
    kernels.eval_potential(0.8, 2, kernels.KIND_SECH_STAR,
                           np.array([2.0, 1.0, 1.0]), EMPTY_K, EMPTY_C, out)
    assert_allclose(out[1, 1], 2.0 * sech_star_profile(0.8), rtol=1e-14)
    assert out[0, 0] == 0.0


def test_pure_numpy_path_agrees_with_selected_backend():
    """The un-jitted implementation computes the same trajectories."""
    k = 0.9
    xs = np.linspace(5.0, 0.0, 201)
    params = np.array([1.0, 0.0, 0.0])
    args = (free_initial(2, k, 5.0), xs, complex(k) ** 2,
            kernels.KIND_SECH_STAR, params, EMPTY_K, EMPTY_C,
            1e-12, 1e-13, 10 ** 6)
    ys_sel, s1, n1 = kernels.integrate_piece(*args)
    ys_py, s2, n2 = kernels.integrate_piece_py(*args)
    assert s1 == s2 == kernels.STATUS_OK
    assert n1 == n2
    assert np.abs(ys_sel - ys_py).max() < 1e-12


def test_step_budget_status():
    k = 1.0
    xs = np.linspace(5.0, 0.0, 101)
    _, status, _ = kernels.integrate_piece(
        free_initial(1, k, 5.0), xs, complex(k) ** 2, kernels.KIND_ZERO,
        EMPTY_P, EMPTY_K, EMPTY_C, 1e-13, 1e-14, 3)
    assert status == kernels.STATUS_MAX_STEPS
