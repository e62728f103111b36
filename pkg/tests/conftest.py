"""Shared fixtures: the star-graph example, free models, random potentials.

Bundles and fields are session-scoped; they are immutable once built, and
every module compares against them rather than re-integrating.
"""

from fractions import Fraction

import numpy as np
import pytest

from jostkit import star_example as kh
from jostkit import model as jmodel
from jostkit import solve


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_boundary(n, rng):
    """Selfadjoint pair from a random unitary: A=(I-U)/2, B=i(I+U)/2."""
    u = random_unitary(n, rng)
    eye = np.eye(n)
    return (eye - u) / 2.0, 1j * (eye + u) / 2.0


def random_smooth_document(n, seed, x_span=10.0, n_samples=81,
                           amplitude=0.25, with_delta=False):
    """Sampled-grid potential: a few Gaussian bumps per entry, selfadjoint."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, x_span, n_samples)
    vals = np.zeros((n_samples, n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(i, n):
            bump = np.zeros_like(xs, dtype=np.complex128)
            for _ in range(3):
                center = rng.uniform(0.3, 4.0)
                width = rng.uniform(0.5, 1.2)
                amp = amplitude * rng.normal()
                if i != j:
                    amp = amp + 1j * amplitude * rng.normal()
                bump = bump + amp * np.exp(-((xs - center) / width) ** 2)
            vals[:, i, j] = bump
            vals[:, j, i] = np.conj(bump)

    def enc(m):
        out = np.empty(m.shape + (2,))
        out[..., 0] = np.real(m)
        out[..., 1] = np.imag(m)
        return out.tolist()

    a, b = random_boundary(n, rng)
    doc = {
        "n": n,
        "x_max": 12.0,
        "regular": [{"kind": "grid", "xs": xs.tolist(),
                     "values": [enc(v) for v in vals]}],
        "deltas": [],
        "boundary": {"A": enc(a), "B": enc(b)},
    }
    if with_delta:
        gamma = rng.normal(size=(n, n)) * 0.4
        gamma = 0.5 * (gamma + gamma.T)
        doc["deltas"] = [{"x0": 1.5, "gamma": enc(gamma.astype(complex))}]
    return doc


@pytest.fixture(scope="session")
def cfg():
    return solve.SolverConfig()


@pytest.fixture(scope="session")
def star_exceptional():
    return kh.kirchhoff(Fraction(-31, 77))


@pytest.fixture(scope="session")
def star_pot(star_exceptional):
    pot, bc = jmodel.load_document(star_exceptional.document())
    return pot, bc


@pytest.fixture(scope="session")
def star_bundle(star_pot, cfg):
    pot, _ = star_pot
    return solve.zero_energy_bundle(pot, cfg)


@pytest.fixture(scope="session")
def star_phi0(star_pot, cfg):
    pot, bc = star_pot
    return solve.regular_field(pot, bc, 0.0, cfg)


@pytest.fixture(scope="session")
def free_models():
    """Free potential, n = 2, with Dirichlet and Neumann boundaries."""
    pot = jmodel.load_potential({"n": 2, "regular": [], "deltas": []})
    dirichlet = jmodel.validate_boundary(np.zeros((2, 2)), np.eye(2))
    neumann = jmodel.validate_boundary(np.eye(2), np.zeros((2, 2)))
    return pot, dirichlet, neumann


def approx_err(a, b):
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())
