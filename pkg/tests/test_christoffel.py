import math

import numpy as np
import pytest

from acoustic_axes.christoffel import (
    adjugate,
    classify_special,
    eigenmodes,
    gamma_of,
    invariants,
    reduce,
    sym3_eigh,
)
from acoustic_axes.media import Material

from conftest import random_orthorhombic, random_triclinic, random_unit


def test_reduce_is_traceless_and_shifts_spectrum(rng):
    m = random_triclinic(rng)
    g = gamma_of(m, random_unit(rng))
    r = reduce(g)
    assert abs(np.trace(r.Y)) < 1e-13 * np.abs(g).max()
    assert np.allclose(np.linalg.eigvalsh(g), np.linalg.eigvalsh(r.Y) + r.gamma)


def test_cayley_hamilton(rng):
    for _ in range(100):
        Y = reduce(gamma_of(random_triclinic(rng), random_unit(rng))).Y
        inv = invariants(Y)
        lhs = Y @ Y @ Y + inv.P * Y + inv.Q * np.eye(3)
        assert np.linalg.norm(lhs) <= 1e-10 * np.linalg.norm(Y) ** 3


def test_adjugate_identities(rng):
    a = rng.normal(size=(3, 3))
    assert np.allclose(adjugate(a) @ a, np.linalg.det(a) * np.eye(3))
    Y = reduce(a + a.T).Y
    assert np.trace(adjugate(Y)) == pytest.approx(-0.5 * np.sum(Y * Y), rel=1e-12)


def test_sigma_on_planted_axis(rng):
    for sigma in (-0.7, 0.3):
        q = random_unit(rng)
        Y = sigma * (np.eye(3) - 3 * np.outer(q, q))
        assert invariants(Y).sigma == pytest.approx(sigma, rel=1e-13)


def test_spherical_sigma_is_zero():
    assert invariants(np.zeros((3, 3))).sigma == 0.0


def test_sym3_eigh_matches_lapack(rng):
    for _ in range(200):
        a = rng.normal(size=(3, 3))
        a = a + a.T
        w, V = sym3_eigh(a)
        assert np.allclose(w, np.linalg.eigvalsh(a)[::-1], atol=1e-12)
        assert np.allclose(V.T @ V, np.eye(3), atol=1e-12)
        assert np.allclose(a @ V, V * w, atol=1e-12)


@pytest.mark.parametrize("gap", [1e-4, 1e-8, 1e-12])
def test_sym3_eigh_near_degenerate(rng, gap):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    lam = np.array([2.0 + gap, 2.0, -1.0])
    a = q @ np.diag(lam) @ q.T
    w, V = sym3_eigh(a)
    assert np.allclose(w, lam, atol=1e-14)
    assert np.linalg.norm(a @ V - V * w) < 1e-14
    # the isolated eigenvector is accurate regardless of the close pair
    assert abs(abs(V[:, 2] @ q[:, 2]) - 1.0) < 1e-14


def test_eigenmodes_isotropic():
    m = Material.isotropic(1.0, 1.0)
    modes = eigenmodes(gamma_of(m, [0.0, 0.0, 1.0]))
    assert np.allclose(modes.speeds, [math.sqrt(3.0), 1.0, 1.0])
    assert abs(modes.U[2, 0]) == pytest.approx(1.0)


def test_eigenmodes_non_propagating():
    m = Material.cubic(1.0, 3.0, -1.0)
    modes = eigenmodes(gamma_of(m, [1.0, 0.0, 0.0]))
    assert not modes.propagating.all()
    assert np.isnan(modes.speeds[~modes.propagating]).all()


def test_eigenmodes_against_lapack(rng):
    m = random_orthorhombic(rng)
    for n in random_unit(rng, 20):
        g = gamma_of(m, n)
        modes = eigenmodes(g)
        assert np.allclose(modes.v2, np.linalg.eigvalsh(g)[::-1], rtol=1e-12)
        assert np.allclose(modes.shifted, modes.v2 - modes.gamma)


def test_special_directions(rng):
    iso = Material.isotropic(1.0, 1.0)
    assert classify_special(iso, random_unit(rng)) == {"pure_longitudinal": True, "pure_shear": True}
    cubic = Material.cubic(4.0, 1.0, 1.0)
    assert classify_special(cubic, [1.0, 0.0, 0.0]) == {"pure_longitudinal": True, "pure_shear": True}
    n = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    assert classify_special(cubic, n)["pure_longitudinal"]
    n = np.array([0.3, 0.5, 0.7])
    n /= np.linalg.norm(n)
    assert classify_special(cubic, n) == {"pure_longitudinal": False, "pure_shear": False}
