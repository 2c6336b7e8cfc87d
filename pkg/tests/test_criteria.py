import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acoustic_axes.christoffel import adjugate
from acoustic_axes.criteria import (
    adjoint_residual,
    alshits_lothe,
    axis_test,
    canonical_sign,
    criteria_residuals,
    discriminant_residual,
    khatkevich,
    khatkevich_status,
    minimal_poly_residual,
    norris,
    norris_residual,
    polarization_residual,
    verdict_from_gamma,
)
from acoustic_axes.media import Material, NonUnitDirection

unit_vectors = st.lists(
    st.floats(-1, 1, allow_nan=False), min_size=3, max_size=3
).filter(lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.array(v) / np.linalg.norm(v))
sigmas = st.floats(0.01, 100).flatmap(lambda s: st.sampled_from([s, -s]))


def planted(sigma, q):
    return sigma * (np.eye(3) - 3 * np.outer(q, q))


def separated(rng):
    """Traceless Y with eigenvalue gaps at least a fifth of its norm."""
    while True:
        lam = rng.normal(size=3)
        lam -= lam.mean()
        lam /= np.linalg.norm(lam)
        d = np.abs(np.subtract.outer(lam, lam))[np.triu_indices(3, 1)]
        if d.min() > 0.2:
            q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
            return q @ np.diag(lam) @ q.T, lam


@settings(max_examples=200, deadline=None)
@given(sigma=sigmas, q=unit_vectors)
def test_planted_axes_pass_every_family(sigma, q):
    res = criteria_residuals(planted(sigma, q), sigma, q)
    for value in res.scalar_families().values():
        assert value <= 1e-10
    assert res.khatkevich_status in ("pass", "inconclusive")


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_separated_spectra_fail_every_family(seed, scale):
    Y, _ = separated(np.random.default_rng(seed))
    res = criteria_residuals(scale * Y)
    for value in res.scalar_families().values():
        assert value > 1e-4
    assert res.khatkevich_status != "pass"


def test_residuals_are_scale_free(rng):
    Y, _ = separated(rng)
    a = criteria_residuals(Y).scalar_families()
    b = criteria_residuals(1e7 * Y).scalar_families()
    for key in a:
        assert b[key] == pytest.approx(a[key], rel=1e-9)


def test_discriminant_in_eigenvalues(rng):
    Y, lam = separated(rng)
    prod = np.prod([lam[0] - lam[1], lam[1] - lam[2], lam[2] - lam[0]])
    # for |y| = 1 the cubic discriminant is prod^2 = 1/2 - 27 det^2
    assert discriminant_residual(Y) == pytest.approx(2 * prod**2, rel=1e-10)


def test_norris_diagonal_basis(rng):
    lam = rng.normal(size=3)
    lam -= lam.mean()
    phi = norris(np.diag(lam))
    prod = (lam[0] - lam[1]) * (lam[1] - lam[2]) * (lam[2] - lam[0])
    assert 6 * phi.phi[0, 1, 2] == pytest.approx(prod, rel=1e-12)
    # only the (1,2,3) pattern survives
    mask = np.ones((3, 3, 3), dtype=bool)
    for idx in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]:
        mask[idx] = False
    assert np.abs(phi.phi[mask]).max() < 1e-15
    m = rng.normal(size=3)
    assert phi.form(m) == pytest.approx(m.prod() * prod, rel=1e-12)


def test_norris_symmetric_traceless_and_triple_product(rng):
    Y, _ = separated(rng)
    phi = norris(Y)
    for p in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.allclose(phi.phi, phi.phi.transpose(p))
    assert np.allclose(phi.trace, 0, atol=1e-14)
    m = rng.normal(size=3)
    triple = np.linalg.det(np.column_stack([m, Y @ m, Y @ Y @ m]))
    assert phi.form(m) == pytest.approx(triple, rel=1e-12)
    assert len(phi.components) == 10


def test_norris_bounded_by_gap(rng):
    for _ in range(100):
        Y, lam = separated(rng)
        gap = np.min(np.abs(np.subtract.outer(lam, lam))[np.triu_indices(3, 1)])
        r = norris_residual(Y)
        assert 0.3 * gap <= r <= 0.82 * gap


def test_khatkevich_inconclusive_on_diagonal():
    Y = np.diag([1.0, 0.5, -1.5])
    assert khatkevich(Y) == (0.0, 0.0)
    assert khatkevich_status(Y) == "inconclusive"
    # Alshits-Lothe still sees the non-axis through R7
    assert np.linalg.norm(alshits_lothe(Y)) > 1e-2


def test_khatkevich_pass_on_generic_planted(rng):
    q = np.array([0.3, 0.5, 0.8])
    q /= np.linalg.norm(q)
    assert khatkevich_status(planted(-0.4, q)) == "pass"


def test_adjoint_rank_one_at_axis():
    q = np.array([0.0, 0.6, 0.8])
    sigma = 0.25
    Y = planted(sigma, q)
    # spectrum (sigma, sigma, -2 sigma) gives adj Y = -2 sigma^2 I + 3 sigma^2 q q
    assert np.allclose(adjugate(Y), -2 * sigma**2 * np.eye(3) + 3 * sigma**2 * np.outer(q, q))
    assert adjoint_residual(Y, sigma) < 1e-15
    assert minimal_poly_residual(Y, sigma) < 1e-15
    assert polarization_residual(Y, sigma, q) < 1e-15


def test_canonical_sign():
    assert np.array_equal(canonical_sign([0.0, -1.0, 2.0]), [0.0, 1.0, -2.0])
    assert np.array_equal(canonical_sign([1e-9, -1.0, 0.0]), [-1e-9, 1.0, 0.0])


def test_verdict_kinds():
    q = np.array([0.0, 0.0, 1.0])
    v = verdict_from_gamma(2 * np.eye(3) + planted(-0.5, q), q)
    assert v.kind == "prolate" and v.sigma == pytest.approx(-0.5)
    assert v.v_double == pytest.approx(math.sqrt(1.5))
    assert v.v_single == pytest.approx(math.sqrt(3.0))
    v = verdict_from_gamma(2 * np.eye(3) + planted(0.5, q), q)
    assert v.kind == "oblate"
    v = verdict_from_gamma(2 * np.eye(3), q)
    assert v.kind == "spherical" and v.v_double == pytest.approx(math.sqrt(2))
    v = verdict_from_gamma(np.diag([1.0, 2.0, 4.0]), q)
    assert v.kind == "none" and not v.is_axis


def test_verdict_non_propagating():
    q = np.array([1.0, 0.0, 0.0])
    v = verdict_from_gamma(planted(0.5, q) - 0.2 * np.eye(3), q)
    assert v.kind == "oblate"
    assert v.v_single is None and v.v_double is not None
    assert v.to_dict()["non_propagating"]


def test_axis_test_cubic(cubic_411):
    v = axis_test(cubic_411, np.array([1.0, 1.0, 1.0]) / math.sqrt(3))
    assert v.kind == "prolate"
    assert v.sigma == pytest.approx(-2 / 3, rel=1e-12)
    n = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    assert axis_test(cubic_411, n).kind == "none"


def test_axis_test_errors(cubic_411):
    with pytest.raises(NonUnitDirection):
        axis_test(cubic_411, [1.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        axis_test(cubic_411, [1.0, 0.0, 0.0], tol=0.0)


def test_isotropic_every_direction(isotropic_111, rng):
    for n in rng.normal(size=(20, 3)):
        v = axis_test(isotropic_111, n / np.linalg.norm(n))
        assert v.kind == "prolate"
        assert np.allclose(abs(v.q @ (n / np.linalg.norm(n))), 1.0)
