"""Acoustic-axis criteria as scale-free residuals, and the combined axis verdict.

Every residual is evaluated on ``y = Y / |Y|_F`` so a single tolerance applies
to any material scale. A direction with ``Y = 0`` is a spherical (triple)
axis and every residual is reported as zero.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .christoffel import ReducedTensor, adjugate, gamma_of, invariants, reduce, sym3_eigh
from .media import Material

DEFAULT_TOL = 1e-8

_LEVI_CIVITA = np.zeros((3, 3, 3))
for _p in itertools.permutations(range(3)):
    _LEVI_CIVITA[_p] = np.linalg.det(np.eye(3)[list(_p)])


def _as_reduced(Y) -> ReducedTensor:
    if isinstance(Y, ReducedTensor):
        return Y
    return ReducedTensor(np.asarray(Y, dtype=float), 0.0)


def _normalized(Y, sigma: float | None = None):
    """(y, sigma/|Y|) or None when Y is spherical."""
    r = _as_reduced(Y)
    if r.is_spherical:
        return None
    s = r.norm
    return r.Y / s, (None if sigma is None else sigma / s)


def discriminant_residual(Y) -> float:
    """|6 (tr y^3)^2 - (tr y^2)^3| / (tr y^2)^3; zero exactly at axes."""
    norm = _normalized(Y)
    if norm is None:
        return 0.0
    y, _ = norm
    t2 = float(np.sum(y * y))
    t3 = float(np.trace(y @ y @ y))
    return abs(6.0 * t3 * t3 - t2**3) / max(t2**3, 1e-300)


def adjoint_residual(Y, sigma: float) -> float:
    """|sigma^2 I + sigma Y + adj Y|_F / |Y|_F^2."""
    norm = _normalized(Y, sigma)
    if norm is None:
        return 0.0
    y, s = norm
    return float(np.linalg.norm(s * s * np.eye(3) + s * y + adjugate(y)))


def minimal_poly_residual(Y, sigma: float) -> float:
    """|Y^2 + sigma Y - 2 sigma^2 I|_F / |Y|_F^2."""
    norm = _normalized(Y, sigma)
    if norm is None:
        return 0.0
    y, s = norm
    return float(np.linalg.norm(y @ y + s * y - 2.0 * s * s * np.eye(3)))


def minimal_poly_matrix(Y) -> np.ndarray:
    """Normalized minimal-polynomial residual matrix with sigma from invariants."""
    r = _as_reduced(Y)
    if r.is_spherical:
        return np.zeros((3, 3))
    sigma = invariants(r).sigma
    y, s = r.Y / r.norm, sigma / r.norm
    return y @ y + s * y - 2.0 * s * s * np.eye(3)


def _raw_khatkevich(y: np.ndarray) -> tuple[float, float]:
    y11, y22, y33 = y[0, 0], y[1, 1], y[2, 2]
    y12, y13, y23 = y[0, 1], y[0, 2], y[1, 2]
    r1 = (y11 - y22) * y13 * y23 - y12 * (y13**2 - y23**2)
    r2 = (y11 - y33) * y12 * y23 - y13 * (y12**2 - y23**2)
    return float(r1), float(r2)


def khatkevich(Y) -> tuple[float, float]:
    """(R1, R2) normalized by |Y|_F^3.

    Both vanish identically when an off-diagonal entry is zero; use
    :func:`khatkevich_status` to tell that apart from a genuine pass.
    """
    norm = _normalized(Y)
    if norm is None:
        return 0.0, 0.0
    return _raw_khatkevich(norm[0])


def khatkevich_status(Y, tol: float = DEFAULT_TOL) -> str:
    """'pass', 'fail' or 'inconclusive' (some off-diagonal entry vanishes)."""
    norm = _normalized(Y)
    if norm is None:
        return "pass"
    y = norm[0]
    r1, r2 = _raw_khatkevich(y)
    if max(abs(r1), abs(r2)) > tol:
        return "fail"
    if min(abs(y[0, 1]), abs(y[0, 2]), abs(y[1, 2])) <= tol:
        return "inconclusive"
    return "pass"


def alshits_lothe(Y) -> np.ndarray:
    """The seven polynomials R1..R7, normalized by |Y|_F^3."""
    norm = _normalized(Y)
    if norm is None:
        return np.zeros(7)
    y = norm[0]
    y11, y22, y33 = y[0, 0], y[1, 1], y[2, 2]
    y12, y13, y23 = y[0, 1], y[0, 2], y[1, 2]
    r1, r2 = _raw_khatkevich(y)
    r3 = (y22 - y33) * y12 * y13 - y23 * (y12**2 - y13**2)
    r4 = (y11 - y22) * (y11 - y33) * y23 - (y11 - y33) * y12 * y13 + y23 * (y12**2 - y23**2)
    r5 = (y22 - y11) * (y22 - y33) * y13 - (y22 - y33) * y12 * y23 + y13 * (y12**2 - y13**2)
    r6 = (y33 - y11) * (y33 - y22) * y12 - (y33 - y22) * y13 * y23 + y12 * (y13**2 - y12**2)
    r7 = (
        (y11 - y22) * (y22 - y33) * (y11 - y33)
        + (y22 - y33) * (y13**2 - y23**2)
        + (y11 - y22) * (y13**2 - y12**2)
    )
    return np.array([r1, r2, r3, r4, r5, r6, r7], dtype=float)


@dataclass(frozen=True, eq=False)
class NorrisTensor:
    """Fully symmetric third-order tensor of the triple product [m, Ym, Y^2 m]."""

    phi: np.ndarray

    # one representative per symmetric index pattern
    INDEPENDENT = tuple(itertools.combinations_with_replacement(range(3), 3))

    @property
    def components(self) -> dict[tuple[int, int, int], float]:
        return {idx: float(self.phi[idx]) for idx in self.INDEPENDENT}

    @property
    def trace(self) -> np.ndarray:
        return np.einsum("ijj->i", self.phi)

    def form(self, m) -> float:
        """phi^{ijk} m_i m_j m_k."""
        m = np.asarray(m, dtype=float)
        return float(np.einsum("ijk,i,j,k->", self.phi, m, m, m))


def norris(Y) -> NorrisTensor:
    """Symmetrized (averaged over index permutations) eps_irs Y_rj (Y^2)_sk."""
    Y = _as_reduced(Y).Y
    raw = np.einsum("irs,rj,sk->ijk", _LEVI_CIVITA, Y, Y @ Y)
    perms = list(itertools.permutations(range(3)))
    phi = sum(np.transpose(raw, p) for p in perms) / len(perms)
    return NorrisTensor(phi)


def norris_residual(Y) -> float:
    r = _as_reduced(Y)
    if r.is_spherical:
        return 0.0
    return float(np.linalg.norm(norris(r.Y / r.norm).phi))


def polarization_residual(Y, sigma: float, q) -> float:
    """|Y - sigma (I - 3 q q)|_F / |Y|_F."""
    Y = _as_reduced(Y).Y
    q = np.asarray(q, dtype=float)
    diff = Y - sigma * (np.eye(3) - 3.0 * np.outer(q, q))
    return float(np.linalg.norm(diff) / max(np.linalg.norm(Y), 1e-300))


def canonical_sign(v) -> np.ndarray:
    """Flip so the first component with magnitude > 1e-8 is positive."""
    v = np.asarray(v, dtype=float)
    for x in v:
        if abs(x) > 1e-8:
            return v if x > 0 else -v
    return v


@dataclass(frozen=True)
class CriteriaResiduals:
    discriminant: float
    adjoint: float
    minimal_poly: float
    khatkevich: tuple[float, float]
    khatkevich_status: str
    alshits_lothe: tuple[float, ...]
    norris: float
    polarization: float

    @property
    def alshits_lothe_norm(self) -> float:
        return float(np.linalg.norm(self.alshits_lothe))

    def scalar_families(self) -> dict[str, float]:
        """One scalar per criterion family (Khatkevich excluded: it is tri-state)."""
        return {
            "discriminant": self.discriminant,
            "adjoint": self.adjoint,
            "minimal_poly": self.minimal_poly,
            "alshits_lothe": self.alshits_lothe_norm,
            "norris": self.norris,
            "polarization": self.polarization,
        }

    def to_dict(self) -> dict:
        return {
            "discriminant": self.discriminant,
            "adjoint": self.adjoint,
            "minimal_poly": self.minimal_poly,
            "khatkevich": list(self.khatkevich),
            "khatkevich_status": self.khatkevich_status,
            "alshits_lothe": list(self.alshits_lothe),
            "norris": self.norris,
            "polarization": self.polarization,
        }


def criteria_residuals(Y, sigma: float | None = None, q=None, tol: float = DEFAULT_TOL):
    """Evaluate every criterion family on one reduced tensor."""
    r = _as_reduced(Y)
    if sigma is None:
        sigma = invariants(r).sigma
    if q is None:
        q = single_polarization(r, sigma)
    return CriteriaResiduals(
        discriminant=discriminant_residual(r),
        adjoint=adjoint_residual(r, sigma),
        minimal_poly=minimal_poly_residual(r, sigma),
        khatkevich=khatkevich(r),
        khatkevich_status=khatkevich_status(r, tol),
        alshits_lothe=tuple(float(x) for x in alshits_lothe(r)),
        norris=norris_residual(r),
        polarization=0.0 if r.is_spherical else polarization_residual(r, sigma, q),
    )


def single_polarization(Y, sigma: float) -> np.ndarray:
    """Unit eigenvector of Y whose eigenvalue is closest to -2 sigma."""
    r = _as_reduced(Y)
    w, V = sym3_eigh(r.Y)
    q = V[:, int(np.argmin(np.abs(w + 2.0 * sigma)))]
    return canonical_sign(q)


@dataclass(frozen=True, eq=False)
class AxisVerdict:
    """Full verdict for one propagation direction.

    ``kind`` is one of ``none``, ``prolate``, ``oblate``, ``spherical``.
    ``v_double`` / ``v_single`` are None when the squared speed is not
    positive (non-propagating).
    """

    n: np.ndarray
    kind: str
    sigma: float
    gamma: float
    q: np.ndarray | None
    v_double: float | None
    v_single: float | None
    residuals: CriteriaResiduals
    Y: np.ndarray = field(repr=False)

    @property
    def is_axis(self) -> bool:
        return self.kind != "none"

    def to_dict(self) -> dict:
        return {
            "direction": [float(x) for x in self.n],
            "kind": self.kind,
            "sigma": self.sigma,
            "gamma": self.gamma,
            "q": None if self.q is None else [float(x) for x in self.q],
            "v_double": self.v_double,
            "v_single": self.v_single,
            "non_propagating": self.v_double is None or self.v_single is None,
            "residuals": self.residuals.to_dict(),
        }


def _speed(v2: float) -> float | None:
    return math.sqrt(v2) if v2 > 0 else None


def verdict_from_gamma(gamma_tensor, n, tol: float = DEFAULT_TOL) -> AxisVerdict:
    """Axis verdict for a given acoustic tensor (direction carried along)."""
    r = reduce(gamma_tensor)
    n = np.asarray(n, dtype=float)
    inv = invariants(r)
    sigma = inv.sigma
    if r.is_spherical:
        res = criteria_residuals(r, 0.0, np.array([1.0, 0.0, 0.0]), tol)
        v = _speed(r.gamma)
        return AxisVerdict(n, "spherical", 0.0, r.gamma, None, v, v, res, r.Y)
    q = single_polarization(r, sigma)
    res = criteria_residuals(r, sigma, q, tol)
    sigma_ok = abs(sigma * sigma - inv.trY2 / 6.0) <= tol * inv.trY2 / 6.0
    if res.minimal_poly <= tol and sigma_ok:
        kind = "prolate" if sigma < 0 else "oblate"
        return AxisVerdict(
            n, kind, sigma, r.gamma, q,
            _speed(r.gamma + sigma), _speed(r.gamma - 2.0 * sigma), res, r.Y,
        )
    return AxisVerdict(n, "none", sigma, r.gamma, None, None, None, res, r.Y)


def axis_test(material: Material, n, tol: float = DEFAULT_TOL) -> AxisVerdict:
    """Decide whether ``n`` is an acoustic axis of ``material``.

    Raises :class:`~acoustic_axes.media.NonUnitDirection` for non-unit ``n``.
    """
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    return verdict_from_gamma(gamma_of(material, n), n, tol)
