"""Christoffel tensor, its traceless part, invariants and wave modes."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .media import Material, full_tensor_contract

SPHERICAL_REL = 1e-10
DEGENERATE_REL = 1e-9

_SQRT6 = math.sqrt(6.0)


@dataclass(frozen=True, eq=False)
class ReducedTensor:
    """Traceless part ``Y`` of an acoustic tensor plus the removed mean ``gamma``."""

    Y: np.ndarray
    gamma: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.Y))

    @property
    def eps_abs(self) -> float:
        """Absolute threshold below which Y counts as zero (spherical)."""
        gamma_norm = math.sqrt(self.norm**2 + 3 * self.gamma**2)
        return SPHERICAL_REL * max(gamma_norm, 1.0)

    @property
    def is_spherical(self) -> bool:
        return self.norm <= self.eps_abs


@dataclass(frozen=True)
class InvariantSet:
    P: float
    Q: float
    trY2: float
    trY3: float
    detY: float
    sigma: float


@dataclass(frozen=True, eq=False)
class WaveModeSet:
    """Squared speeds (descending) and polarizations as columns of ``U``."""

    v2: np.ndarray
    U: np.ndarray
    shifted: np.ndarray
    gamma: float

    @property
    def propagating(self) -> np.ndarray:
        return self.v2 > 0

    @property
    def speeds(self) -> np.ndarray:
        """Phase speeds; NaN for non-propagating modes."""
        with np.errstate(invalid="ignore"):
            return np.where(self.v2 > 0, np.sqrt(np.abs(self.v2)), np.nan)


def gamma_of(material: Material, n) -> np.ndarray:
    """Christoffel tensor Gamma(n) = C_ijkl n_j n_k / rho."""
    return full_tensor_contract(material.stiffness, n) / material.density


def reduce(gamma_tensor) -> ReducedTensor:
    g = np.asarray(gamma_tensor, dtype=float)
    g = 0.5 * (g + g.T)
    mean = float(np.trace(g)) / 3.0
    Y = g - mean * np.eye(3)
    Y -= (np.trace(Y) / 3.0) * np.eye(3)
    return ReducedTensor(Y, mean)


def invariants(reduced: ReducedTensor | np.ndarray) -> InvariantSet:
    """P, Q, traces, determinant and the speed parameter sigma = -3 det Y / tr Y^2."""
    if not isinstance(reduced, ReducedTensor):
        reduced = ReducedTensor(np.asarray(reduced, dtype=float), 0.0)
    Y = reduced.Y
    tr2 = float(np.sum(Y * Y))
    tr3 = float(np.trace(Y @ Y @ Y))
    det = float(np.linalg.det(Y))
    if tr2 > reduced.eps_abs**2:
        sigma = -3.0 * det / tr2
    else:
        sigma = 0.0
    return InvariantSet(P=-0.5 * tr2, Q=-det, trY2=tr2, trY3=tr3, detY=det, sigma=sigma)


def adjugate(m: np.ndarray) -> np.ndarray:
    """Transpose of the cofactor matrix of a 3x3 matrix."""
    m = np.asarray(m, dtype=float)
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            cof[i, j] = (-1) ** (i + j) * (
                m[r[0], c[0]] * m[r[1], c[1]] - m[r[0], c[1]] * m[r[1], c[0]]
            )
    return cof.T


def _null_vector(m: np.ndarray) -> np.ndarray:
    """Unit vector spanning the (numerical) kernel of a rank-2 symmetric 3x3 matrix."""
    crosses = (
        np.cross(m[0], m[1]),
        np.cross(m[0], m[2]),
        np.cross(m[1], m[2]),
    )
    best = max(crosses, key=lambda v: float(v @ v))
    return best / np.linalg.norm(best)


def _depressed_roots(y: np.ndarray) -> np.ndarray:
    """Descending roots of rho^3 - rho/2 - det(y) for traceless y with |y|_F = 1."""
    arg = 3.0 * _SQRT6 * float(np.linalg.det(y))
    theta = math.acos(min(1.0, max(-1.0, arg))) / 3.0
    k = 2.0 / _SQRT6
    return np.array(
        [
            k * math.cos(theta),
            k * math.cos(theta - 2.0 * math.pi / 3.0),
            k * math.cos(theta + 2.0 * math.pi / 3.0),
        ]
    )


def sym3_eigh(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric 3x3 matrix.

    Eigenvalues come from the trigonometric solution of the depressed cubic
    of the traceless part. The best-separated eigenvector is taken from a
    cross product of rows of ``Y - rho I`` and polished by its Rayleigh
    quotient; the other two are obtained exactly from the 2x2 block in the
    orthogonal complement, so near-degenerate pairs keep full accuracy.

    Returns
    -------
    w : (3,) eigenvalues, descending
    V : (3, 3) orthonormal eigenvectors as columns
    """
    reduced = reduce(a)
    Y, mean = reduced.Y, reduced.gamma
    scale = reduced.norm
    if reduced.is_spherical:
        return np.full(3, mean), np.eye(3)
    y = Y / scale
    r = _depressed_roots(y)
    iso = 0 if r[0] - r[1] >= r[1] - r[2] else 2

    v = _null_vector(y - r[iso] * np.eye(3))
    r_iso = float(v @ y @ v)
    v = _null_vector(y - r_iso * np.eye(3))
    r_iso = float(v @ y @ v)

    # complement basis by Gram-Schmidt against the isolated vector
    e = np.zeros(3)
    e[int(np.argmin(np.abs(v)))] = 1.0
    b1 = e - (e @ v) * v
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(v, b1)
    p, o, q = b1 @ y @ b1, b1 @ y @ b2, b2 @ y @ b2
    mid = 0.5 * (p + q)
    rad = math.hypot(0.5 * (p - q), o)
    phi = 0.5 * math.atan2(2.0 * o, p - q)
    u_hi = math.cos(phi) * b1 + math.sin(phi) * b2
    u_lo = -math.sin(phi) * b1 + math.cos(phi) * b2

    vals = np.array([r_iso, mid + rad, mid - rad])
    vecs = np.column_stack([v, u_hi, u_lo])
    order = np.argsort(-vals, kind="stable")
    return mean + scale * vals[order], vecs[:, order]


def batched_eigvalsh(a: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of a stack (..., 3, 3) of symmetric matrices.

    Trigonometric solution only; accurate to about sqrt(eps) relative at
    near-degenerate pairs, which is ample for a coarse degeneracy map.
    """
    a = np.asarray(a, dtype=float)
    mean = np.trace(a, axis1=-2, axis2=-1) / 3.0
    Y = a - mean[..., None, None] * np.eye(3)
    scale = np.sqrt(np.sum(Y * Y, axis=(-2, -1)))
    safe = np.where(scale > 0, scale, 1.0)
    y = Y / safe[..., None, None]
    arg = np.clip(3.0 * _SQRT6 * np.linalg.det(y), -1.0, 1.0)
    theta = np.arccos(arg) / 3.0
    k = 2.0 / _SQRT6
    r = np.stack(
        [
            k * np.cos(theta),
            k * np.cos(theta - 2.0 * np.pi / 3.0),
            k * np.cos(theta + 2.0 * np.pi / 3.0),
        ],
        axis=-1,
    )
    return mean[..., None] + scale[..., None] * r


def eigenmodes(gamma_tensor) -> WaveModeSet:
    g = np.asarray(gamma_tensor, dtype=float)
    w, V = sym3_eigh(g)
    mean = float(np.trace(g)) / 3.0
    return WaveModeSet(v2=w, U=V, shifted=w - mean, gamma=mean)


def _eigenspaces(w: np.ndarray, V: np.ndarray, tol: float) -> list[np.ndarray]:
    scale = max(float(np.max(np.abs(w - w.mean()))), 1e-300)
    groups: list[list[int]] = [[0]]
    for i in (1, 2):
        if abs(w[i] - w[groups[-1][-1]]) <= tol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [V[:, g] for g in groups]


def classify_special(material: Material, n, tol: float = 1e-8) -> dict:
    """Fedorov special directions: pure longitudinal / pure shear.

    Degenerate eigenvalues are handled through whole eigenspaces, so the
    answer does not depend on the arbitrary basis picked inside them.
    """
    n = np.asarray(n, dtype=float)
    g = gamma_of(material, n)
    if reduce(g).is_spherical:
        return {"pure_longitudinal": True, "pure_shear": True}
    w, V = sym3_eigh(g)
    longitudinal = shear = False
    for space in _eigenspaces(w, V, tol):
        proj = np.linalg.norm(space.T @ n)
        if proj > 1.0 - tol:
            longitudinal = True
        if space.shape[1] >= 2 or proj < tol:
            shear = True
    return {"pure_longitudinal": longitudinal, "pure_shear": shear}
