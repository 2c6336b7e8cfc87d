"""Closed-form acoustic axes for isotropic, cubic and RTHC crystals.

RTHC (orthorhombic, tetragonal, hexagonal, cubic) media have, in crystal
axes, a Christoffel matrix with quadratic-form diagonal entries
``sum_j a_ij n_j^2`` and monomial off-diagonal entries ``r_ij n_i n_j``.
The coefficients are extracted numerically from the stiffness and the form
is validated before use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .christoffel import gamma_of
from .criteria import DEFAULT_TOL, AxisVerdict, axis_test, canonical_sign, verdict_from_gamma
from .media import Material, full_tensor_contract

DEDUP_ANGLE = 1e-6
_PLANES = {"12": (0, 1, 2), "23": (1, 2, 0), "13": (2, 0, 1)}


class NotRTHC(ValueError):
    """The stiffness does not have the RTHC Christoffel structure in its frame."""


@dataclass(frozen=True, eq=False)
class Axis:
    """A verified axis plus the closed-form quantities that predicted it."""

    verdict: AxisVerdict
    origin: str
    sigma_formula: float | None = None
    q_formula: np.ndarray | None = None

    @property
    def n(self) -> np.ndarray:
        return self.verdict.n

    def to_dict(self) -> dict:
        d = self.verdict.to_dict()
        d["origin"] = self.origin
        d["sigma_formula"] = self.sigma_formula
        return d


@dataclass(eq=False)
class AxisSolution:
    """A set of acoustic axes.

    ``kind`` is ``discrete``, ``all_sphere``, ``conic`` or ``none``. For
    ``conic`` each entry of ``conics`` holds ``k`` with the cone
    ``k1 n1^2 + k2 n2^2 + k3 n3^2 = 0``; ``axes`` then lists the isolated
    axes lying off every cone. ``continuum`` carries sigma and speeds for
    ``all_sphere`` solutions.
    """

    kind: str
    axes: list[Axis] = field(default_factory=list)
    conics: list[np.ndarray] = field(default_factory=list)
    continuum: dict | None = None
    solver: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def conic(self) -> np.ndarray | None:
        return self.conics[0] if self.conics else None

    @property
    def directions(self) -> np.ndarray:
        return np.array([a.n for a in self.axes]).reshape(-1, 3)

    def to_dict(self) -> dict:
        axes = sorted(self.axes, key=lambda a: (a.verdict.kind, tuple(a.n)))
        conics = []
        for k in self.conics:
            entry = {"k": [float(x) for x in k]}
            entry.update(cone_geometry(k))
            conics.append(entry)
        return {
            "kind": self.kind,
            "solver": self.solver,
            "axes": [a.to_dict() for a in axes],
            "conics": conics,
            "continuum": self.continuum,
            "notes": list(self.notes),
        }


@dataclass(frozen=True, eq=False)
class RTHCCoefficients:
    """RTHC coefficients in stiffness units (Pa); divide by density for m^2/s^2.

    ``r`` is ordered (r12, r13, r23).
    """

    a: np.ndarray
    r: np.ndarray

    @property
    def b(self) -> np.ndarray:
        return self.a - self.a.mean(axis=0, keepdims=True)

    @property
    def scale(self) -> float:
        return float(max(np.abs(self.a).max(), np.abs(self.r).max(), 1e-300))

    def r_of(self, i: int, j: int) -> float:
        i, j = sorted((i, j))
        return float(self.r[{(0, 1): 0, (0, 2): 1, (1, 2): 2}[(i, j)]])

    def stiffness_gamma(self, n) -> np.ndarray:
        """rho * Gamma(n) rebuilt from the RTHC form."""
        n = np.asarray(n, dtype=float)
        n2 = n * n
        g = np.diag(self.a @ n2)
        g[0, 1] = g[1, 0] = self.r[0] * n[0] * n[1]
        g[0, 2] = g[2, 0] = self.r[1] * n[0] * n[2]
        g[1, 2] = g[2, 1] = self.r[2] * n[1] * n[2]
        return g


@dataclass(frozen=True)
class ObliqueIntermediates:
    alpha: np.ndarray
    u: np.ndarray
    w: np.ndarray


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def projective_angle(n1, n2) -> float:
    """Angle between two lines through the origin (min over +-n)."""
    c = abs(float(np.dot(_unit(n1), _unit(n2))))
    s = np.linalg.norm(np.cross(_unit(n1), _unit(n2)))
    return math.atan2(s, c)


def dedupe_axes(axes: list[Axis], angle: float = DEDUP_ANGLE) -> list[Axis]:
    """Merge axes closer than ``angle`` on the projective sphere, keeping the better one."""
    kept: list[Axis] = []
    for ax in axes:
        for i, other in enumerate(kept):
            if projective_angle(ax.n, other.n) < angle:
                if ax.verdict.residuals.minimal_poly < other.verdict.residuals.minimal_poly:
                    kept[i] = ax
                break
        else:
            kept.append(ax)
    return kept


# --- isotropic ---------------------------------------------------------------

def solve_isotropic(lam: float, mu: float, rho: float) -> AxisSolution:
    """Every direction is an axis; the single polarization is n itself."""
    gamma = (lam + 4 * mu) / (3 * rho)
    if abs(lam + mu) <= 1e-12 * max(abs(lam), abs(mu), 1e-300):
        sigma = 0.0
        kind = "spherical"
    else:
        sigma = -(lam + mu) / (3 * rho)
        kind = "prolate" if sigma < 0 else "oblate"
    v2d, v2s = gamma + sigma, gamma - 2 * sigma
    return AxisSolution(
        "all_sphere",
        continuum={
            "axis_kind": kind,
            "sigma": sigma,
            "gamma": gamma,
            "polarization": "q = n",
            "v_double": math.sqrt(v2d) if v2d > 0 else None,
            "v_single": math.sqrt(v2s) if v2s > 0 else None,
        },
        solver="isotropic",
    )


# --- cubic -------------------------------------------------------------------

_CUBIC_DIAGONALS = (
    (1.0, 1.0, 1.0),
    (-1.0, 1.0, 1.0),
    (1.0, -1.0, 1.0),
    (1.0, 1.0, -1.0),
)


def solve_cubic(c11: float, c12: float, c44: float, rho: float, tol: float = DEFAULT_TOL) -> AxisSolution:
    """Three coordinate axes and four body diagonals.

    When ``(C12 + C44) / (C11 - C44) == 1`` the reduced tensor has isotropic
    form and every direction is an axis; the seven lattice axes are still
    listed alongside the ``all_sphere`` marker. ``C11 == C44`` is handed to
    the general RTHC solver.
    """
    material = Material.cubic(c11, c12, c44, rho)
    alpha = c11 - c44
    delta = c12 + c44
    scale = max(abs(c11), abs(c12), abs(c44), 1e-300)
    if abs(alpha) <= 1e-12 * scale:
        sol = solve_rthc(material, tol)
        sol.notes.append("C11 == C44: delegated to RTHC solver")
        return sol

    axes = []
    sigma_coord = (c44 - c11) / (3 * rho)
    for i in range(3):
        n = np.eye(3)[i]
        axes.append(Axis(axis_test(material, n, tol), "coordinate", sigma_coord, n))
    sigma_diag = -delta / (3 * rho)
    for d in _CUBIC_DIAGONALS:
        n = canonical_sign(_unit(d))
        axes.append(Axis(axis_test(material, n, tol), "cubic-diagonal", sigma_diag, n))
    axes = [a for a in axes if a.verdict.is_axis]

    if abs(delta / alpha - 1.0) <= 1e-12:
        iso = solve_isotropic(c12, c44, rho)
        return AxisSolution(
            "all_sphere", axes, continuum=iso.continuum, solver="cubic",
            notes=["isotropic-form reduced tensor (xi == 1): every direction is an axis"],
        )
    return AxisSolution("discrete", axes, solver="cubic")


# --- RTHC ----------------------------------------------------------------------

def rthc_coefficients(material: Material, checks: int = 50) -> RTHCCoefficients:
    """Extract a_ij, r_ij from Christoffel evaluations and validate the form.

    Raises :class:`NotRTHC` if ``rho*Gamma`` differs from the RTHC form by
    more than 1e-10 relative at any of ``checks`` random directions.
    """
    c = material.stiffness
    a = np.empty((3, 3))
    for j in range(3):
        g = full_tensor_contract(c, np.eye(3)[j])
        a[:, j] = np.diag(g)
    r = np.empty(3)
    for k, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
        n = np.zeros(3)
        n[i] = n[j] = 1 / math.sqrt(2)
        r[k] = 2 * full_tensor_contract(c, n)[i, j]
    coeffs = RTHCCoefficients(a, r)

    rng = np.random.default_rng(20240611)
    for _ in range(checks):
        n = _unit(rng.normal(size=3))
        g = full_tensor_contract(c, n)
        err = np.linalg.norm(g - coeffs.stiffness_gamma(n))
        if err > 1e-10 * max(np.linalg.norm(g), 1e-300):
            raise NotRTHC("Christoffel matrix is not of RTHC form in the given frame")
    return coeffs


def _verify(coeffs: RTHCCoefficients, rho: float, n, tol: float) -> AxisVerdict:
    return verdict_from_gamma(coeffs.stiffness_gamma(n) / rho, n, tol)


def rthc_coordinate_axes(coeffs: RTHCCoefficients, rho: float, tol: float = DEFAULT_TOL) -> list[Axis]:
    """Axes along crystal axes, one candidate per (n = e_i, q = e_j) pair.

    At ``n = e_i`` the reduced diagonal is ``b[:, i]``; the pair passes when
    the two entries other than ``j`` coincide, and sigma is their value.
    """
    b = coeffs.b
    scale = coeffs.scale
    found = []
    for i in range(3):
        n = np.eye(3)[i]
        for j in range(3):
            k1, k2 = [k for k in range(3) if k != j]
            if abs(b[k1, i] - b[k2, i]) > tol * scale:
                continue
            sigma = 0.5 * (b[k1, i] + b[k2, i]) / rho
            verdict = _verify(coeffs, rho, n, tol)
            if verdict.is_axis:
                found.append(Axis(verdict, "coordinate", sigma, np.eye(3)[j]))
    return dedupe_axes(found)


def inplane_quadratic(coeffs: RTHCCoefficients, plane: str) -> tuple[float, float, float]:
    """Coefficients (a, b, c) of a t^2 + b t + c = 0 with t = (n_i / n_j)^2.

    ``plane`` is '12', '23' or '13'; (i, j, k) follow the cyclic order
    (1,2,3), (2,3,1), (3,1,2) with k out of plane.
    """
    i, j, k = _PLANES[plane]
    A = coeffs.a
    r = coeffs.r_of(i, j)
    a1, b1 = A[i, i] - A[k, i], A[i, j] - A[k, j]
    a2, b2 = A[j, i] - A[k, i], A[j, j] - A[k, j]
    return a1 * a2, a1 * b2 + b1 * a2 - r * r, b1 * b2


def _positive_roots(qa: float, qb: float, qc: float, scale: float) -> tuple[list[float], bool]:
    """Positive finite roots, plus a flag for the identically-zero quadratic."""
    eps = 1e-12 * scale * scale
    if abs(qa) <= eps:
        if abs(qb) <= eps:
            return [], abs(qc) <= eps
        t = -qc / qb
        return ([t] if t > 0 else []), False
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        if disc < -eps * scale * scale:
            return [], False
        disc = 0.0
    sq = math.sqrt(disc)
    # numerically stable pair; qq == 0 only for the double root t = 0
    qq = -0.5 * (qb + math.copysign(sq, qb))
    roots = [qq / qa, qc / qq] if qq != 0 else []
    out = []
    for t in roots:
        if t > 0 and math.isfinite(t) and not any(abs(t - s) <= 1e-12 * max(t, s) for s in out):
            out.append(t)
    return out, False


def rthc_inplane_axes(
    coeffs: RTHCCoefficients, rho: float, plane: str, tol: float = DEFAULT_TOL
) -> list[Axis]:
    """Axes in a coordinate plane, away from the coordinate axes."""
    i, j, k = _PLANES[plane]
    qa, qb, qc = inplane_quadratic(coeffs, plane)
    roots, _ = _positive_roots(qa, qb, qc, coeffs.scale)
    b = coeffs.b
    found = []
    for t in roots:
        for sgn in (1.0, -1.0):
            n = np.zeros(3)
            n[i] = sgn * math.sqrt(t)
            n[j] = 1.0
            n /= math.sqrt(1.0 + t)
            n2 = n * n
            sigma = float(b[k] @ n2) / rho
            Y = coeffs.stiffness_gamma(n) / rho
            Y -= np.trace(Y) / 3 * np.eye(3)
            # eigenvector of the in-plane block for eigenvalue -2 sigma
            c1 = np.array([Y[i, j], -2 * sigma - Y[i, i]])
            c2 = np.array([-2 * sigma - Y[j, j], Y[i, j]])
            c = c1 if c1 @ c1 >= c2 @ c2 else c2
            q = np.zeros(3)
            q[i], q[j] = c
            q = canonical_sign(_unit(q)) if np.linalg.norm(q) > 0 else None
            verdict = _verify(coeffs, rho, canonical_sign(n), tol)
            if verdict.is_axis:
                found.append(Axis(verdict, f"plane-{plane}", sigma, q))
    return dedupe_axes(found)


def oblique_intermediates(coeffs: RTHCCoefficients) -> ObliqueIntermediates:
    r12, r13, r23 = coeffs.r
    alpha = np.array([r12 * r13 / r23, r12 * r23 / r13, r13 * r23 / r12])
    b = coeffs.b
    u = np.array([b[0, 0] - 2 * alpha[0] / 3, b[0, 1] + alpha[1] / 3, b[0, 2] + alpha[2] / 3])
    w = np.array([b[1, 0] + alpha[0] / 3, b[1, 1] - 2 * alpha[1] / 3, b[1, 2] + alpha[2] / 3])
    return ObliqueIntermediates(alpha, u, w)


def cone_geometry(k) -> dict:
    """Axis index and half-angle for an axisymmetric cone k.(n^2) = 0, when defined."""
    k = np.asarray(k, dtype=float)
    for m in range(3):
        a, b = [x for x in range(3) if x != m]
        if abs(k[a] - k[b]) <= 1e-12 * np.abs(k).max() and k[a] != 0 and k[m] * k[a] < 0:
            return {
                "axis": m + 1,
                "half_angle": math.atan(math.sqrt(-k[m] / k[a])),
                "k_perp": float(k[a]),
                "k_axis": float(k[m]),
            }
    return {}


def cone_points(k, count: int = 720) -> np.ndarray:
    """Points on the cone k.(n^2) = 0 (empty when no real cone exists)."""
    k = np.asarray(k, dtype=float)
    signs = np.sign(k)
    nz = signs != 0
    if nz.sum() == 1:
        # k_m n_m^2 = 0: the great circle n_m = 0
        m = int(np.flatnonzero(nz)[0])
        a, b = [x for x in range(3) if x != m]
        phi = np.linspace(0, 2 * np.pi, count, endpoint=False)
        pts = np.zeros((count, 3))
        pts[:, a], pts[:, b] = np.cos(phi), np.sin(phi)
        return pts
    for m in range(3):
        a, b = [x for x in range(3) if x != m]
        if signs[m] != 0 and signs[a] == signs[b] == -signs[m]:
            phi = np.linspace(0, 2 * np.pi, count, endpoint=False)
            h2 = -(k[a] * np.cos(phi) ** 2 + k[b] * np.sin(phi) ** 2) / k[m]
            pts = np.zeros((count, 3))
            pts[:, a], pts[:, b], pts[:, m] = np.cos(phi), np.sin(phi), np.sqrt(h2)
            return pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return np.zeros((0, 3))


def distance_to_cone(n, k) -> float:
    """Projective angular distance from ``n`` to the cone k.(n^2) = 0."""
    geo = cone_geometry(k)
    n = _unit(n)
    if geo:
        m = geo["axis"] - 1
        return abs(math.acos(min(1.0, abs(n[m]))) - geo["half_angle"])
    pts = cone_points(k, 4096)
    if len(pts) == 0:
        return math.inf
    return float(min(projective_angle(n, p) for p in pts))


def rthc_oblique_axes(coeffs: RTHCCoefficients, rho: float, tol: float = DEFAULT_TOL) -> AxisSolution:
    """Axes with all three direction components non-zero.

    In the generic case ``(n1^2, n2^2, n3^2)`` is proportional to ``u x w``
    and four sign classes give up to four axes. When ``u`` and ``w`` are
    parallel the single remaining constraint ``k . n^2 = 0`` describes a
    cone (hexagonal media), or nothing when all ``k_i`` share a sign.
    """
    scale = coeffs.scale
    if np.any(np.abs(coeffs.r) <= 1e-12 * scale):
        return AxisSolution("none", solver="rthc-oblique", notes=["some r_ij == 0: no oblique branch"])
    inter = oblique_intermediates(coeffs)
    alpha, u, w = inter.alpha, inter.u, inter.w
    s = np.cross(u, w)
    nu, nw = np.linalg.norm(u), np.linalg.norm(w)
    small = 1e-12 * scale

    if nu > small and nw > small and np.linalg.norm(s) > 1e-10 * nu * nw:
        total = s.sum()
        if abs(total) <= 1e-14 * np.abs(s).sum():
            return AxisSolution("none", solver="rthc-oblique")
        s = s / total
        if np.any(s < -1e-12):
            return AxisSolution("none", solver="rthc-oblique")
        s = np.where(np.abs(s) < 1e-12, 0.0, s)
        if np.any(s == 0):
            return AxisSolution(
                "none", solver="rthc-oblique",
                notes=["cross-product solution lies on a coordinate plane"],
            )
        sigma = -float(alpha @ s) / (3 * rho)
        if sigma == 0:
            return AxisSolution("none", solver="rthc-oblique")
        q2 = -alpha * s / (3 * sigma * rho)
        if np.any(q2 < -1e-12):
            return AxisSolution("none", solver="rthc-oblique")
        q_abs = np.sqrt(np.clip(q2, 0, None))
        axes = []
        r12, r13, r23 = coeffs.r
        for s1, s2 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            n = np.sqrt(s) * np.array([s1, s2, 1.0])
            # off-diagonal relations r_ij n_i n_j = -3 sigma rho q_i q_j fix signs of q
            q = q_abs.copy()
            q[1] *= np.sign(-r12 * n[0] * n[1] / sigma)
            q[2] *= np.sign(-r13 * n[0] * n[2] / sigma)
            if np.sign(q[1] * q[2]) != np.sign(-r23 * n[1] * n[2] / sigma):
                continue
            verdict = _verify(coeffs, rho, canonical_sign(n), tol)
            if verdict.is_axis:
                axes.append(Axis(verdict, "oblique", sigma, canonical_sign(q)))
        return AxisSolution("discrete" if axes else "none", dedupe_axes(axes), solver="rthc-oblique")

    # degenerate: u parallel to w, or one of them vanishes
    k = u if nu >= nw else w
    if max(nu, nw) <= small:
        return AxisSolution(
            "all_sphere", solver="rthc-oblique",
            notes=["both material vectors vanish: every oblique direction satisfies the conditions"],
        )
    k = 3.0 * k
    k = np.where(np.abs(k) <= 1e-12 * np.abs(k).max(), 0.0, k)
    pts = cone_points(k)
    if len(pts) == 0 or np.count_nonzero(k) < 2:
        return AxisSolution("none", solver="rthc-oblique", notes=["no real oblique cone"])
    # every sampled cone point must be a verified axis
    for p in pts[::60]:
        if not _verify(coeffs, rho, p, tol).is_axis:
            return AxisSolution(
                "none", solver="rthc-oblique", notes=["cone candidates fail verification"]
            )
    return AxisSolution("conic", conics=[k], solver="rthc-oblique")


def solve_rthc(material: Material, tol: float = DEFAULT_TOL) -> AxisSolution:
    """Union of coordinate, in-plane and oblique branches for an RTHC material."""
    coeffs = rthc_coefficients(material)
    rho = material.density
    notes: list[str] = []
    axes = list(rthc_coordinate_axes(coeffs, rho, tol))
    conics: list[np.ndarray] = []
    for plane in _PLANES:
        qa, qb, qc = inplane_quadratic(coeffs, plane)
        _, continuum = _positive_roots(qa, qb, qc, coeffs.scale)
        if continuum:
            k = np.zeros(3)
            k[_PLANES[plane][2]] = 1.0
            conics.append(k)
            notes.append(f"plane {plane}: every in-plane direction is an axis")
        else:
            axes.extend(rthc_inplane_axes(coeffs, rho, plane, tol))
    oblique = rthc_oblique_axes(coeffs, rho, tol)
    notes.extend(oblique.notes)

    if oblique.kind == "all_sphere":
        rng = np.random.default_rng(7)
        dirs = [_unit(rng.normal(size=3)) for _ in range(50)]
        if all(axis_test(material, d, tol).is_axis for d in dirs):
            coord = [a for a in axes if a.origin == "coordinate"]
            return AxisSolution("all_sphere", dedupe_axes(coord), solver="rthc", notes=notes)
        notes.append("oblique continuum not confirmed on random directions")
    axes.extend(oblique.axes)
    conics.extend(oblique.conics)

    axes = [a for a in dedupe_axes(axes) if a.verdict.is_axis]
    if conics:
        axes = [
            a for a in axes if all(distance_to_cone(a.n, k) > DEDUP_ANGLE for k in conics)
        ]
        return AxisSolution("conic", axes, conics, solver="rthc", notes=notes)
    return AxisSolution("discrete" if axes else "none", axes, solver="rthc", notes=notes)


def solve(material: Material, tol: float = DEFAULT_TOL, scan_points: int = 5000) -> AxisSolution:
    """Most specific closed-form solver for ``material``; numerical scan otherwise."""
    spec = material.symmetry
    if spec is not None and spec.kind == "isotropic":
        return solve_isotropic(spec.constants["lambda"], spec.constants["mu"], material.density)
    if spec is not None and spec.kind == "cubic":
        k = spec.constants
        return solve_cubic(k["C11"], k["C12"], k["C44"], material.density, tol)
    try:
        coeffs = rthc_coefficients(material)
    except NotRTHC:
        return _scan_solution(material, tol, scan_points, "not RTHC in the given frame")
    if np.count_nonzero(np.abs(coeffs.r) <= 1e-12 * coeffs.scale) >= 2:
        return _scan_solution(material, tol, scan_points, "two or more r_ij vanish")
    return solve_rthc(material, tol)


def _scan_solution(material: Material, tol: float, points: int, reason: str) -> AxisSolution:
    from .scan import find_axes

    result = find_axes(material, points, tol)
    if result.all_sphere:
        return AxisSolution("all_sphere", solver="scan", notes=[reason, "degenerate everywhere"])
    axes = [Axis(axis_test(material, c.n, tol), "scan") for c in result.axes]
    axes = [a for a in axes if a.verdict.is_axis]
    notes = [reason]
    if result.continuum_suspected:
        notes.append("many converged minima: possible continuum of axes")
    return AxisSolution("discrete" if axes else "none", axes, solver="scan", notes=notes)
