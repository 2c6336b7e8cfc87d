"""Numerical axis search: hemisphere degeneracy map plus local refinement.

The map samples a Fibonacci spiral on the upper hemisphere. Local minima of
the normalized eigenvalue gap seed a Levenberg-Marquardt fit of the
minimal-polynomial residual in a tangent-plane chart, re-projected to the
sphere after each step.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from .christoffel import SPHERICAL_REL
from .closed_form import AxisSolution, distance_to_cone, projective_angle
from .criteria import DEFAULT_TOL, axis_test, canonical_sign, discriminant_residual, minimal_poly_matrix
from .media import Material, voigt_to_tensor

CONVERGED_RESIDUAL = 1e-12
STALL_RESIDUAL = 1e-6
MIN_STEP = 1e-14
# squared residual at the rounding floor of the objective
FLOOR_COST = 1e-30
MERGE_ANGLE = 1e-6
ALL_SPHERE_GAP = 1e-9
ALL_SPHERE_FRACTION = 0.99
# more isolated axes than an RTHC medium can have hints at a continuum
CONTINUUM_COUNT = 16

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
_UPPER = np.triu_indices(3)
_WEIGHTS = np.where(_UPPER[0] == _UPPER[1], 1.0, math.sqrt(2.0))


@dataclass(frozen=True, eq=False)
class DegeneracyMap:
    """Gap and discriminant residual on a hemisphere grid.

    ``gap`` is the smallest eigenvalue spacing divided by |Y|_F (zero where
    Y itself vanishes).
    """

    points: np.ndarray
    gap: np.ndarray
    discriminant: np.ndarray

    @property
    def spacing(self) -> float:
        """Typical angular distance between neighbouring grid points."""
        return math.sqrt(2.0 * math.pi / len(self.points))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n1", "n2", "n3", "gap", "discriminant_residual"])
            for p, g, d in zip(self.points, self.gap, self.discriminant):
                writer.writerow([repr(float(x)) for x in (*p, g, d)])


@dataclass(frozen=True, eq=False)
class RefinedCandidate:
    """Outcome of one refinement.

    ``status`` is ``axis`` (converged), ``non-axis`` (stalled above
    ``STALL_RESIDUAL``) or ``undecided``.
    """

    n: np.ndarray
    converged: bool
    residual: float
    iterations: int
    start: np.ndarray
    status: str


@dataclass(eq=False)
class ScanResult:
    map: DegeneracyMap
    candidates: list[RefinedCandidate] = field(default_factory=list)
    axes: list[RefinedCandidate] = field(default_factory=list)
    all_sphere: bool = False
    continuum_suspected: bool = False


@dataclass(eq=False)
class MatchReport:
    pairs: list[tuple[int, int, float]]
    unmatched_closed: list[int]
    unmatched_scanned: list[int]
    on_cone: list[tuple[int, float]]
    uncovered_cones: list[int]
    max_distance: float
    ok: bool

    def to_dict(self) -> dict:
        return {
            "pairs": [list(p) for p in self.pairs],
            "unmatched_closed": self.unmatched_closed,
            "unmatched_scanned": self.unmatched_scanned,
            "on_cone": [list(p) for p in self.on_cone],
            "uncovered_cones": self.uncovered_cones,
            "max_distance": self.max_distance,
            "ok": self.ok,
        }


def hemisphere_points(count: int) -> np.ndarray:
    """Deterministic Fibonacci spiral on the upper hemisphere (n3 > 0)."""
    i = np.arange(count, dtype=float)
    z = (i + 0.5) / count
    r = np.sqrt(1.0 - z * z)
    phi = i * _GOLDEN_ANGLE
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _gamma_batch(tensor: np.ndarray, rho: float, n: np.ndarray) -> np.ndarray:
    g = np.einsum("ijkl,pj,pk->pil", tensor, n, n) / rho
    return 0.5 * (g + np.swapaxes(g, 1, 2))


def _gap_and_discriminant(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = np.trace(g, axis1=1, axis2=2) / 3.0
    Y = g - mean[:, None, None] * np.eye(3)
    norm = np.sqrt(np.sum(Y * Y, axis=(1, 2)))
    full = np.sqrt(norm**2 + 3.0 * mean**2)
    spherical = norm <= SPHERICAL_REL * np.maximum(full, 1.0)
    w = np.linalg.eigvalsh(Y)
    diffs = np.diff(w, axis=1)
    safe = np.where(spherical, 1.0, norm)
    gap = np.where(spherical, 0.0, diffs.min(axis=1) / safe)
    y = Y / safe[:, None, None]
    t2 = np.sum(y * y, axis=(1, 2))
    t3 = np.einsum("pij,pjk,pki->p", y, y, y)
    disc = np.abs(6.0 * t3 * t3 - t2**3) / np.maximum(t2**3, 1e-300)
    return np.maximum(gap, 0.0), np.where(spherical, 0.0, disc)


def scan(material: Material, point_count: int) -> DegeneracyMap:
    """Degeneracy map on ``point_count`` hemisphere points (``point_count >= 100``)."""
    if point_count < 100:
        raise ValueError("point_count must be at least 100")
    pts = hemisphere_points(point_count)
    tensor = voigt_to_tensor(material.stiffness)
    gaps, discs = [], []
    # fixed-size chunks keep memory flat; results are concatenated in index order
    for start in range(0, point_count, 4096):
        g = _gamma_batch(tensor, material.density, pts[start:start + 4096])
        gap, disc = _gap_and_discriminant(g)
        gaps.append(gap)
        discs.append(disc)
    return DegeneracyMap(pts, np.concatenate(gaps), np.concatenate(discs))


def local_minima(dmap: DegeneracyMap, neighbours: int = 9) -> np.ndarray:
    """Indices of grid points whose gap does not exceed any neighbour's.

    Antipodes are added to the tree so minima on the rim are judged
    against the far side as well.
    """
    pts = dmap.points
    tree = cKDTree(np.vstack([pts, -pts]))
    gaps = np.concatenate([dmap.gap, dmap.gap])
    _, idx = tree.query(pts, k=neighbours + 1)
    return np.flatnonzero(np.all(dmap.gap[:, None] <= gaps[idx], axis=1))


def _tangent_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e = np.zeros(3)
    e[int(np.argmin(np.abs(n)))] = 1.0
    t1 = e - (e @ n) * n
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(n, t1)


class _Objective:
    def __init__(self, material: Material, known=(), radius: float = 0.0):
        self.tensor = voigt_to_tensor(material.stiffness)
        self.rho = material.density
        self.known = [np.asarray(k, dtype=float) for k in known]
        self.r2 = radius * radius

    def gamma(self, n: np.ndarray) -> np.ndarray:
        return _gamma_batch(self.tensor, self.rho, n[None])[0]

    def vector(self, n: np.ndarray) -> np.ndarray:
        """Minimal-polynomial residual as a 6-vector with Frobenius weighting."""
        g = self.gamma(n)
        Y = g - np.trace(g) / 3.0 * np.eye(3)
        f = minimal_poly_matrix(Y)[_UPPER] * _WEIGHTS
        for k in self.known:
            # deflation: known axes become poles instead of roots
            f = f * (1.0 + self.r2 / max(1.0 - float(n @ k) ** 2, 1e-30))
        return f

    def discriminant(self, n: np.ndarray) -> float:
        g = self.gamma(n)
        full = float(np.linalg.norm(g))
        Y = g - np.trace(g) / 3.0 * np.eye(3)
        if np.linalg.norm(Y) <= SPHERICAL_REL * max(full, 1.0):
            return 0.0
        return discriminant_residual(Y)


def _chart(n: np.ndarray, t1: np.ndarray, t2: np.ndarray, x: np.ndarray) -> np.ndarray:
    m = n + x[0] * t1 + x[1] * t2
    return m / np.linalg.norm(m)


def _polish_tangential(obj: _Objective, n: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Relocate ``n`` onto the common stationary point of the residual entries.

    At a tangential axis the residual is quadratic in the offset, so its
    rounding floor is reached about sqrt(eps) away from the axis. A
    second-order model built on a wider stencil puts the zero where every
    entry is stationary. Conical axes (linear residual) are left alone.
    """
    t1, t2 = _tangent_basis(n)
    f = {}
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            f[a, b] = obj.vector(_chart(n, t1, t2, np.array([a * h, b * h])))
    if max(np.linalg.norm(v) for v in f.values()) < 1e-12:
        # flat at the rounding floor: a continuum of axes, nothing to locate
        return n
    g = np.column_stack([f[1, 0] - f[-1, 0], f[0, 1] - f[0, -1]]) / (2 * h)
    h11 = (f[1, 0] - 2 * f[0, 0] + f[-1, 0]) / h**2
    h22 = (f[0, 1] - 2 * f[0, 0] + f[0, -1]) / h**2
    h12 = (f[1, 1] - f[1, -1] - f[-1, 1] + f[-1, -1]) / (4 * h**2)
    hess_norm = math.sqrt(float(h11 @ h11 + h22 @ h22 + 2 * h12 @ h12))
    if hess_norm == 0.0 or np.linalg.norm(g) > 1e-3 * hess_norm:
        return n
    A = np.vstack([np.column_stack([h11, h12]), np.column_stack([h12, h22])])
    x0 = np.linalg.lstsq(A, -np.concatenate([g[:, 0], g[:, 1]]), rcond=None)[0]
    if np.linalg.norm(x0) > h:
        return n
    return _chart(n, t1, t2, x0)


def refine(
    material: Material, n0, max_iter: int = 100, step: float = 1e-6, known=(),
    deflation_radius: float = 1e-3,
) -> RefinedCandidate:
    """Drive ``n0`` onto a nearby acoustic axis.

    Damped Gauss-Newton (Levenberg-Marquardt) on the six independent
    entries of ``y^2 + s y - 2 s^2 I``, with a central-difference Jacobian
    in the tangent plane at the current point. The reported residual is the
    normalized discriminant.

    Directions in ``known`` are deflated: the residual is multiplied by
    ``1 + (r / sin)^2`` of the angle to each, with ``r`` the deflation
    radius, so the iteration is repelled from axes already found while
    the objective is left nearly untouched farther away.
    """
    n = np.asarray(n0, dtype=float)
    n = n / np.linalg.norm(n)
    start = n.copy()
    obj = _Objective(material, known, deflation_radius)
    f = obj.vector(n)
    cost = float(f @ f)
    lam = 1e-3
    it = 0
    stalled = 0
    while it < max_iter and cost > FLOOR_COST:
        it += 1
        t1, t2 = _tangent_basis(n)
        J = np.empty((6, 2))
        for c, t in enumerate((t1, t2)):
            fp = obj.vector(_chart(n, t1, t2, step * np.eye(2)[c]))
            fm = obj.vector(_chart(n, t1, t2, -step * np.eye(2)[c]))
            J[:, c] = (fp - fm) / (2 * step)
        JtJ = J.T @ J
        g = J.T @ f
        accepted = False
        for _ in range(30):
            A = JtJ + lam * np.diag(np.maximum(np.diag(JtJ), 1e-30))
            try:
                dx = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = _chart(n, t1, t2, dx)
            ft = obj.vector(trial)
            ct = float(ft @ ft)
            if ct < cost:
                # stagnation: a long run of negligible gains means no root here
                stalled = stalled + 1 if ct > 0.999 * cost else 0
                n, f, cost = trial, ft, ct
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted or np.linalg.norm(dx) < MIN_STEP or stalled >= 10:
            break

    if not known:
        n = _polish_tangential(obj, n)
    n = canonical_sign(n)
    residual = obj.discriminant(n)
    converged = residual <= CONVERGED_RESIDUAL and axis_test(material, n, DEFAULT_TOL).is_axis
    if converged:
        status = "axis"
    elif residual > STALL_RESIDUAL:
        status = "non-axis"
    else:
        status = "undecided"
    return RefinedCandidate(n, converged, residual, it, start, status)


def merge_candidates(cands: list[RefinedCandidate], angle: float = MERGE_ANGLE) -> list[RefinedCandidate]:
    """Keep one candidate per basin (projective distance below ``angle``)."""
    kept: list[RefinedCandidate] = []
    for c in sorted(cands, key=lambda c: c.residual):
        if all(projective_angle(c.n, k.n) >= angle for k in kept):
            kept.append(c)
    return kept


def deflated_gap(dmap: DegeneracyMap, found: list[RefinedCandidate], radius: float) -> np.ndarray:
    """Gap divided by min(1, angle / radius) for every known axis.

    Near a known conical axis the gap grows linearly with the angle, so
    the quotient stays finite there while a second, unseen axis in the
    same neighbourhood still drives it to zero.
    """
    gap = dmap.gap.copy()
    for c in found:
        ang = np.arccos(np.clip(np.abs(dmap.points @ c.n), 0.0, 1.0))
        gap /= np.minimum(1.0, np.maximum(ang, 1e-300) / radius)
    return gap


def valley_seeds(dmap: DegeneracyMap, fraction: float = 0.1, separation: float = 2.0) -> np.ndarray:
    """Greedy low-gap seeds at least ``separation`` grid spacings apart.

    Strongly elongated degeneracy cones leave a narrow valley in the gap
    map whose discrete minima can sit far from the axis; sampling the
    valley floor covers them.
    """
    order = np.argsort(dmap.gap, kind="stable")[: max(1, int(fraction * len(dmap.gap)))]
    limit = math.cos(separation * dmap.spacing)
    chosen: list[int] = []
    for i in order:
        p = dmap.points[i]
        if all(abs(float(p @ dmap.points[j])) < limit for j in chosen):
            chosen.append(int(i))
    return np.array(chosen, dtype=int)


def _pair_midpoints(axes: list[RefinedCandidate], radius: float) -> list[np.ndarray]:
    """Bisectors of axis pairs closer than ``radius``.

    Near a bifurcation an axis on a symmetry plane sits between a mirror
    pair of nearby axes, often inside the same grid cell.
    """
    out = []
    for i, a in enumerate(axes):
        for b in axes[i + 1:]:
            if projective_angle(a.n, b.n) < radius:
                m = a.n + (b.n if a.n @ b.n > 0 else -b.n)
                out.append(m / np.linalg.norm(m))
    return out


def find_axes(material: Material, point_count: int = 5000, tol: float = DEFAULT_TOL,
              rounds: int = 3) -> ScanResult:
    """Scan, refine every local minimum and merge converged basins.

    After the first pass the gap is deflated around the axes found so far
    and new minima are refined, which separates axes closer together than
    a few grid spacings.
    """
    dmap = scan(material, point_count)
    if np.mean(dmap.gap <= ALL_SPHERE_GAP) >= ALL_SPHERE_FRACTION:
        return ScanResult(dmap, all_sphere=True)
    cands: list[RefinedCandidate] = []
    first = np.union1d(local_minima(dmap), valley_seeds(dmap))
    cands = [refine(material, dmap.points[i]) for i in first]
    axes = merge_candidates([c for c in cands if c.converged and axis_test(material, c.n, tol).is_axis])
    radius = 4.0 * dmap.spacing
    for _ in range(rounds - 1):
        if len(axes) > CONTINUUM_COUNT:
            break
        deflated = DegeneracyMap(dmap.points, deflated_gap(dmap, axes, radius), dmap.discriminant)
        near = np.max(np.abs(dmap.points @ np.array([a.n for a in axes]).T), axis=1) if axes else np.zeros(len(dmap.points))
        seeds = [dmap.points[i] for i in local_minima(deflated) if near[i] >= math.cos(radius)]
        seeds.extend(_pair_midpoints(axes, radius))
        known = [a.n for a in axes]
        new = [
            refine(material, p, known=known, deflation_radius=0.1 * dmap.spacing) for p in seeds
        ]
        # polish without deflation so each point settles on its own root
        new = [refine(material, c.n) if c.converged else c for c in new]
        cands.extend(new)
        good = [c for c in new if c.converged and axis_test(material, c.n, tol).is_axis]
        before = len(axes)
        axes = merge_candidates(axes + good)
        if len(axes) == before:
            break
    axes.sort(key=lambda c: tuple(c.n))
    return ScanResult(
        dmap, cands, axes, all_sphere=False, continuum_suspected=len(axes) > CONTINUUM_COUNT
    )


def compare(closed: AxisSolution, scanned, spacing: float | None = None,
            tol: float = MERGE_ANGLE) -> MatchReport:
    """Match closed-form axes against scanned ones.

    ``scanned`` is a :class:`ScanResult` or a list of refined candidates.
    Discrete axes are paired by minimum-cost bipartite matching on the
    projective angle; leftovers count as matched when they lie within
    ``2 * spacing`` of a closed-form cone.
    """
    if isinstance(scanned, ScanResult):
        if spacing is None:
            spacing = scanned.map.spacing
        scan_sphere = scanned.all_sphere
        found = scanned.axes
    else:
        scan_sphere = False
        found = list(scanned)
    if closed.kind == "all_sphere":
        ok = scan_sphere or isinstance(scanned, list)
        return MatchReport([], [], [], [], [], 0.0, ok)
    if scan_sphere:
        return MatchReport([], list(range(len(closed.axes))), [], [], [], math.inf, False)

    na, nb = len(closed.axes), len(found)
    pairs: list[tuple[int, int, float]] = []
    if na and nb:
        cost = np.array([[projective_angle(a.n, c.n) for c in found] for a in closed.axes])
        rows, cols = linear_sum_assignment(cost)
        pairs = [(int(r), int(c), float(cost[r, c])) for r, c in zip(rows, cols) if cost[r, c] <= tol]
    used_a = {p[0] for p in pairs}
    used_b = {p[1] for p in pairs}
    leftover = [j for j in range(nb) if j not in used_b]

    on_cone: list[tuple[int, float]] = []
    covered = set()
    limit = 2.0 * (spacing if spacing is not None else 0.0)
    for j in leftover:
        if not closed.conics:
            break
        d = [distance_to_cone(found[j].n, k) for k in closed.conics]
        m = int(np.argmin(d))
        if d[m] <= limit:
            on_cone.append((j, float(d[m])))
            covered.add(m)
    cone_idx = {j for j, _ in on_cone}
    unmatched_b = [j for j in leftover if j not in cone_idx]
    unmatched_a = [i for i in range(na) if i not in used_a]
    uncovered = [m for m in range(len(closed.conics)) if m not in covered]
    max_d = max([p[2] for p in pairs], default=0.0)
    ok = not unmatched_a and not unmatched_b and not uncovered
    return MatchReport(pairs, unmatched_a, unmatched_b, on_cone, uncovered, max_d, ok)
