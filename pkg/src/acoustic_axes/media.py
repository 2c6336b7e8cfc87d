"""Elastic media: stiffness in Voigt form, symmetry-class expansion and bounds.

All quantities are SI (Pa, kg/m^3). Voigt index map is
11->1, 22->2, 33->3, 23->4, 13->5, 12->6 with no shear scaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))

# (i, j) -> Voigt index, both orders
_VOIGT_INDEX = np.empty((3, 3), dtype=int)
for _k, (_i, _j) in enumerate(VOIGT_PAIRS):
    _VOIGT_INDEX[_i, _j] = _VOIGT_INDEX[_j, _i] = _k

UNIT_TOL = 1e-12

SYMMETRY_CONSTANTS = {
    "isotropic": ("lambda", "mu"),
    "cubic": ("C11", "C12", "C44"),
    "hexagonal": ("C11", "C12", "C13", "C33", "C44"),
    "tetragonal": ("C11", "C12", "C13", "C33", "C44", "C66"),
    "orthorhombic": ("C11", "C12", "C13", "C22", "C23", "C33", "C44", "C55", "C66"),
}

UNIT_SCALE = {"Pa": 1.0, "GPa": 1e9}


class NonUnitDirection(ValueError):
    """Raised when a propagation direction is not normalized."""


class MaterialError(ValueError):
    """Invalid material description. ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class NonFiniteConstants(MaterialError):
    pass


@dataclass(frozen=True)
class SymmetrySpec:
    """Symmetry class plus its independent constants (Pa).

    For ``triclinic`` the constants are ignored and ``voigt`` holds the
    full 6x6 matrix.
    """

    kind: str
    constants: Mapping[str, float] = field(default_factory=dict)
    voigt: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Material:
    stiffness: np.ndarray
    density: float
    symmetry: SymmetrySpec | None = None

    def __post_init__(self):
        c = np.array(self.stiffness, dtype=float)
        if c.shape != (6, 6):
            raise MaterialError(f"stiffness must be 6x6, got {c.shape}", "voigt")
        if not np.all(np.isfinite(c)):
            raise NonFiniteConstants("stiffness has non-finite entries", "voigt")
        if not np.allclose(c, c.T, rtol=0, atol=1e-12 * max(np.abs(c).max(), 1.0)):
            raise MaterialError("stiffness matrix is not symmetric", "voigt")
        if not (math.isfinite(self.density) and self.density > 0):
            raise MaterialError("density must be a positive finite number", "density")
        c = 0.5 * (c + c.T)
        c.setflags(write=False)
        object.__setattr__(self, "stiffness", c)
        object.__setattr__(self, "density", float(self.density))

    @classmethod
    def from_symmetry(cls, spec: SymmetrySpec, density: float) -> "Material":
        return cls(expand_symmetry(spec), density, spec)

    @classmethod
    def isotropic(cls, lam: float, mu: float, density: float = 1.0) -> "Material":
        return cls.from_symmetry(SymmetrySpec("isotropic", {"lambda": lam, "mu": mu}), density)

    @classmethod
    def cubic(cls, c11: float, c12: float, c44: float, density: float = 1.0) -> "Material":
        spec = SymmetrySpec("cubic", {"C11": c11, "C12": c12, "C44": c44})
        return cls.from_symmetry(spec, density)

    @classmethod
    def hexagonal(cls, c11, c12, c13, c33, c44, density: float = 1.0) -> "Material":
        spec = SymmetrySpec(
            "hexagonal", {"C11": c11, "C12": c12, "C13": c13, "C33": c33, "C44": c44}
        )
        return cls.from_symmetry(spec, density)

    @classmethod
    def orthorhombic(cls, density: float = 1.0, **constants: float) -> "Material":
        return cls.from_symmetry(SymmetrySpec("orthorhombic", constants), density)


def expand_symmetry(spec: SymmetrySpec) -> np.ndarray:
    """Return the 6x6 Voigt stiffness for a symmetry class (x3 is the unique axis)."""
    kind = spec.kind
    k = dict(spec.constants)
    c = np.zeros((6, 6))
    if kind == "isotropic":
        lam, mu = k["lambda"], k["mu"]
        c[:3, :3] = lam
        c[[0, 1, 2], [0, 1, 2]] = lam + 2 * mu
        c[[3, 4, 5], [3, 4, 5]] = mu
    elif kind == "cubic":
        c[:3, :3] = k["C12"]
        c[[0, 1, 2], [0, 1, 2]] = k["C11"]
        c[[3, 4, 5], [3, 4, 5]] = k["C44"]
    elif kind in ("hexagonal", "tetragonal"):
        c[0, 0] = c[1, 1] = k["C11"]
        c[2, 2] = k["C33"]
        c[0, 1] = c[1, 0] = k["C12"]
        c[0, 2] = c[2, 0] = c[1, 2] = c[2, 1] = k["C13"]
        c[3, 3] = c[4, 4] = k["C44"]
        if kind == "hexagonal":
            c[5, 5] = 0.5 * (k["C11"] - k["C12"])
        else:
            c[5, 5] = k["C66"]
    elif kind == "orthorhombic":
        for name, value in k.items():
            i, j = int(name[1]) - 1, int(name[2]) - 1
            c[i, j] = c[j, i] = value
    elif kind == "triclinic":
        if spec.voigt is None:
            raise MaterialError("triclinic symmetry needs a full voigt matrix", "voigt")
        c = np.array(spec.voigt, dtype=float)
    else:
        raise MaterialError(f"unknown symmetry class {kind!r}", "symmetry")
    return c


def voigt_to_tensor(c: np.ndarray) -> np.ndarray:
    """Full 3x3x3x3 tensor with minor and major symmetries from a Voigt matrix."""
    c = np.asarray(c, dtype=float)
    return c[_VOIGT_INDEX[:, :, None, None], _VOIGT_INDEX[None, None, :, :]]


def _check_unit(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (3,):
        raise NonUnitDirection(f"direction must be a 3-vector, got shape {n.shape}")
    norm = math.sqrt(float(n @ n))
    if abs(norm - 1.0) > UNIT_TOL:
        raise NonUnitDirection(f"direction norm {norm!r} differs from 1")
    return n


def full_tensor_contract(c: np.ndarray, n) -> np.ndarray:
    """rho * Gamma: C_ijkl n_j n_k for a unit direction ``n``."""
    n = _check_unit(n)
    m = np.einsum("ijkl,j,k->il", voigt_to_tensor(c), n, n)
    return 0.5 * (m + m.T)


def born_stability_cubic(c11: float, c12: float, c44: float) -> bool:
    return c11 - c12 > 0 and c11 + 2 * c12 > 0 and c44 > 0


def speed_bound_check(gamma: float, sigma: float) -> bool:
    """Both squared speeds gamma+sigma and gamma-2*sigma positive."""
    return gamma / 2 > sigma > -gamma


def cubic_axis_bounds(c11: float, c12: float, c44: float) -> bool:
    """Positivity of squared speeds along all seven cubic axes.

    Coordinate axes need C11 > 0 and C44 > 0; body diagonals need
    -C11/2 - 2*C44 < C12 < C11 + C44.
    """
    return c11 > 0 and c44 > 0 and -0.5 * c11 - 2 * c44 < c12 < c11 + c44


# --- JSON schema -----------------------------------------------------------

def material_from_dict(data) -> Material:
    """Build a material from the JSON schema.

    ``{"density", "units", "symmetry", "constants"}`` or
    ``{"density", "units", "voigt"}``. Raises :class:`MaterialError` naming
    the offending field.
    """
    if not isinstance(data, Mapping):
        raise MaterialError("material must be a JSON object", "<root>")
    density = _number(data, "density")
    units = data.get("units", "Pa")
    if units not in UNIT_SCALE:
        raise MaterialError(f"units must be one of {sorted(UNIT_SCALE)}", "units")
    scale = UNIT_SCALE[units]

    if "voigt" in data:
        raw = data["voigt"]
        if (
            not isinstance(raw, list)
            or len(raw) != 6
            or any(not isinstance(row, list) or len(row) != 6 for row in raw)
        ):
            raise MaterialError("voigt must be a 6x6 list of numbers", "voigt")
        try:
            c = np.array(raw, dtype=float) * scale
        except (TypeError, ValueError):
            raise MaterialError("voigt entries must be numbers", "voigt") from None
        if not np.all(np.isfinite(c)):
            raise NonFiniteConstants("voigt has non-finite entries", "voigt")
        return Material(c, density, SymmetrySpec("triclinic", {}, c))

    kind = data.get("symmetry")
    if kind is None:
        raise MaterialError("either 'voigt' or 'symmetry' is required", "symmetry")
    if kind not in SYMMETRY_CONSTANTS:
        raise MaterialError(
            f"symmetry must be one of {sorted(SYMMETRY_CONSTANTS)}", "symmetry"
        )
    constants = data.get("constants")
    if not isinstance(constants, Mapping):
        raise MaterialError("constants must be an object", "constants")
    values = {}
    for name in SYMMETRY_CONSTANTS[kind]:
        if name not in constants:
            raise MaterialError(f"missing constant {name}", f"constants.{name}")
        v = _as_float(constants[name], f"constants.{name}")
        # lame constants are moduli too
        values[name] = v * scale
    return Material.from_symmetry(SymmetrySpec(kind, values), density)


def material_to_dict(material: Material) -> dict:
    spec = material.symmetry
    if spec is not None and spec.kind != "triclinic":
        return {
            "density": material.density,
            "units": "Pa",
            "symmetry": spec.kind,
            "constants": {k: float(v) for k, v in spec.constants.items()},
        }
    return {
        "density": material.density,
        "units": "Pa",
        "voigt": [[float(x) for x in row] for row in material.stiffness],
    }


def _as_float(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MaterialError(f"{name} must be a number", name)
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteConstants(f"{name} is not finite", name)
    return value


def _number(data, name: str) -> float:
    if name not in data:
        raise MaterialError(f"missing field {name}", name)
    return _as_float(data[name], name)
