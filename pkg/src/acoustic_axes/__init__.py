"""Acoustic axes of anisotropic elastic media."""
from .christoffel import eigenmodes, gamma_of, invariants, reduce, sym3_eigh
from .closed_form import AxisSolution, NotRTHC, solve, solve_cubic, solve_isotropic, solve_rthc
from .criteria import AxisVerdict, axis_test, criteria_residuals
from .media import Material, MaterialError, NonFiniteConstants, NonUnitDirection, material_from_dict
from .scan import compare, find_axes, refine, scan

__all__ = [
    "AxisSolution",
    "AxisVerdict",
    "Material",
    "MaterialError",
    "NonFiniteConstants",
    "NonUnitDirection",
    "NotRTHC",
    "axis_test",
    "compare",
    "criteria_residuals",
    "eigenmodes",
    "find_axes",
    "gamma_of",
    "invariants",
    "material_from_dict",
    "reduce",
    "refine",
    "scan",
    "solve",
    "solve_cubic",
    "solve_isotropic",
    "solve_rthc",
    "sym3_eigh",
]
