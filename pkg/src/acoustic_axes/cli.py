"""Command-line front end.

Exit codes: 0 ok, 1 criteria disagreement (``verify``), 2 schema or input
error, 3 non-finite constants, 4 bad direction.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from .christoffel import eigenmodes, gamma_of
from .closed_form import solve
from .criteria import DEFAULT_TOL, axis_test, canonical_sign, criteria_residuals
from .christoffel import reduce
from .media import UNIT_SCALE, MaterialError, NonFiniteConstants, material_from_dict, material_to_dict
from .scan import find_axes

EXIT_OK = 0
EXIT_DISAGREE = 1
EXIT_SCHEMA = 2
EXIT_NONFINITE = 3
EXIT_DIRECTION = 4

# a family "fails" only this far above the tolerance, so that borderline
# directions do not count as disagreements
DISAGREE_FACTOR = 1e3


class BadDirection(ValueError):
    pass


def load_material(path: str, units: str | None = None):
    """Read a material file; a saved report (with a ``material`` key) also works."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise MaterialError(f"cannot read {path}: {exc.strerror}", "<file>") from None
    except json.JSONDecodeError as exc:
        raise MaterialError(f"malformed JSON at line {exc.lineno}: {exc.msg}", "<json>") from None
    if isinstance(data, dict) and isinstance(data.get("material"), dict):
        data = data["material"]
    if units is not None and isinstance(data, dict):
        data = dict(data, units=units)
    return material_from_dict(data)


def parse_direction(text: str) -> np.ndarray:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        raise BadDirection(f"cannot parse direction {text!r}") from None
    n = np.array(parts)
    if n.shape != (3,) or not np.all(np.isfinite(n)):
        raise BadDirection("direction needs three finite components")
    norm = float(np.linalg.norm(n))
    if norm == 0.0:
        raise BadDirection("direction is the zero vector")
    n = n / norm
    # renormalize once more so |n| is 1 to the last bit or two
    return n / math.sqrt(float(n @ n))


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, allow_nan=False)
    sys.stdout.write("\n")


def _clean(x):
    """Replace non-finite floats by None so the output stays valid JSON."""
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def cmd_axes(args) -> int:
    material = load_material(args.material, args.units)
    t0 = time.perf_counter()
    sol = solve(material, args.tol)
    body = sol.to_dict()
    report = {
        "material": material_to_dict(material),
        "solver": body.pop("solver"),
        **body,
        "all_sphere": sol.kind == "all_sphere",
        "timing": {"seconds": time.perf_counter() - t0},
    }
    _emit(_clean(report))
    return EXIT_OK


def cmd_check(args) -> int:
    material = load_material(args.material, args.units)
    n = parse_direction(args.n)
    verdict = axis_test(material, n, args.tol)
    _emit(_clean({"material": material_to_dict(material), "tol": args.tol, **verdict.to_dict()}))
    return EXIT_OK


def cmd_modes(args) -> int:
    material = load_material(args.material, args.units)
    n = parse_direction(args.n)
    modes = eigenmodes(gamma_of(material, n))
    out = []
    for k in range(3):
        v2 = float(modes.v2[k])
        out.append({
            "v2": v2,
            "v": math.sqrt(v2) if v2 > 0 else None,
            "U": [float(x) for x in canonical_sign(modes.U[:, k])],
        })
    _emit(_clean({"direction": [float(x) for x in n], "modes": out}))
    return EXIT_OK


def cmd_scan(args) -> int:
    material = load_material(args.material, args.units)
    t0 = time.perf_counter()
    result = find_axes(material, args.resolution, args.tol)
    if args.out:
        result.map.to_csv(args.out)
    axes = []
    for c in result.axes:
        d = axis_test(material, c.n, args.tol).to_dict()
        d["refinement"] = {"residual": c.residual, "iterations": c.iterations}
        axes.append(d)
    report = {
        "material": material_to_dict(material),
        "solver": "scan",
        "resolution": args.resolution,
        "all_sphere": result.all_sphere,
        "continuum_suspected": result.continuum_suspected,
        "candidates": len(result.candidates),
        "axes": sorted(axes, key=lambda a: (a["kind"], a["direction"])),
        "csv": args.out,
        "timing": {"seconds": time.perf_counter() - t0},
    }
    _emit(_clean(report))
    return EXIT_OK


def _family_values(residuals) -> dict[str, float]:
    values = residuals.scalar_families()
    # the discriminant is quadratic in the gap; compare on the gap scale
    values["discriminant"] = math.sqrt(values["discriminant"])
    return values


def cmd_verify(args) -> int:
    material = load_material(args.material, args.units)
    rng = np.random.default_rng(args.seed)
    dirs = rng.normal(size=(args.samples, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sol = solve(material, args.tol)
    directions = [("random", d) for d in dirs] + [("axis", a.n) for a in sol.axes]

    tol = args.tol
    disagreements = []
    max_spread = 0.0
    max_axis = 0.0
    for origin, n in directions:
        r = reduce(gamma_of(material, n / np.linalg.norm(n)))
        vals = _family_values(criteria_residuals(r, tol=tol))
        lo, hi = min(vals.values()), max(vals.values())
        if lo <= tol or origin == "axis":
            max_spread = max(max_spread, hi - lo)
        if origin == "axis":
            max_axis = max(max_axis, hi)
        if lo <= tol and hi > DISAGREE_FACTOR * tol:
            disagreements.append({"direction": [float(x) for x in n], "origin": origin, **vals})
    report = {
        "material": material_to_dict(material),
        "samples": args.samples,
        "axes_checked": len(sol.axes),
        "tol": tol,
        "max_axis_residual": max_axis,
        "max_disagreement": max_spread,
        "disagreements": disagreements,
        "ok": not disagreements,
    }
    _emit(_clean(report))
    return EXIT_OK if not disagreements else EXIT_DISAGREE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("material", help="material JSON file")
    common.add_argument("--units", choices=sorted(UNIT_SCALE), default=None,
                        help="override the units given in the file")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)

    parser = argparse.ArgumentParser(prog="acoustic-axes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("axes", parents=[common], help="closed-form axes").set_defaults(func=cmd_axes)
    p = sub.add_parser("check", parents=[common], help="axis verdict for one direction")
    p.add_argument("--n", required=True, help="direction as x,y,z")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("modes", parents=[common], help="speeds and polarizations")
    p.add_argument("--n", required=True, help="direction as x,y,z")
    p.set_defaults(func=cmd_modes)
    p = sub.add_parser("scan", parents=[common], help="numerical hemisphere scan")
    p.add_argument("--resolution", type=int, default=5000)
    p.add_argument("--out", default=None, help="CSV path for the degeneracy map")
    p.set_defaults(func=cmd_scan)
    p = sub.add_parser("verify", parents=[common], help="cross-check all criteria")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not 0 < args.tol < 1:
        print("error: --tol must lie in (0, 1)", file=sys.stderr)
        return EXIT_SCHEMA
    if args.command == "scan" and args.resolution < 100:
        print("error: --resolution must be at least 100", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        return args.func(args)
    except NonFiniteConstants as exc:
        print(f"error: {exc} (field: {exc.field})", file=sys.stderr)
        return EXIT_NONFINITE
    except MaterialError as exc:
        print(f"error: {exc} (field: {exc.field})", file=sys.stderr)
        return EXIT_SCHEMA
    except BadDirection as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIRECTION


if __name__ == "__main__":
    sys.exit(main())
