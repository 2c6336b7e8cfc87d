import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from acoustic_axes.cli import main

CUBIC_311 = {"density": 1.0, "units": "Pa", "symmetry": "cubic",
             "constants": {"C11": 3.0, "C12": 1.0, "C44": 1.0}}
CUBIC_411 = {"density": 1.0, "units": "Pa", "symmetry": "cubic",
             "constants": {"C11": 4.0, "C12": 1.0, "C44": 1.0}}
ISOTROPIC = {"density": 1.0, "units": "Pa", "symmetry": "isotropic",
             "constants": {"lambda": 1.0, "mu": 1.0}}
ORTHO = {"density": 2.5, "units": "GPa", "symmetry": "orthorhombic",
         "constants": {"C11": 230.0, "C12": 60.0, "C13": 55.0, "C22": 180.0, "C23": 45.0,
                       "C33": 150.0, "C44": 50.0, "C55": 40.0, "C66": 65.0}}


@pytest.fixture
def write(tmp_path):
    def _write(data, name="material.json"):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)
    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_axes_cubic(capsys, write):
    code, report, _ = run(capsys, "axes", write(CUBIC_411))
    assert code == 0
    assert len(report["axes"]) == 7
    keys = [(a["kind"], a["direction"]) for a in report["axes"]]
    assert keys == sorted(keys)
    for a in report["axes"]:
        first = next(x for x in a["direction"] if abs(x) > 1e-8)
        assert first > 0
    assert "seconds" in report["timing"]


def test_axes_cubic_isotropic_form(capsys, write):
    code, report, _ = run(capsys, "axes", write(CUBIC_311))
    assert code == 0
    assert len(report["axes"]) == 7
    assert report["all_sphere"]


def test_axes_isotropic(capsys, write):
    code, report, _ = run(capsys, "axes", write(ISOTROPIC))
    assert code == 0
    assert report["kind"] == "all_sphere" and report["all_sphere"]
    assert report["continuum"]["sigma"] == pytest.approx(-2 / 3)
    assert report["continuum"]["v_single"] == pytest.approx(math.sqrt(3))


def test_round_trip(capsys, write):
    code, first, _ = run(capsys, "axes", write(ORTHO))
    assert code == 0
    # the emitted report is itself a valid input
    code, second, _ = run(capsys, "axes", write(first, "report.json"))
    assert code == 0
    assert len(first["axes"]) == len(second["axes"])
    for a, b in zip(first["axes"], second["axes"]):
        assert np.allclose(a["direction"], b["direction"], rtol=0, atol=1e-12)
        assert a["sigma"] == pytest.approx(b["sigma"], rel=1e-12)
    # text round trip is exact
    text = json.dumps(first)
    assert json.loads(text) == first


def test_units_override(capsys, write):
    data = dict(CUBIC_411, units="GPa")
    _, gpa, _ = run(capsys, "axes", write(data))
    _, pa, _ = run(capsys, "axes", write(data), "--units", "Pa")
    assert gpa["material"]["constants"]["C11"] == 4e9
    assert pa["material"]["constants"]["C11"] == 4.0


def test_check(capsys, write):
    code, v, _ = run(capsys, "check", write(CUBIC_311), "--n", "1,1,1")
    assert code == 0
    assert v["kind"] == "prolate"
    assert v["sigma"] == pytest.approx(-2 / 3, rel=1e-12)
    assert v["residuals"]["khatkevich_status"] in ("pass", "inconclusive")
    code, v, _ = run(capsys, "check", write(CUBIC_411), "--n", "1,1,0")
    assert code == 0 and v["kind"] == "none"


@pytest.mark.parametrize("n", ["0,0,0", "1,2", "a,b,c", "nan,0,1"])
def test_check_bad_direction(capsys, write, n):
    code, _, err = run(capsys, "check", write(CUBIC_411), "--n", n)
    assert code == 4
    assert "direction" in err


def test_modes_isotropic(capsys, write):
    code, out, _ = run(capsys, "modes", write(ISOTROPIC), "--n", "0,0,1")
    assert code == 0
    speeds = [m["v"] for m in out["modes"]]
    assert speeds == pytest.approx([math.sqrt(3), 1.0, 1.0])
    assert out["modes"][0]["U"] == pytest.approx([0.0, 0.0, 1.0])


def test_scan_writes_csv(capsys, write, tmp_path):
    out = tmp_path / "map.csv"
    code, report, _ = run(capsys, "scan", write(CUBIC_411), "--resolution", "5000", "--out", str(out))
    assert code == 0
    assert len(report["axes"]) == 7
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n1", "n2", "n3", "gap", "discriminant_residual"]
    assert len(rows) == 5001


def test_scan_isotropic_form(capsys, write):
    code, report, _ = run(capsys, "scan", write(CUBIC_311), "--resolution", "1000")
    assert code == 0
    assert report["all_sphere"]


@pytest.mark.parametrize("material", [CUBIC_311, CUBIC_411, ORTHO])
def test_verify(capsys, write, material):
    code, report, _ = run(capsys, "verify", write(material), "--samples", "500")
    assert code == 0
    assert report["ok"]
    assert report["disagreements"] == []
    assert report["max_axis_residual"] < 1e-6


def test_schema_error(capsys, write):
    bad = {"density": 1.0, "symmetry": "cubic", "constants": {"C11": 3.0, "C44": 1.0}}
    code, _, err = run(capsys, "axes", write(bad))
    assert code == 2
    assert "constants.C12" in err


def test_malformed_json(capsys, write):
    code, _, err = run(capsys, "axes", write("{not json"))
    assert code == 2
    assert "JSON" in err


def test_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "axes", str(tmp_path / "absent.json"))
    assert code == 2


def test_non_finite(capsys, write):
    text = json.dumps(CUBIC_411).replace("4.0", "Infinity")
    code, _, err = run(capsys, "axes", write(text))
    assert code == 3
    assert "C11" in err


def test_bad_tolerance(capsys, write):
    code, _, _ = run(capsys, "check", write(CUBIC_411), "--n", "1,0,0", "--tol", "2")
    assert code == 2


def test_module_entry_point(write):
    proc = subprocess.run(
        [sys.executable, "-m", "acoustic_axes", "check", write(CUBIC_411), "--n", "0,0,0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 4
