import json
import math
import os
import subprocess
import sys

import ezdxf
import pytest

SCRIPTS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "scripts")

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]
CLOCKWISE = [[0, 0], [0, 1], [1, 1], [1, 0]]
U_SHAPE = [[0, 0], [3, 0], [3, 3], [2, 3], [2, 1], [1, 1], [1, 3], [0, 3]]


def call(script, args):
    proc = subprocess.run([sys.executable, os.path.join(SCRIPTS, script)],
                          input=json.dumps(args), capture_output=True, text=True, timeout=120)
    return proc


def call_ok(script, args):
    proc = call(script, args)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)


class TestValidate:
    def test_valid_square(self, polygon_file):
        out = call_ok("polygon_validate.py", {"file_path": polygon_file(SQUARE)})
        assert out["valid"] is True
        assert out["vertex_count"] == 4
        assert out["area"] == pytest.approx(1.0)
        assert out["check_level"] == "geometry"

    def test_clockwise(self, polygon_file):
        out = call_ok("polygon_validate.py", {"file_path": polygon_file(CLOCKWISE)})
        assert out["valid"] is False
        assert [i["rule"] for i in out["issues"]] == ["orientation"]

    def test_syntax_level_skips_geometry(self, polygon_file):
        out = call_ok("polygon_validate.py", {"file_path": polygon_file(CLOCKWISE),
                                              "check_level": "syntax"})
        assert out["valid"] is True
        assert out["area"] is None

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"vertices": [[0, 0],')
        out = call_ok("polygon_validate.py", {"file_path": str(path)})
        assert out["valid"] is False
        assert out["issues"][0]["rule"] == "syntax"

    def test_rules_level(self, polygon_file):
        out = call_ok("polygon_validate.py", {"file_path": polygon_file(U_SHAPE),
                                              "check_level": "rules"})
        assert out["valid"] is False
        assert any(i["rule"] == "star_shaped" for i in out["issues"])

        out = call_ok("polygon_validate.py", {"file_path": polygon_file(SQUARE, "sq.json"),
                                              "check_level": "rules", "r": 2.0})
        assert out["valid"] is True
        assert any(i["rule"] == "saturated" for i in out["issues"])

    def test_missing_file(self, tmp_path):
        out = call_ok("polygon_validate.py", {"file_path": str(tmp_path / "nope.json")})
        assert "File not found" in out["error"]


class TestEnergy:
    def test_power_kernel(self, polygon_file):
        out = call_ok("polygon_energy.py", {"file_path": polygon_file(SQUARE), "kernel": "power:k=2"})
        assert out["energy"]["value"] == pytest.approx(1.0 / 3.0, rel=1e-12)
        assert out["scale_invariant"] == pytest.approx(1.0 / 3.0, rel=1e-12)
        assert out["polygon"]["perimeter"] == pytest.approx(4.0)

    def test_characteristic_kernel(self):
        out = call_ok("polygon_energy.py", {"vertices": SQUARE, "kernel": "char:r=2"})
        assert out["energy"]["method"] == "exact-disc"
        assert out["P_r"] == pytest.approx(4.0 * math.pi - 1.0, rel=1e-10)
        assert out["P_r_upper"] == pytest.approx(4.0 * math.pi)

    def test_bad_kernel(self):
        proc = call("polygon_energy.py", {"vertices": SQUARE, "kernel": "nope"})
        assert proc.returncode == 1
        assert "error" in json.loads(proc.stderr)


class TestDrawings:
    def test_svg(self, polygon_file, tmp_path):
        target = tmp_path / "out" / "square.svg"
        out = call_ok("polygon_to_svg.py", {"file_path": polygon_file(SQUARE),
                                            "output_path": str(target), "disc": "0.5,0.5,0.3",
                                            "label": "unit square"})
        assert out["disc"] == [0.5, 0.5, 0.3]
        assert out["file_size_bytes"] == target.stat().st_size
        assert "unit square" in target.read_text()

    def test_svg_bad_disc(self, polygon_file, tmp_path):
        out = call_ok("polygon_to_svg.py", {"file_path": polygon_file(SQUARE),
                                            "output_path": str(tmp_path / "x.svg"), "disc": [0, 0, -1]})
        assert "error" in out

    def test_dxf_from_ngon(self, tmp_path):
        target = tmp_path / "hex.dxf"
        out = call_ok("polygon_to_dxf.py", {"ngon": 6, "output_path": str(target),
                                            "disc": [0, 0, 0.5], "units": "mm"})
        assert out["layers"] == ["POLYGON", "DISC"]
        assert out["entity_count"] == 2
        msp = ezdxf.readfile(str(target)).modelspace()
        assert len(list(msp.query("LWPOLYLINE")[0].vertices())) == 6

    def test_dxf_units(self, tmp_path):
        out = call_ok("polygon_to_dxf.py", {"vertices": SQUARE, "output_path": str(tmp_path / "s.dxf"),
                                            "units": "furlong"})
        assert "Unsupported units" in out["error"]
