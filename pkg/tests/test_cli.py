from __future__ import annotations

import json
import subprocess
import sys

import pytest

from wkbteich.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_triangulate_pentagon(capsys):
    code, out, _ = run(capsys, "triangulate", "--boundary", "5")
    assert code == 0
    data = json.loads(out)
    assert data["arc_count"] == 2
    assert data["flip_graph"]["vertices"] == 5
    assert len(data["flip_graph"]["edges"]) == 5


def test_triangulate_torus(capsys):
    code, out, _ = run(capsys, "triangulate", "--genus", "1", "--punctures", "1")
    assert code == 0
    assert json.loads(out)["arc_count"] == 3


@pytest.mark.parametrize("argv", [
    ["triangulate", "--boundary", "0"],
    ["triangulate", "--boundary", "3"],
    ["triangulate", "--genus", "2", "--punctures", "1"],
    ["triangulate", "--catalog", "nonsense"],
    ["flip", "--boundary", "5", "--arcs", "9"],
    ["mutate", "--sequence", "0"],
    ["wkb", "--numerator=0,0,1"],
    ["vortex", "--numerator=-1,0,1", "--tol", "-1"],
])
def test_validation_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == "" and "error" in err


def test_saddle_exit_3_with_hint(capsys):
    code, _, err = run(capsys, "wkb", "--numerator=-1,0,1", "--theta", "1.5707963267948966")
    assert code == 3
    assert "SaddleDetected" in err and "--theta" in err


def test_missing_config_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "wkb", "--config", str(tmp_path / "none.json"))
    assert code == 2


def test_flip_and_quiver(capsys):
    code, out, _ = run(capsys, "flip", "--catalog", "punctured_torus", "--arcs", "0,1")
    assert code == 0
    steps = json.loads(out)["steps"]
    assert [s["arc"] for s in steps] == [0, 1]
    code, out, _ = run(capsys, "quiver", "--catalog", "punctured_torus")
    data = json.loads(out)
    assert data["quiver"]["vertices"] == 3 and len(data["quiver"]["arrows"]) == 6


def test_mutate_with_coordinates(capsys, tmp_path):
    cfg = tmp_path / "seed.json"
    cfg.write_text(json.dumps({"matrix": [[0, 1], [-1, 0]], "coords": {"0": 2, "1": 3}}))
    code, out, _ = run(capsys, "mutate", "--config", str(cfg), "--sequence", "0,1,0,1,0")
    assert code == 0
    assert sorted(json.loads(out)["coords"].values()) == pytest.approx([2.0, 3.0])


def test_wkb_output_and_svg(capsys, tmp_path):
    svg = tmp_path / "pic.svg"
    code, out, _ = run(capsys, "wkb", "--numerator=-1,0,1", "--theta", "-0.3", "--svg", str(svg),
                       "--out", str(tmp_path / "o"))
    assert code == 0
    data = json.loads(out)
    assert data["arcs"] == 1 and data["half_planes"] == 4
    (Z,) = data["periods"]
    assert Z[1] > 0
    assert svg.read_text().startswith("<svg")
    assert (tmp_path / "o" / "wkb.json").read_text() == out


def test_output_is_byte_stable(capsys):
    _, a, _ = run(capsys, "periods", "--numerator=-1,0,0,1", "--theta", "0.37")
    _, b, _ = run(capsys, "periods", "--numerator=-1,0,0,1", "--theta", "0.37")
    assert a == b


def test_octagon_random_sweep(capsys):
    code, out, _ = run(capsys, "octagon", "--random", "3", "--seed", "11")
    assert code == 0
    data = json.loads(out)
    assert len(data["configurations"]) == 3 and data["max_error"] < 1e-6


def test_vortex_command(capsys, tmp_path):
    code, out, _ = run(capsys, "vortex", "--numerator=-1,0,1", "--theta", "-0.3", "--grid-h", "0.1",
                       "--out", str(tmp_path))
    assert code == 0
    data = json.loads(out)
    assert data["metadata"]["residual"] < 1e-10
    assert (tmp_path / "w.npy").exists()


def test_asymptotics_bad_domain_fails(capsys, tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"box": [-1.5, 1.5, -1.5, 1.5], "h": 0.1, "R_list": [1, 2]}))
    code, _, err = run(capsys, "asymptotics", "--config", str(cfg))
    assert code == 2 and err.startswith("FAIL")


def test_asymptotics_coarse_pass(capsys, tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"h": 0.08, "R_list": [2, 4]}))
    code, out, _ = run(capsys, "asymptotics", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "R,S,R_ReZ,deviation,ratio" and lines[-1] == "PASS" and len(lines) == 4
    assert (tmp_path / "asymptotics.csv").read_text() == "\n".join(lines[:-1]) + "\n"
    meta = json.loads((tmp_path / "asymptotics.json").read_text())
    assert meta["verdict"] == "PASS"


def test_asymptotics_zero_real_period(capsys, tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"theta": 0.0, "h": 0.08, "R_list": [2, 4]}))
    code, out, _ = run(capsys, "asymptotics", "--config", str(cfg))
    assert code == 0
    rows = [line.split(",") for line in out.splitlines()[1:-1]]
    assert all(abs(float(r[1])) < 0.1 for r in rows)


def test_wkb_square_period(capsys):
    code, out, _ = run(capsys, "wkb", "--numerator=-1,0,1")
    assert code == 0
    data = json.loads(out)
    assert data["arcs"] == 1
    assert data["periods"][0] == pytest.approx([0.0, 3.14159265], abs=1e-8)


def test_pole_without_zeros_not_gmn(capsys):
    code, _, err = run(capsys, "wkb", "--numerator=1", "--denominator=0,0,0,0,0,0,1")
    assert code == 2 and "NotGMN" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wkbteich", "triangulate", "--boundary", "4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["flip_graph"]["vertices"] == 2
