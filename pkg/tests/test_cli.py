import json
import subprocess
import sys

import numpy as np
import pytest

from polymin.cli import ResultRow, ResultTable, certify_quality, dumps, main, strip_wall_time
from polymin.functionals import REFERENCE_VALUE


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_eval_icosahedron(capsys):
    code, rep = run(["eval", "builtin:icosahedron"], capsys)
    assert code == 0
    assert abs(rep["result"]["quality"] - 5.14835) < 1e-5
    assert rep["result"]["valency"] == [5] * 12
    assert rep["result"]["triangle_faces"] is True


def test_eval_cube(capsys):
    code, rep = run(["eval", "builtin:cube"], capsys)
    assert rep["result"]["quality"] == pytest.approx(6.0, rel=1e-15)
    assert rep["result"]["triangle_faces"] is False


def test_eval_flat_mesh_exit_code(tmp_path, capsys):
    p = tmp_path / "flat.off"
    p.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 3 2\n")
    assert main(["eval", str(p)]) == 3


def test_usage_errors(capsys, tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["export", "builtin:n8", "--format", "xyz", "--out", str(tmp_path / "x")])
    assert e.value.code == 2
    assert main(["eval", "builtin:nonesuch"]) == 2
    assert main(["eval", str(tmp_path / "missing.off")]) == 2
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_export_then_eval(tmp_path, capsys):
    for fmt in ("off", "json"):
        path = tmp_path / f"n8.{fmt}"
        code, rep = run(["export", "builtin:n8", "--format", fmt, "--out", str(path)], capsys)
        assert code == 0
        assert str(path) in rep["manifest"]["hashes"]
        _, direct = run(["eval", "builtin:n8"], capsys)
        _, back = run(["eval", str(path)], capsys)
        assert back["result"]["n_vertices"] == 8
        q0, q1 = direct["result"]["quality"], back["result"]["quality"]
        assert abs(q1 - q0) <= 1e-15 * q0


def test_off_has_17_digits(tmp_path, capsys):
    path = tmp_path / "t.off"
    run(["export", "builtin:n8", "--out", str(path)], capsys)
    lines = path.read_text().splitlines()
    assert lines[0] == "OFF" and lines[1].split()[0] == "8"


def test_json_reals_round_trip():
    xs = [0.1, 1 / 3, 5.421182570186587, 1e-300, -2.5e17]
    text = dumps({"x": xs, "nested": {"y": np.float64(np.pi)}, "flag": np.bool_(True)})
    back = json.loads(text)
    assert back["x"] == xs
    assert back["nested"]["y"] == np.pi
    assert "0.10000000000000001" in text


def test_search_reproducible(tmp_path, capsys):
    args = ["search", "--n", "6", "--restarts", "2", "--iters", "300", "--seed", "7",
            "--out", str(tmp_path / "a.off"), "--report", str(tmp_path / "a.json")]
    code, first = run(args, capsys)
    assert code == 0
    _, second = run(args, capsys)
    assert strip_wall_time(first) == strip_wall_time(second)
    assert first["manifest"]["seed"] == 7
    assert json.loads((tmp_path / "a.json").read_text())["result"]["quality"] == first["result"]["quality"]
    assert first["result"]["triangle_faces"] is True


def test_family_and_verify(capsys):
    code, rep = run(["family", "n9"], capsys)
    assert code == 0
    assert abs(rep["result"]["closed_form_quality"] - 5.31637) < 1e-5
    code, rep = run(["family", "n8", "--optimize"], capsys)
    assert set(rep["result"]["certificates"]) == {"n8_w", "n8_x2", "n8_z2"}
    code, rep = run(["verify", "--n", "10"], capsys)
    assert code == 0
    assert rep["result"]["eta"]["sign_lo"] * rep["result"]["eta"]["sign_hi"] < 0


def test_verify_failure_exit_code(capsys):
    # a tolerance far below the optimiser's accuracy cannot bracket the root
    assert main(["verify", "--n", "8", "--tol", "1e-300"]) == 4


def test_family_bad_params(capsys):
    assert main(["family", "n8", "--params", "1,2"]) == 2
    assert main(["family", "dodecahedron"]) == 2


def test_probe_modes(tmp_path, capsys):
    code, rep = run(["probe", "--base", "builtin:example-singular", "--mode", "singular", "--level", "4"], capsys)
    assert code == 0
    pts = np.array([c["point"] for c in rep["result"]["candidates"]])
    assert np.min(np.linalg.norm(pts - [0, 2, 0], axis=1)) < 1e-6
    code, rep = run(["probe", "--base", "builtin:example-singular", "--mode", "convexity", "--level", "4",
                     "--trials", "500", "--seed", "3"], capsys)
    assert rep["result"]["report"]["violations"] == 0
    code, rep = run(["probe", "--base", "builtin:example-singular", "--mode", "gradient",
                     "--point", "0,2,0", "--direction", "1,1,1"], capsys)
    g = np.array(rep["result"]["gradients"]["given"]["gradient"])
    assert np.allclose(g / np.linalg.norm(g), np.array([1, 5, 1]) / np.sqrt(27), atol=1e-5)
    code, rep = run(["probe", "--base", "builtin:tetra", "--mode", "rigidity", "--trials", "2",
                     "--vertex", "0"], capsys)
    assert rep["result"]["rigid"] is True
    assert main(["probe", "--base", "builtin:example-singular", "--mode", "singular"]) == 2
    assert main(["probe", "--base", "builtin:example-singular", "--mode", "singular", "--level", "1"]) == 2


def test_constants(capsys):
    code, rep = run(["constants"], capsys)
    names = [c["name"] for c in rep["result"]["constants"]]
    assert names[0] == "alpha4" and names[-1] == "ball_limit"


def test_small_table(capsys):
    code, rep = run(["table", "--n-min", "4", "--n-max", "6", "--restarts", "2", "--iters", "1500"], capsys)
    rows = rep["result"]["rows"]
    assert [r["n"] for r in rows] == [4, 5, 6]
    assert rep["result"]["monotone"] and rep["result"]["above_ball_limit"]
    assert all(r["abs_diff"] <= 1e-3 for r in rows)


def test_result_table_flags():
    rows = [ResultRow(n, q, q, 0.0, [], True) for n, q in ((4, 7.2), (5, 6.2), (6, 6.3))]
    t = ResultTable(rows)
    assert not t.monotone and t.above_ball


def test_certify_quality():
    assert certify_quality(8, REFERENCE_VALUE[8], 1e-6)
    assert not certify_quality(8, REFERENCE_VALUE[8] + 1e-3, 1e-6)
    assert certify_quality(12, REFERENCE_VALUE[12], 1e-9)
    assert not certify_quality(11, REFERENCE_VALUE[11], 1e-6)


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "polymin.cli", "eval", "builtin:octahedron"],
                         capture_output=True, text=True, check=True)
    assert abs(json.loads(out.stdout)["result"]["quality"] - 5.71911) < 1e-5
