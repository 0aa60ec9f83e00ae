import csv
import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from longctl.cli import main
from longctl.sim import CSV_COLUMNS

DATA = Path(__file__).parent / "data"
TINY = str(DATA / "tiny.json")


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_golden_csv(tmp_path):
    assert main(["run", TINY, "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "tiny.csv")
    g_header, g_rows = read_csv(DATA / "tiny_golden.csv")
    assert header == list(CSV_COLUMNS) == g_header
    assert len(rows) == len(g_rows) == 51
    for got, want in zip(rows, g_rows):
        assert got[-1] == want[-1]
        for a, b in zip(got[:-1], want[:-1]):
            if b == "":
                assert a == ""
            else:
                assert math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-12)


def test_run_writes_reports(tmp_path, capsys):
    assert main(["run", "highway", "--svg", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "following" in out and "wrote svg" in out
    root = ET.parse(tmp_path / "highway.svg").getroot()
    assert root.tag.endswith("svg")
    polylines = [el for el in root.iter() if el.tag.endswith("polyline")]
    assert len(polylines) >= 8
    doc = json.loads((tmp_path / "highway_metrics.json").read_text())
    assert len(doc["segments"]) == 5
    assert not any(s["collision"] for s in doc["segments"])
    assert doc["overall"]["min_headway"] > 5


def test_run_without_svg_writes_only_data(tmp_path):
    assert main(["run", TINY, "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["tiny.csv", "tiny_metrics.json"]


def test_seeded_gaussian_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "highway", "--disturbance", "gaussian", "--seed", "7", "--out", str(d)]) == 0
    assert (a / "highway.csv").read_text() == (b / "highway.csv").read_text()
    assert json.loads((a / "highway_metrics.json").read_text())["seed"] == 7


def test_alpha1_lowers_peak_accel(tmp_path):
    main(["run", "highway", "--out", str(tmp_path / "one")])
    main(["run", "highway", "--alpha1", "0.7", "--out", str(tmp_path / "low")])
    one = json.loads((tmp_path / "one" / "highway_metrics.json").read_text())["overall"]
    low = json.loads((tmp_path / "low" / "highway_metrics.json").read_text())["overall"]
    assert low["peak_accel"] < one["peak_accel"]


def test_param_override_precedence(tmp_path):
    doc = json.loads(Path(TINY).read_text())
    doc["controller"] = {"v_max": 25}
    del doc["name"]
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(doc))
    assert main(["run", str(path), "--param", "v_max=22", "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "custom.csv")
    assert float(rows[0][CSV_COLUMNS.index("v_des")]) == 22.0


def test_compare(tmp_path, capsys):
    rc = main(["compare", "freedrive-comparison", "nonlinear", "linear-integrator", "bang-rate",
               "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    table = {line.split()[0]: line.split() for line in out.splitlines()
             if line.split() and line.split()[0] in ("nonlinear", "linear-integrator", "bang-rate")}
    assert float(table["nonlinear"][1]) <= 0.15
    assert 2.0 <= float(table["linear-integrator"][1]) <= 4.0
    assert float(table["bang-rate"][3]) > float(table["nonlinear"][3])
    assert (tmp_path / "freedrive-comparison_bang-rate.csv").exists()


def test_compare_usage_errors(tmp_path, capsys):
    assert main(["compare", "freedrive-comparison", "nonlinear", "--out", str(tmp_path)]) == 2
    assert main(["compare", "freedrive-comparison", "nonlinear", "pid", "--out", str(tmp_path)]) == 2
    assert "unknown variant" in capsys.readouterr().err


def test_stability(capsys):
    assert main(["stability"]) == 0
    out = capsys.readouterr().out
    assert "1, 12, 20, 16, 1.6" in out and "verdict: stable" in out
    assert main(["stability", "--mode", "cf"]) == 0
    out = capsys.readouterr().out
    assert "1, 12, 20, 36, 17.6, 1.6" in out and "verdict: stable" in out
    assert main(["stability", "--param", "k_i=100"]) == 0
    assert "verdict: unstable" in capsys.readouterr().out


def test_scenarios(capsys):
    assert main(["scenarios"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in ("highway", "local", "freedrive-comparison"))


@pytest.mark.parametrize("argv, msg", [
    (["run", "no-such-file.json"], "cannot read scenario"),
    (["run", "highway", "--param", "k_q=1"], "unknown parameter"),
    (["run", "highway", "--param", "k_v"], "key=value"),
    (["stability", "--param", "k_v=-1"], "gains > 0"),
])
def test_errors_exit_nonzero(argv, msg, tmp_path, capsys):
    assert main(argv + (["--out", str(tmp_path)] if argv[0] == "run" else [])) == 1
    assert msg in capsys.readouterr().err


def test_invalid_json_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"duration": 5,\n  "initial_v_H": 20,\n}')
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 1
    assert "line 3" in capsys.readouterr().err


def test_collision_exit_code(tmp_path):
    doc = {"name": "crash", "duration": 3, "initial_v_H": 30,
           "events": [{"t": 0, "kind": "cut_in", "h": 3, "leader": {"breakpoints": [[0, 0]]}}]}
    path = tmp_path / "crash.json"
    path.write_text(json.dumps(doc))
    assert main(["run", str(path), "--out", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "longctl", "scenarios"], capture_output=True, text=True)
    assert proc.returncode == 0 and "highway" in proc.stdout
