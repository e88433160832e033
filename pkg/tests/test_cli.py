import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mrddtest import cli
from mrddtest.errors import ConfigError, EmptyData
from mrddtest.lpdensity import BandwidthSpec

DATA = Path(__file__).parent / "data"
MODEL1 = str(DATA / "model1_n5000.csv")
TOWNS = str(DATA / "municipalities.csv")


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, text, name="in.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_json_report_fields_and_round_trip(capsys):
    code, out, _ = run(["test", "--input", MODEL1, "--format", "json"], capsys)
    assert code == 0
    report = json.loads(out)
    assert json.loads(json.dumps(report)) == report
    assert [v["name"] for v in report["variables"]] == ["z1", "z2"]
    for v in report["variables"]:
        for key in ("theta_hat", "sigma_hat", "n_j", "n_j_plus", "n_j_minus", "h_plus", "h_minus"):
            assert key in v
        assert v["n_j"] == v["n_j_plus"] + v["n_j_minus"]
    assert [t["method"] for t in report["tests"]] == ["MT", "MTMAX", "BCT", "DT", "SDT"]
    for t in report["tests"]:
        assert set(t) >= {"statistic", "critical_value", "p_value", "reject"}


def test_model1_fixture_does_not_reject(capsys):
    _, out, _ = run(["test", "--input", MODEL1, "--format", "json", "--methods", "MT"], capsys)
    mt = json.loads(out)["tests"][0]
    assert mt["p_value"] > 0.05 and not mt["reject"]


def test_text_matches_json_to_nine_digits(capsys):
    _, js, _ = run(["test", "--input", TOWNS, "--cutoffs", "30000,0.7", "--directions", "below,below",
                    "--format", "json"], capsys)
    _, text, _ = run(["test", "--input", TOWNS, "--cutoffs", "30000,0.7", "--directions", "below,below"],
                     capsys)
    report = json.loads(js)
    lines = text.splitlines()
    head = lines.index("  ".join(cli.TEST_COLUMNS))
    for row, line in zip(report["tests"], lines[head + 1:]):
        cells = dict(zip(cli.TEST_COLUMNS, line.split("  ")))
        for key in ("statistic", "critical_value", "p_value"):
            assert float(cells[key]) == pytest.approx(row[key], rel=1e-9)
    vhead = lines.index("  ".join(cli.VARIABLE_COLUMNS))
    for row, line in zip(report["variables"], lines[vhead + 1:]):
        cells = dict(zip(cli.VARIABLE_COLUMNS, line.split("  ")))
        for key in ("theta_hat", "sigma_hat", "h_plus", "h_minus"):
            assert float(cells[key]) == pytest.approx(row[key], rel=1e-9)


def test_treated_below_centering(capsys):
    _, out, _ = run(["test", "--input", TOWNS, "--cutoffs", "30000,0.7", "--directions", "below,below",
                     "--format", "json"], capsys)
    report = json.loads(out)
    raw = np.loadtxt(TOWNS, delimiter=",", skiprows=1)
    small_poor = (raw[:, 0] <= 30000) & (raw[:, 1] <= 0.7)
    # conditioning set of variable 1 is the rows with population <= cutoff
    assert report["variables"][1]["n_j"] == int(np.sum(raw[:, 0] <= 30000))
    assert report["variables"][0]["n_j_plus"] == int(small_poor.sum())


def test_d1_methods_coincide(tmp_path, capsys):
    z = np.random.default_rng(0).uniform(-1, 1, 1500)
    path = write(tmp_path, "x\n" + "\n".join(repr(float(v)) for v in z) + "\n")
    _, out, _ = run(["test", "--input", path, "--format", "json", "--methods", "MT,MTMAX,BCT"], capsys)
    tests = json.loads(out)["tests"]
    assert len({t["reject"] for t in tests}) == 1
    assert tests[0]["p_value"] == pytest.approx(tests[1]["p_value"], abs=1e-10)


def test_non_numeric_row_dropped(tmp_path, capsys):
    path = write(tmp_path, "a,b,c\n1.0,2.0,x\n0.5,oops,1\n-0.2,0.1,2\n0.3,inf,3\n")
    warnings = []
    ds, dropped = cli.ingest_csv(path, ("a", "b"), warn=warnings.append)
    assert dropped == 2 and ds.n == 2 and ds.variable_names == ("a", "b")
    assert warnings == ["dropped 2 row(s) with missing or non-numeric values"]
    # unselected junk in column c is ignored
    ds, dropped = cli.ingest_csv(path, ("a",), warn=warnings.append)
    assert dropped == 0 and ds.n == 4


def test_ingest_errors(tmp_path):
    with pytest.raises(EmptyData):
        cli.ingest_csv(write(tmp_path, "a,b\n"))
    with pytest.raises(EmptyData):
        cli.ingest_csv(write(tmp_path, "", "empty.csv"))
    with pytest.raises(ConfigError):
        cli.ingest_csv(write(tmp_path, "a,b\n1,2\n", "c.csv"), ("a", "zz"))
    with pytest.raises(OSError):
        cli.ingest_csv(str(tmp_path / "missing.csv"))


@pytest.mark.parametrize("argv, code, needle", [
    (["test", "--input", MODEL1, "--alpha", "1.5"], 2, "alpha"),
    (["test", "--input", MODEL1, "--cutoffs", "0,0,0"], 2, "--cutoffs"),
    (["test", "--input", MODEL1, "--directions", "sideways,above"], 2, "direction"),
    (["test", "--input", MODEL1, "--methods", "MT,KS"], 2, "--methods"),
    (["test", "--input", MODEL1, "--kernel", "gaussian"], 2, "--kernel"),
    (["test", "--input", MODEL1, "--bandwidth", "-1"], 2, "--bandwidth"),
    (["test", "--input", MODEL1, "--vars", "z1,z9"], 2, "--vars"),
    (["test", "--input", "/nonexistent/file.csv"], 3, "No such file"),
    (["simulate", "--model", "model3"], 2, "--gamma"),
    (["simulate", "--n", "10", "--reps", "2"], 2, "n must be"),
    (["power", "--d", "2", "--k", "-1", "--draws", "100"], 2, "nonnegative"),
])
def test_exit_codes(argv, code, needle, capsys):
    got, _, err = run(argv, capsys)
    assert got == code
    assert needle in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["test"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--n", "lots"])
    assert exc.value.code == 2


def test_data_errors_exit_3(tmp_path, capsys):
    assert run(["test", "--input", write(tmp_path, "a\nx\ny\n")], capsys)[0] == 3
    # only two points left of the cutoff
    z = np.concatenate([np.random.default_rng(1).uniform(0, 1, 400), [-0.5, -0.9]])
    path = write(tmp_path, "a\n" + "\n".join(repr(float(v)) for v in z) + "\n", "sparse.csv")
    code, _, err = run(["test", "--input", path, "--methods", "MT"], capsys)
    assert code == 3 and "variable 0" in err
    bad = tmp_path / "latin1.csv"
    bad.write_bytes(b"a\n\xff\xfe1\n")
    assert run(["test", "--input", str(bad)], capsys)[0] == 3


def test_parse_bandwidth():
    assert cli.parse_bandwidth("auto", 2) == BandwidthSpec()
    assert cli.parse_bandwidth("0.3", 2) == BandwidthSpec.fixed(0.3)
    specs = cli.parse_bandwidth("0.2:0.4,auto", 2)
    assert specs == [(BandwidthSpec.fixed(0.2), BandwidthSpec.fixed(0.4)), BandwidthSpec()]
    assert cli.parse_bandwidth("0.2:0.4", 3) == [(BandwidthSpec.fixed(0.2), BandwidthSpec.fixed(0.4))] * 3
    with pytest.raises(ConfigError):
        cli.parse_bandwidth("0.1,0.2,0.3", 2)


def test_fixed_bandwidth_reported(capsys):
    _, out, _ = run(["test", "--input", MODEL1, "--bandwidth", "0.2:0.3,0.4", "--methods", "MT",
                     "--format", "json"], capsys)
    v = json.loads(out)["variables"]
    assert (v[0]["h_minus"], v[0]["h_plus"], v[1]["h_minus"], v[1]["h_plus"]) == (0.2, 0.3, 0.4, 0.4)


def test_simulate_shape_and_columns(capsys):
    code, out, _ = run(["simulate", "--n", "500", "--reps", "6", "--methods", "MT,DT"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == list(cli.STUDY_COLUMNS)
    assert [r["method"] for r in rows] == ["MT", "DT"]
    assert all(r["reps"] == "6" and r["param"] == "d=2" for r in rows)


def test_simulate_byte_identical_across_workers(tmp_path):
    outs = []
    for workers in ("1", "1", "4"):
        path = tmp_path / f"sim{len(outs)}.csv"
        code = cli.main(["simulate", "--n", "500", "--reps", "8", "--seed", "5", "--workers", workers,
                         "--output", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_power_output(capsys):
    code, out, _ = run(["power", "--framework", "2", "--d", "2", "--k", "0,0.5,4", "--draws", "100000"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == list(cli.POWER_COLUMNS)
    power = {(float(r["k"]), r["method"]): float(r["power"]) for r in rows}
    assert power[(0.5, "MT")] > power[(0.5, "BCT")]
    assert power[(4.0, "BCT")] > power[(4.0, "MT")]
    for m in ("MT", "MTMAX"):
        assert abs(power[(0.0, m)] - 0.1) < 3 * math.sqrt(0.09 / 100000)


def test_json_study_format(capsys):
    _, out, _ = run(["simulate", "--n", "500", "--reps", "3", "--format", "json", "--methods", "SDT"], capsys)
    rows = json.loads(out)
    assert rows[0]["method"] == "SDT" and rows[0]["failures"] == 0


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mrddtest.cli", "power", "--d", "1", "--k", "0",
                           "--draws", "1000"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("framework,d,k,method")
