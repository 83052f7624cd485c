import json
import math
import subprocess
import sys

import numpy as np
import pytest

from melnikov_lab.cli import Grid, main, resolve_params
from melnikov_lab.errors import ConfigError
from melnikov_lab.io import csv_text, format_value, read_config


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- parameters

def test_grid_parsing():
    g = Grid.parse("tau", "0:1:5")
    assert np.allclose(g.values, [0, 0.25, 0.5, 0.75, 1.0])
    assert Grid.parse("tau", "0.5").values.tolist() == [0.5]
    for bad in ("0:1:1", "0:1:0", "0:1", "a:b:c"):
        with pytest.raises(ConfigError, match="tau"):
            Grid.parse("tau", bad)


def test_precedence_flags_over_config_over_preset(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\ndelta = 2\nbeta=3\n")
    p = resolve_params("duffing", "homoclinic", str(cfg), {"delta": "0.5"})
    assert p["delta"] == 0.5 and p["beta"] == 3.0 and p["omega"] == 1.0


def test_unknown_and_inapplicable_keys_are_named(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("gamma=1\n")
    with pytest.raises(ConfigError, match="gamma"):
        resolve_params("duffing", None, str(cfg), {})
    with pytest.raises(ConfigError, match="omega0"):
        resolve_params("duffing", None, None, {"omega0": "1"})
    with pytest.raises(ConfigError, match="preset"):
        resolve_params("beam", "nope", None, {})


def test_read_config_rejects_malformed_lines(tmp_path):
    f = tmp_path / "x.cfg"
    f.write_text("a=1\nnot a pair\n")
    with pytest.raises(ConfigError, match=":2:"):
        read_config(f)


def test_csv_format():
    text = csv_text(["x", "ok"], [[0.1, True], [1, False]])
    assert text == "x,ok\n0.10000000000000001,true\n1,false\n"
    assert format_value(math.pi) == "3.1415926535897931"


# ---------------------------------------------------------------- verbs

def test_list_table_and_json(capsys):
    code, out, _ = run(["list"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert [ln.split()[0] for ln in lines[1:]] == ["duffing", "pendula", "rigidbody", "beam"]
    code, out, _ = run(["list", "--json"], capsys)
    doc = json.loads(out)
    assert [d["id"] for d in doc] == ["duffing", "pendula", "rigidbody", "beam"]
    assert "parameters" in doc[0] and "families" in doc[0]


def test_unknown_flag_exits_one_with_usage(capsys):
    code, _, err = run(["list", "--bogus"], capsys)
    assert code == 1 and "Usage" in err


def test_empty_grid_exits_one(capsys):
    code, _, err = run(["melnikov-scan", "--system", "duffing", "--tau", "0:1:0"], capsys)
    assert code == 1 and "tau" in err


def test_melnikov_scan_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code, _, _ = run(["melnikov-scan", "--system", "duffing", "--a", "1", "--beta", "1",
                      "--delta", "1", "--omega", "1", "--kind", "homoclinic",
                      "--tau", "0:6.2832:64", "--out", str(out)], capsys)
    assert code == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "tau,value,converged,tail_estimate"
    assert len(lines) == 65
    first = lines[1].split(",")
    assert first[0] == "0" and abs(float(first[1]) + 4.0 / 3.0) < 1e-8


def test_scan_reports_unconverged_points_with_exit_two(tmp_path, capsys):
    out = tmp_path / "p.csv"
    # a tolerance below the attainable accuracy leaves points unconverged
    code, _, err = run(["melnikov-scan", "--system", "pendula", "--theta0", "0:3:2",
                        "--alpha", "0", "--K", "2", "--tol", "1e-16", "--out", str(out)], capsys)
    assert code == 2
    lines = out.read_text().splitlines()
    assert len(lines) == 3 and lines[1].split(",")[5] == "false"


def test_oracle_compare_beam(capsys):
    code, out, _ = run(["oracle-compare", "--system", "beam", "--case", "2,3,1", "--beta1", "1",
                        "--c", "1"], capsys)
    assert code == 0
    fields = dict(line.split(": ", 1) for line in out.strip().splitlines())
    assert math.isclose(float(fields["oracle"]), 1.5 * math.pi)
    assert "relative_error" in fields and "numeric" in fields


def test_obstruction_rigid_body_json(capsys):
    code, out, _ = run(["obstruction", "--system", "rigidbody", "--preset", "one-plus-sin",
                        "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["columns"] == ["j", "sign", "value", "oracle"]
    for j, sign, value, oracle in doc["rows"]:
        assert abs(value - oracle) < 1e-7 * abs(oracle)


def test_zero_find_and_verify(capsys):
    code, out, err = run(["zero-find", "--system", "duffing", "--preset", "soft"], capsys)
    assert code == 0 and "found" in err
    rows = out.strip().splitlines()[1:]
    assert len(rows) == 2 and all(r.endswith("simple") for r in rows)
    code, out, _ = run(["verify", "--system", "duffing", "--preset", "soft"], capsys)
    doc = json.loads(out)
    assert code == 0 and all(doc["persisted"])
    assert abs(doc["drift_slope"] - 1.0) < 0.1


def test_figure_flag_writes_png(tmp_path, capsys):
    fig = tmp_path / "m.png"
    code, _, _ = run(["melnikov-scan", "--system", "duffing", "--kind", "subharmonic",
                      "--tau", "0:6.28:8", "--figure", str(fig)], capsys)
    assert code == 0
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_thread_cap_env_is_validated(monkeypatch, capsys):
    monkeypatch.setenv("MELNIKOV_LAB_THREADS", "zero")
    code, _, err = run(["melnikov-scan", "--system", "duffing", "--tau", "0:1:3"], capsys)
    assert code == 1 and "MELNIKOV_LAB_THREADS" in err


def test_scan_bytes_do_not_depend_on_thread_count(tmp_path, monkeypatch, capsys):
    outs = []
    for n in ("1", "3"):
        monkeypatch.setenv("MELNIKOV_LAB_THREADS", n)
        path = tmp_path / f"s{n}.csv"
        assert run(["melnikov-scan", "--system", "duffing", "--kind", "subharmonic",
                    "--tau", "0:6.28:40", "--out", str(path)], capsys)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_console_entry_point_exit_code():
    proc = subprocess.run([sys.executable, "-m", "melnikov_lab.cli", "list", "--nope"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
