import csv
import json
import subprocess
import sys

import pytest

from aniso_el.cli import main
from aniso_el.config import ConfigError, parse_config, render_config

BASE = """\
[problem]
name = example5
seed = 0

[grid]
n = 64

[checks]
samples = 2000
scan_resolution = 100
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_table(path):
    meta, body = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition(": ")
                meta[k] = v
            else:
                body.append(line)
    return meta, list(csv.DictReader(body))


def test_parse_config_defaults():
    cfg = parse_config(BASE)
    assert cfg.problem == "example5" and cfg.seed == 0 and cfg.n == 64
    assert cfg.solver.seed == 0 and cfg.solver.path_nodes == 17
    assert cfg.checks.samples == 2000


@pytest.mark.parametrize("text", [
    "[problem]\nname = example5\n",                         # seed missing
    "[problem]\nname = nope\nseed = 0\n",                  # unknown problem
    BASE + "\n[solver]\nbogus = 1\n",                      # unknown key
    BASE + "\n[extra]\na = 1\n",                           # unknown section
    BASE + "\n[solver]\ntol = fast\n",                     # bad value
    "[problem\nname=x",                                    # malformed
    BASE.replace("n = 64", "n = 63"),                      # odd grid
    BASE + "\n[constants]\nb = 0.5\n",                     # invalid constants
])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError.__mro__[1]):
        parse_config(text)


def test_config_echo_round_trip():
    cfg = parse_config(BASE + "\n[constants]\ng = 0.002\nforcing_scale = 2\nrho = 0.005\n")
    again = parse_config(render_config(cfg))
    assert again.echo() == cfg.echo()


def test_malformed_config_exit_2(tmp_path):
    assert main(["check", "--config", write(tmp_path, "[problem\n"), "--out", str(tmp_path)]) == 2
    assert main(["check", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["check"]) == 2


def test_check_example(tmp_path, capsys):
    code = main(["check", "--config", write(tmp_path, BASE), "--out", str(tmp_path / "o")])
    rep = json.loads((tmp_path / "o" / "check_report.json").read_text())
    names = {c["name"]: c["status"] for c in rep["checks"]}
    assert names["f"] == "pass" and names["Delta2"] == "pass"
    assert code == (0 if not rep["failing_required"] else 4)


def test_check_example_all_required_pass(tmp_path):
    """The example's required checks should all pass."""
    assert main(["check", "--config", write(tmp_path, BASE), "--out", str(tmp_path / "o")]) == 0


def test_check_perturbed_envelope_fails(tmp_path):
    code = main(["check", "--config", write(tmp_path, BASE + "\n[constants]\ng = 0.01\n"),
                 "--out", str(tmp_path / "o")])
    rep = json.loads((tmp_path / "o" / "check_report.json").read_text())
    assert code != 0
    assert "f" in rep["failing_required"]


def test_solve_refuses_then_forces(tmp_path):
    cfg = write(tmp_path, BASE.replace("[checks]", "[constants]\ng = 0.01\n\n[checks]"))
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "a")]) == 4
    rep = json.loads((tmp_path / "a" / "solve_report.json").read_text())
    assert rep["status"] == "refused"
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "b"), "--force"]) == 0
    rep = json.loads((tmp_path / "b" / "solve_report.json").read_text())
    assert rep["hypotheses"] == "hypotheses-unverified"
    assert rep["c2"] <= 0 < rep["c1"]
    assert (tmp_path / "b" / "u1.csv").exists()


def test_solve_is_deterministic_and_refines(tmp_path):
    cfg = write(tmp_path, BASE)
    outs = []
    for tag in ("x", "y"):
        out = tmp_path / "runs" / tag
        assert main(["solve", "--config", cfg, "--out", str(out), "--force"]) == 0
        outs.append(out)
    for name in ("u1.csv", "u2.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    a = json.loads((outs[0] / "solve_report.json").read_text())
    b = json.loads((outs[1] / "solve_report.json").read_text())
    a["config"]["output"] = b["config"]["output"] = None
    assert a == b
    coarse = tmp_path / "runs" / "n32"
    assert main(["solve", "--config", cfg, "--out", str(coarse), "--force", "--grid-n", "32"]) == 0
    c32 = json.loads((coarse / "solve_report.json").read_text())["c1"]
    assert abs(c32 - a["c1"]) <= 0.1 * abs(a["c1"])


def test_echoed_config_reproduces(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "first"
    main(["scan", "boundary", "--config", cfg, "--out", str(out), "--seed", "7"])
    echo = (out / "config_echo.ini").read_text()
    assert "seed = 7" in echo
    again = tmp_path / "again"
    main(["scan", "boundary", "--config", write(tmp_path, echo, "echo.ini"), "--out", str(again)])
    assert (out / "boundary.csv").read_bytes() == (again / "boundary.csv").read_bytes()


def test_solver_failure_exit_3(tmp_path):
    cfg = write(tmp_path, BASE + "\n[solver]\ntol = 1e-30\npolish_max_iter = 3\nsweep_budget = 3\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--force"]) == 3
    rep = json.loads((tmp_path / "o" / "solve_report.json").read_text())
    assert rep["status"] == "solver-failure" and rep["error"]["stage"] == "mountain_pass"
    assert rep["error"]["trace"]


def test_scan_h1_and_boundary(tmp_path):
    cfg = write(tmp_path, BASE)
    assert main(["scan", "h1", "--config", cfg, "--out", str(tmp_path)]) == 0
    meta, rows = read_table(tmp_path / "h1.csv")
    assert float(meta["max_value"]) > 0
    assert list(rows[0]) == ["x1", "x2", "value", "flags"]
    assert len(rows) == 100 * 100
    assert main(["scan", "boundary", "--config", cfg, "--out", str(tmp_path)]) == 0
    meta, rows = read_table(tmp_path / "boundary.csv")
    assert all(float(r["value"]) > 0 for r in rows)


def test_scan_regions_C_rows_are_A_rows(tmp_path):
    cfg = write(tmp_path, BASE.replace("scan_resolution = 100", "scan_resolution = 400"))
    assert main(["scan", "regions", "--config", cfg, "--out", str(tmp_path)]) == 0
    _, rows = read_table(tmp_path / "regions.csv")
    c_rows = [r for r in rows if "C" in r["flags"]]
    assert c_rows
    bad = [r for r in c_rows if "A" not in r["flags"]]
    assert not bad, f"{len(bad)} C-flagged rows lack the A flag"


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "aniso_el", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "aniso-el" in res.stdout
