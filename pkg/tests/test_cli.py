import json
import math

import pytest

from coframe.catalog import list_families
from coframe.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_single_family(capsys):
    code, out, _ = run(capsys, "verify", "--family", "tcp2_hyperholo", "--c", "1", "--k", "3",
                       "--format", "json", "--grid", "40")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["command"] == "verify" and doc["pass"] is True
    assert doc["params"] == {"c": 1.0, "k": 3.0}
    for e in doc["entries"]:
        assert e["family"] == "tcp2_hyperholo" and e["pass"]
        assert e["max_relative_residual"] <= 1e-9
        assert e["params"]["k"] == 3.0


def test_verify_cone_family(capsys):
    code, out, _ = run(capsys, "verify", "--family", "cone_bs_dspin7", "--C0", "1", "--C2", "1",
                       "--grid", "30")
    assert code == 0
    header, *rows = out.strip().split("\n")
    assert header == "family,equation,branch,max_relative_residual,pass,samples"
    assert rows and all(row.split(",")[4] == "1" for row in rows)


def test_verify_all_covers_the_registry(capsys):
    code, out, _ = run(capsys, "verify", "--all", "--c", "1", "--k", "2", "--theta", "0.5",
                       "--grid", "12", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert {e["family"] for e in doc["entries"]} == set(list_families())
    assert doc["pass"] is True


def test_verify_failure_exits_one(capsys):
    code, out, _ = run(capsys, "verify", "--family", "tcp2_hyperholo", "--tol", "1e-300", "--grid", "10")
    assert code == 1
    assert ",0," in out


@pytest.mark.parametrize("argv", [
    ("verify", "--family", "no_such_family"),
    ("verify",),
    ("verify", "--family", "tcp2_hyperholo", "--tol", "-1"),
    ("verify", "--family", "tcp2_hyperholo", "--grid", "1"),
    ("verify", "--family", "tcp2_hyperholo", "--rmin", "0.5"),
    ("verify", "--family", "tcp2_hyperholo", "--c", "-1"),
    ("verify", "--family", "cone_hk_spin7", "--c", "1"),
    ("branches", "--family", "tcp2_hyperholo"),
    ("ode", "--family", "no_such_family"),
    ("ode", "--family", "tcp2_hyperholo"),
    ("phase-grid", "--lo", "3", "--hi", "1"),
    ("frobnicate",),
])
def test_configuration_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_branches_zero_phase(capsys):
    code, out, err = run(capsys, "branches", "--family", "tcp2_dhym_om1", "--c", "1", "--k", "3",
                         "--theta", "0", "--grid", "60")
    assert code == 0
    summary = json.loads(err)
    assert summary["branch_count_global"] == 2
    header, *rows = out.strip().split("\n")
    assert header == "r,branch_id,value,global"
    last = {}
    for row in rows:
        r, bid, value, glob = row.split(",")
        if glob == "1":
            last[bid] = (float(r), float(value))
    # one global branch tends to zero: the hyper-holomorphic connection
    ends = sorted(v for _, v in last.values())
    assert ends[0] == pytest.approx(6 / 100 ** 2, rel=1e-9)


def test_branches_triple_root_phase(capsys):
    code, out, _ = run(capsys, "branches", "--family", "tcp2_dhym_om1", "--c", "1", "--k", "3",
                       "--theta", repr(math.atan(0.75)), "--grid", "40", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["summary"]["bolt_multiplicity"] == 3
    assert any(rt["multiplicity"] == 3 for rt in doc["summary"]["bolt_roots"])


def test_branches_om2_four(capsys):
    code, out, _ = run(capsys, "branches", "--family", "tcp2_dhym_om2", "--c", "1", "--k", "1",
                       "--theta", repr(math.atan(2)), "--grid", "40", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["command"] == "branches"
    assert doc["summary"]["branch_count_global"] == 4
    assert sum(e["global"] for e in doc["entries"]) == 4


def test_phase_grid(capsys):
    code, out, _ = run(capsys, "phase-grid", "--lo", "-3", "--hi", "3")
    assert code == 0
    header, *rows = out.strip().split("\n")
    assert header == "a1,a3,tan_theta,region"
    table = {(int(a), int(b)): (t, reg) for a, b, t, reg in (row.split(",") for row in rows)}
    assert len(table) == 49
    assert table[(0, 0)] == ("0", "zero")
    assert table[(0, 1)] == ("-1", "negative")
    assert table[(2, 1)] == ("3", "positive")
    # the pole curve 3 a3^2 = a1^2 + 1 has no integer points: a1^2 + 1 is never divisible by 3
    assert not any(reg == "pole" for _, reg in table.values())


def test_phase_grid_json(capsys):
    code, out, _ = run(capsys, "phase-grid", "--lo", "0", "--hi", "1", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1 and doc["command"] == "phase-grid"
    assert len(doc["entries"]) == 4
    assert {"a1", "a3", "tan_theta", "region"} == set(doc["entries"][0])


def test_ode_lambert_overlay(capsys):
    code, out, _ = run(capsys, "ode", "--c", "0", "--k", "0", "--C2", "1", "--C0", "1",
                       "--rmin", "1", "--rmax", "50", "--grid", "60", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["command"] == "ode" and doc["max_deviation"] <= 1e-6
    assert set(doc["entries"][0]) == {"r", "p", "lambert", "deviation"}


def test_ode_series_start(capsys):
    code, out, _ = run(capsys, "ode", "--c", "1", "--k", "0", "--C2", "1", "--a", "10",
                       "--rmax", "0.1", "--grid", "5")
    assert code == 0
    header, *rows = out.strip().split("\n")
    assert header == "r,p,series,series_deviation"
    assert float(rows[0].split(",")[0]) == pytest.approx(1e-3)
    assert max(float(row.split(",")[3]) for row in rows) <= 1e-9


def test_ode_default_family(capsys):
    code, out, _ = run(capsys, "ode", "--grid", "5", "--rmax", "3")
    assert code == 0
    assert out.startswith("r,p\n")


@pytest.mark.parametrize("argv", [
    ("branches", "--family", "tcp2_dhym_om2", "--grid", "30"),
    ("phase-grid", "--lo", "-4", "--hi", "4"),
    ("ode", "--c", "0", "--k", "0", "--C2", "1", "--C0", "1", "--rmin", "1", "--grid", "20"),
    ("verify", "--family", "eh_dhym_1", "--grid", "20"),
])
def test_csv_is_deterministic(capsys, argv):
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second
    assert "\r" not in first and first.endswith("\n")


def test_output_file(tmp_path, capsys):
    path = tmp_path / "grid.csv"
    code, out, _ = run(capsys, "phase-grid", "--lo", "0", "--hi", "1", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("a1,a3,tan_theta,region\n")


def test_seventeen_digit_numbers(capsys):
    _, out, _ = run(capsys, "ode", "--c", "0", "--k", "0", "--C2", "1", "--C0", "1",
                    "--rmin", "1", "--rmax", "2", "--grid", "3", "--linear")
    row = out.strip().split("\n")[2].split(",")
    assert row[0] == "1.5"
    assert float(row[1]) == float("%.17g" % float(row[1]))
