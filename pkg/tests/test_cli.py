import csv
import io

import pytest

from arcsim.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_writes_three_files(tmp_path, capsys):
    code, out, _ = _run(capsys, "simulate", "scenarios/cow_staircase", "--out", str(tmp_path))
    assert code == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["cow_staircase.csv", "cow_staircase_events.csv", "cow_staircase_summary.txt"]
    summary = (tmp_path / "cow_staircase_summary.txt").read_text()
    assert "c=3000 & u2=100" in summary
    assert "T=0 & u2=100" in summary


def test_simulate_csv_summary_and_event_log(tmp_path, capsys):
    code, _, _ = _run(capsys, "simulate", "sep_bidirectional", "--out", str(tmp_path), "--format", "csv")
    assert code == EXIT_OK
    with open(tmp_path / "sep_bidirectional_events.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["winner"] for r in rows if r["mv"] == "choke"] == ["z_s", "PC_B", "z_s"]
    header = (tmp_path / "sep_bidirectional_summary.csv").read_text().splitlines()[0]
    assert header.startswith("t_start,t_end,gas_fraction")


def test_simulate_global_overrides(tmp_path, capsys):
    code, _, _ = _run(capsys, "simulate", "cow_cold_step", "--t-end", "100", "--dt", "0.5",
                      "--out", str(tmp_path), "--jobs", "2")
    assert code == EXIT_OK
    lines = (tmp_path / "cow_cold_step.csv").read_text().splitlines()
    assert lines[-1].startswith("100,")


def test_simulate_missing_file(tmp_path, capsys):
    code, _, err = _run(capsys, "simulate", str(tmp_path / "nope.yaml"))
    assert code == EXIT_USAGE
    assert "nope" in err


def test_simulate_schema_error(tmp_path, capsys):
    f = tmp_path / "bad.yaml"
    f.write_text("plant: barn\nstructure: cow3\ndt: -2\n")
    code, _, err = _run(capsys, "simulate", str(f))
    assert code == EXIT_USAGE
    assert "dt" in err and "bad.yaml" in err


def test_steady_state_table(capsys):
    code, out, _ = _run(capsys, "steady-state", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 10
    row = {r["t_out"]: r for r in rows}["-5.0"]
    assert float(row["u2"]) == pytest.approx(25.7, abs=0.05)
    assert row["active"] == "T=4+c=1000"


def test_steady_state_single_and_hot(capsys):
    code, out, _ = _run(capsys, "steady-state", "0", "25", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["active"] == "u1=50+u2=0"
    assert rows[1]["active"] == "u1=100+u2=0" and rows[1]["violated"] == "T<=20"


def test_steady_state_simulate_cross_check(capsys):
    code, out, _ = _run(capsys, "steady-state", "-10", "--simulate", "--t-end", "20000")
    assert code == EXIT_OK
    assert "True" in out


def test_tune(capsys):
    code, out, _ = _run(capsys, "tune", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["controller"] for r in rows] == ["TC1", "TC3", "TC2", "CC2", "CC1", "TC"]
    assert {r["controller"]: (float(r["kc"]), float(r["tau_i"])) for r in rows}["CC1"] == (-0.02, 1750)


def test_linearize(capsys):
    code, out, _ = _run(capsys, "linearize", "--t-out", "0", "--t-out", "-40", "--format", "csv")
    assert code == EXIT_OK
    nom, cold = list(csv.DictReader(io.StringIO(out)))
    assert float(nom["k_c_u1"]) == pytest.approx(-10.456, abs=1e-3)
    assert float(nom["tau_c"]) == pytest.approx(397.35, abs=0.01)
    assert 4 <= float(cold["tau_c_ratio"]) <= 6
    assert 4 <= float(cold["kp_c_u1_ratio"]) <= 6


def test_linearize_needs_both_mvs(capsys):
    code, _, err = _run(capsys, "linearize", "--u1", "50")
    assert code == EXIT_USAGE


def test_check_topology_exit_codes(tmp_path, capsys):
    assert _run(capsys, "check-topology", "fig3")[0] == EXIT_OK
    code, out, _ = _run(capsys, "check-topology", "mut_c3_fig1_tpm_moved")
    assert code == EXIT_FAIL
    assert "C3 VIOLATION" in out
    bad = tmp_path / "broken.yaml"
    bad.write_text("units: [\n")
    code, _, err = _run(capsys, "check-topology", str(bad))
    assert code == EXIT_USAGE and "line" in err


def test_check_topology_csv(capsys):
    code, out, _ = _run(capsys, "check-topology", "fig4", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["rule"] for r in rows] == ["C1", "C2", "C3", "C4", "S1", "S2", "S3"]
    assert list(rows[0]) == ["flowsheet", "rule", "result", "locus", "message"]


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["tune", "--jobs", "0"])
    assert info.value.code == EXIT_USAGE
