import csv
import json

import numpy as np
import pytest

from rydbell import cli, core
from rydbell.core import ControlPulse


def run_cli(*argv) -> int:
    return cli.main(list(argv))


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------


def test_bound_table(tmp_path):
    out = tmp_path / "bound.csv"
    code = run_cli("bound", "--s-min", "0.5", "--s-max", "1.0", "--points", "3",
                   "--out", str(out), "--no-plot")
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["s", "G", "Sdot", "T_of_s0"]
    assert abs(float(rows[0][1]) - 2.0573) < 1e-4  # G at s = 0.5
    assert abs(float(rows[-2][1]) - 1.386294) < 1e-6  # G at s = 1
    footer = rows[-1]
    assert footer[0] == "eta_min"
    assert abs(float(footer[1]) - 2.5707963267948966) < 1e-12
    assert abs(float(footer[1]) - float(footer[2])) < 1e-9
    assert (tmp_path / "bound.csv.manifest.json").exists()


def test_bound_plot_rendered(tmp_path):
    out = tmp_path / "bound.csv"
    assert run_cli("bound", "--points", "10", "--out", str(out)) == 0
    assert (tmp_path / "bound.png").stat().st_size > 0


def test_bound_rejects_bad_grid(tmp_path):
    code = run_cli("bound", "--s-min", "0.5", "--s-max", "0.1",
                   "--out", str(tmp_path / "x.csv"))
    assert code == cli.EXIT_VALIDATION


def test_bound_unwritable_path(tmp_path):
    code = run_cli("bound", "--points", "3", "--no-plot",
                   "--out", str(tmp_path / "missing_dir" / "x.csv"))
    assert code == cli.EXIT_IO


# ---------------------------------------------------------------------------
# optimize / simulate / weyl
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def optimized(tmp_path_factory):
    base = tmp_path_factory.mktemp("opt")
    out = base / "pulse.json"
    code = run_cli("optimize", "--BT", "6.8", "--N", "100", "--seed", "5",
                   "--restarts", "2", "--out", str(out))
    assert code == 0
    return base


def test_optimize_outputs(optimized):
    report = json.loads((optimized / "pulse.report.json").read_text())
    assert report["success"]
    assert report["infidelity"] <= 1e-8
    assert report["eta"] < 2.65
    header, rows = read_csv(optimized / "pulse.trace.csv")
    assert header == ["stage", "gamma", "iterations", "J", "F", "Tr"]
    assert len(rows) == 6
    assert float(rows[-1][1]) == 0.0  # final stage at gamma = 0
    assert (optimized / "pulse.png").stat().st_size > 0
    manifest = json.loads((optimized / "pulse.json.manifest.json").read_text())
    assert manifest["subcommand"] == "optimize"
    assert manifest["config"]["seed"] == 5


def test_optimize_rejects_speed_limit(tmp_path):
    code = run_cli("optimize", "--BT", "3.0", "--out", str(tmp_path / "p.json"))
    assert code == cli.EXIT_VALIDATION


def test_optimize_failure_exit_code(tmp_path):
    out = tmp_path / "p.json"
    code = run_cli("optimize", "--BT", "3.5", "--N", "40", "--restarts", "1",
                   "--amplitude-bound", "0.25", "--max-iter", "80",
                   "--out", str(out), "--no-plot")
    assert code == cli.EXIT_OPT_FAILED
    # best-effort outputs still written
    assert out.exists()
    report = json.loads((out.parent / "p.report.json").read_text())
    assert not report["success"]


def test_optimize_reproducible(tmp_path):
    args = ("optimize", "--BT", "6.8", "--N", "60", "--seed", "3", "--restarts", "1",
            "--max-iter", "80", "--no-plot")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_cli(*args, "--out", str(a)) in (0, 3)
    assert run_cli(*args, "--out", str(b)) in (0, 3)
    assert a.read_bytes() == b.read_bytes()


def test_simulate_idle_pulse(tmp_path):
    pulse_path = tmp_path / "idle.json"
    ControlPulse.zero(2.0, 20).save(pulse_path)
    out = tmp_path / "traj.csv"
    assert run_cli("simulate", "--pulse", str(pulse_path), "--out", str(out), "--no-plot") == 0
    header, rows = read_csv(out)
    assert header == ["t", "P_gg", "P_W", "P_rr", "P_r", "S", "ratio", "inv_Sdot"]
    assert len(rows) == 21
    for row in rows:
        assert float(row[1]) == 1.0  # P_gg stays 1
        assert row[6] == "" and row[7] == ""  # stalled entropy flagged empty


def test_simulate_converged_pulse_populations(optimized):
    out = optimized / "traj.csv"
    assert run_cli("simulate", "--pulse", str(optimized / "pulse.json"),
                   "--out", str(out), "--no-plot") == 0
    _, rows = read_csv(out)
    final = rows[-1]
    assert abs(float(final[1]) - 0.25) < 1e-6
    assert abs(float(final[2]) - 0.50) < 1e-6
    assert abs(float(final[3]) - 0.25) < 1e-6


def test_simulate_decay_norm_deficit(tmp_path):
    pulse = ControlPulse(4.0, np.full(120, 1.0), np.full(120, 0.1))
    pulse_path = tmp_path / "drive.json"
    pulse.save(pulse_path)
    gamma = 1e-4
    out = tmp_path / "decay.csv"
    assert run_cli("simulate", "--pulse", str(pulse_path), "--gamma", str(gamma),
                   "--out", str(out), "--no-plot") == 0
    _, rows = read_csv(out)
    final = rows[-1]
    deficit = 1.0 - (float(final[1]) + float(final[2]) + float(final[3]))
    tr = core.integrated_rydberg_time(core.propagate(pulse, core.GG))
    assert abs(deficit - gamma * tr) < 0.01 * gamma * tr


def test_simulate_malformed_pulse(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert run_cli("simulate", "--pulse", str(bad), "--out", str(tmp_path / "t.csv")) \
        == cli.EXIT_VALIDATION
    assert run_cli("simulate", "--pulse", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "t.csv")) == cli.EXIT_IO


def test_weyl_of_idle_pi_pulse(tmp_path, capsys):
    # an idle pi/B wait implements CZ, so the coordinates are (pi/2, 0, 0)
    pulse_path = tmp_path / "wait.json"
    ControlPulse.zero(np.pi, 64).save(pulse_path)
    out = tmp_path / "weyl.json"
    assert run_cli("weyl", "--pulse", str(pulse_path), "--out", str(out)) == 0
    payload = json.loads(out.read_text())
    assert np.allclose(payload["canonical"], [np.pi / 2.0, 0.0, 0.0], atol=1e-8)
    assert np.allclose(payload["folded"], [np.pi / 2.0, 0.0, 0.0], atol=1e-8)
    captured = capsys.readouterr().out
    assert "canonical" in captured and "folded" in captured


# ---------------------------------------------------------------------------
# verify / protocols
# ---------------------------------------------------------------------------


def test_verify_weakbound(tmp_path):
    out = tmp_path / "verify.json"
    assert run_cli("verify", "--suite", "weakbound", "--out", str(out)) == 0
    verdict = json.loads(out.read_text())
    assert verdict["passed"]
    names = {c["check"] for c in verdict["checks"]}
    assert {"max_f", "rate_constant", "eta_weak", "vn_rate_inequality_1000_states"} <= names


def test_verify_oracle_csv(tmp_path):
    out = tmp_path / "verify.json"
    assert run_cli("verify", "--suite", "oracle", "--out", str(out)) == 0
    header, rows = read_csv(tmp_path / "verify.oracle.csv")
    assert header == ["s", "ratio_min", "G", "rel_err", "restarts"]
    assert len(rows) == 9
    assert all(float(r[3]) <= 1e-3 for r in rows)


def test_protocols_table(tmp_path, capsys):
    out = tmp_path / "protocols.csv"
    assert run_cli("protocols", "--out", str(out)) == 0
    printed = capsys.readouterr().out
    assert "naive pi/2 + wait" in printed
    header, rows = read_csv(out)
    assert header == ["protocol", "eta_state", "eta_gate", "fidelity", "checks"]
    assert len(rows) == 3
    assert all(r[4] == "pass" for r in rows)
