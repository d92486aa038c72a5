import json
import os

import pandas as pd
import pytest

from drnash.cli import main
from drnash.scenario import REPLICA_PATH
from tests.utils import small_scenario_dict, write_scenario

ARTIFACTS = ["dr_schedule.csv", "prices.csv", "settlement.csv", "trace.csv", "summary.json"]


@pytest.fixture(scope="module")
def replica_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("replica")
    assert main(["run", REPLICA_PATH, "--out", str(out)]) == 0
    return out


def read(path):
    return pd.read_csv(path, dtype=str, keep_default_na=False)


def test_validate_replica(capsys):
    assert main(["validate", REPLICA_PATH]) == 0
    assert capsys.readouterr().out.startswith("OK")


def test_validate_bad_alpha(tmp_path, capsys):
    data = small_scenario_dict()
    data["prosumers"][0]["alpha"] = 1.2
    assert main(["validate", write_scenario(tmp_path, data)]) == 1
    assert "prosumers[0].alpha: ALPHA_OUT_OF_RANGE" in capsys.readouterr().err


def test_validate_rejects_what_run_cannot_settle(tmp_path, capsys):
    path = write_scenario(tmp_path, small_scenario_dict(system_load=[150, 150, 150, 150]))
    assert main(["validate", path]) == 1
    assert "system_load: SYSTEM_LOAD_BELOW_PV_AND_DR" in capsys.readouterr().err
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out)]) == 1
    assert not out.exists()


def test_validate_truncated(tmp_path, capsys):
    path = tmp_path / "broken.scenario"
    path.write_text('{"horizon": 4,\n "tariff": ', encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_validate_missing_file(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "missing.scenario")]) == 1
    assert "I/O error" in capsys.readouterr().err


def test_run_writes_artifacts(replica_run):
    for name in ARTIFACTS:
        assert (replica_run / name).exists()


def test_dr_schedule(replica_run):
    schedule = read(replica_run / "dr_schedule.csv")
    assert list(schedule.columns) == ["prosumer", "hour", "dr_kw", "x_kw", "sdr", "lambda_pv", "lambda_dr", "inconvenience", "profit_pv"]
    assert len(schedule) == 2 * 24
    assert set(schedule.prosumer) == {"residential", "business"}
    assert all(len(value.split(".")[1]) == 6 for value in schedule.dr_kw)


def test_prices_zero_without_surplus(replica_run):
    prices = read(replica_run / "prices.csv")
    assert list(prices.columns) == ["prosumer", "hour", "retail_rate", "pv_gen_cost", "sdr", "lambda_pv", "lambda_dr"]
    deficit = prices[prices.sdr.astype(float) <= 1]
    assert len(deficit) > 0
    assert set(deficit.lambda_pv) == {"0.000000"}
    assert set(deficit.lambda_dr) == {"0.000000"}


def test_settlement_and_trace(replica_run):
    settlement = read(replica_run / "settlement.csv")
    assert len(settlement) == 24
    assert list(settlement.columns) == [
        "hour", "provider_profit", "utility_cost_before", "utility_cost_after", "adjusted_load", "utility_profit",
    ]
    summary = json.loads((replica_run / "summary.json").read_text())
    trace = read(replica_run / "trace.csv")
    assert len(trace) == summary["iterations"]
    assert list(trace.iteration) == [str(k) for k in range(1, summary["iterations"] + 1)]


def test_summary(replica_run):
    summary = json.loads((replica_run / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["max_nash_improvement"] <= 1e-3
    assert summary["options"]["damping"] == 0.5
    assert set(summary["prosumers"]) == {"residential", "business"}
    assert sorted(summary["event_hours_by_utility_profit"]) == list(range(12, 21))


def test_byte_identical_reruns(replica_run, tmp_path):
    assert main(["run", REPLICA_PATH, "--out", str(tmp_path)]) == 0
    for name in ARTIFACTS:
        assert (tmp_path / name).read_bytes() == (replica_run / name).read_bytes()


def test_lf_line_endings(replica_run):
    assert b"\r\n" not in (replica_run / "dr_schedule.csv").read_bytes()


def test_verify_replica(replica_run, tmp_path, capsys):
    for name in ARTIFACTS:
        (tmp_path / name).write_bytes((replica_run / name).read_bytes())
    assert main(["verify", REPLICA_PATH, "--out", str(tmp_path)]) == 0
    report = read(tmp_path / "nash_report.csv")
    assert list(report.columns) == ["prosumer", "hour", "dr_kw", "best_deviation_kw", "max_improvement"]
    assert len(report) == 48
    assert "Nash equilibrium" in capsys.readouterr().out


def test_verify_tampered(replica_run, tmp_path, capsys):
    for name in ARTIFACTS:
        (tmp_path / name).write_bytes((replica_run / name).read_bytes())
    schedule = read(tmp_path / "dr_schedule.csv")
    # 19:00 is an event hour without surplus PV, so the PV price is zero
    mask = (schedule.prosumer == "residential") & (schedule.hour == "19")
    assert schedule.loc[mask, "lambda_pv"].tolist() == ["0.000000"]
    schedule.loc[mask, "dr_kw"] = "8.200000"
    schedule.to_csv(tmp_path / "dr_schedule.csv", index=False, lineterminator="\n")

    assert main(["verify", REPLICA_PATH, "--out", str(tmp_path)]) == 1
    assert "Not an equilibrium" in capsys.readouterr().err
    report = read(tmp_path / "nash_report.csv")
    row = report[(report.prosumer == "residential") & (report.hour == "19")]
    assert float(row.max_improvement.iloc[0]) > 0


def test_verify_corrupt_summary(replica_run, tmp_path, capsys):
    for name in ARTIFACTS:
        (tmp_path / name).write_bytes((replica_run / name).read_bytes())
    (tmp_path / "summary.json").write_text('{"options": {"damping": ', encoding="utf-8")
    assert main(["verify", REPLICA_PATH, "--out", str(tmp_path)]) == 1
    assert "summary.json: UNREADABLE_SUMMARY" in capsys.readouterr().err


def test_verify_without_run(tmp_path):
    assert main(["verify", REPLICA_PATH, "--out", str(tmp_path)]) == 1


def test_verify_against_other_scenario(replica_run, tmp_path):
    path = write_scenario(tmp_path, small_scenario_dict())
    assert main(["verify", path, "--out", str(replica_run)]) == 1


def test_not_converged_exit_code(tmp_path):
    out = tmp_path / "out"
    assert main(["run", REPLICA_PATH, "--out", str(out), "--max-outer", "1"]) == 2
    for name in ARTIFACTS:
        assert (out / name).exists()
    assert json.loads((out / "summary.json").read_text())["converged"] is False


def test_no_pv_scenario(tmp_path):
    data = small_scenario_dict()
    for p in data["prosumers"]:
        p["pv_generation"] = 0
    out = tmp_path / "out"
    assert main(["run", write_scenario(tmp_path, data), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["provider_profit"] == 0
    assert summary["utility_profit"] == 0
    assert all(v["profit_pv"] == 0 for v in summary["prosumers"].values())


def test_solver_flags(tmp_path):
    out = tmp_path / "out"
    args = ["run", REPLICA_PATH, "--out", str(out), "--uncoupled", "--damping", "0.7", "--eps1", "0.0005", "--aggregate-convergence"]
    assert main(args) == 0
    options = json.loads((out / "summary.json").read_text())["options"]
    assert options["coupled"] is False
    assert options["damping"] == 0.7
    assert options["eps1"] == 0.0005
    assert options["aggregate_convergence"] is True


def test_invalid_solver_flag_value(tmp_path, capsys):
    assert main(["run", REPLICA_PATH, "--out", str(tmp_path), "--damping", "0"]) == 1
    assert "DAMPING_OUT_OF_RANGE" in capsys.readouterr().err


def test_unwritable_out_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    assert main(["run", REPLICA_PATH, "--out", str(blocker)]) == 1
    assert os.path.isfile(blocker)
