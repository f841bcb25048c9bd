import json

import pytest
from click.testing import CliRunner

from dualdose.cli import main
from dualdose.core import (
    DoseGrid,
    TrialState,
    PatientRecord,
    NO_EVENT,
    observed_yes,
    state_to_json,
)


@pytest.fixture
def runner():
    return CliRunner()


def write_trial(tmp_path, patients, level=1, clock=100.0,
                design="tite-boin-dc"):
    state = TrialState(grid=DoseGrid.equally_spaced(5), patients=patients,
                       current_level=level, clock=clock)
    doc = {"config": {"design": design}, "state": state_to_json(state)}
    path = tmp_path / "trial.json"
    path.write_text(json.dumps(doc))
    return str(path)


def resolved(pid, level, dlt=False, intol=False):
    return PatientRecord(
        id=pid, dose_level=level, enroll_time=0.0,
        dlt=observed_yes(5.0) if dlt else NO_EVENT,
        intolerance=observed_yes(30.0) if intol else NO_EVENT)


class TestSimulate:
    def test_writes_json_and_csv(self, runner, tmp_path):
        prefix = str(tmp_path / "out")
        result = runner.invoke(main, [
            "simulate", "--scenario", "scenario1", "--design", "boin",
            "--reps", "5", "--seed", "7", "--out-prefix", prefix])
        assert result.exit_code == 0, result.output
        doc = json.loads((tmp_path / "out.json").read_text())
        assert doc["design"] == "boin"
        assert doc["seed"] == 7
        assert len(doc["selection_pct"]) == 5
        assert (tmp_path / "out.csv").read_text().startswith("metric")

    def test_seed_makes_output_byte_stable(self, runner, tmp_path):
        args = ["simulate", "--scenario", "scenario1", "--design", "boin-dc",
                "--reps", "5", "--seed", "3", "--out-prefix"]
        runner.invoke(main, args + [str(tmp_path / "a")])
        runner.invoke(main, args + [str(tmp_path / "b")])
        assert (tmp_path / "a.json").read_bytes() == (
            tmp_path / "b.json").read_bytes()
        assert (tmp_path / "a.csv").read_bytes() == (
            tmp_path / "b.csv").read_bytes()

    def test_scenario_file_input(self, runner, tmp_path):
        from dualdose.simulate import load_scenario
        path = tmp_path / "s.json"
        path.write_text(json.dumps(load_scenario("scenario4").to_json()))
        result = runner.invoke(main, [
            "simulate", "--scenario", str(path), "--design", "boin",
            "--reps", "3", "--seed", "0"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["scenario"]["name"] == "scenario4"

    def test_zero_reps_is_usage_error(self, runner):
        result = runner.invoke(main, [
            "simulate", "--scenario", "scenario1", "--reps", "0"])
        assert result.exit_code != 0

    def test_malformed_scenario_is_usage_error(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        result = runner.invoke(main, [
            "simulate", "--scenario", str(path), "--reps", "2"])
        assert result.exit_code != 0
        assert "cannot load scenario" in result.output

    def test_env_seed_default(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("DUALDOSE_SEED", "11")
        result = runner.invoke(main, [
            "simulate", "--scenario", "scenario1", "--design", "boin",
            "--reps", "2"])
        assert result.exit_code == 0
        assert json.loads(result.output)["seed"] == 11


class TestDecide:
    def test_clean_cohort_escalates(self, runner, tmp_path):
        path = write_trial(tmp_path, [resolved(f"p{i}", 1) for i in range(3)])
        result = runner.invoke(main, ["decide", "--trial", path])
        assert result.exit_code == 0, result.output
        out = json.loads(result.output)
        assert out["action"] == "escalate"
        assert out["next_level"] == 2

    def test_all_dlts_terminate_at_floor(self, runner, tmp_path):
        path = write_trial(
            tmp_path, [resolved(f"p{i}", 1, dlt=True) for i in range(3)])
        result = runner.invoke(main, ["decide", "--trial", path])
        out = json.loads(result.output)
        assert out["action"] == "terminate"
        assert out["eliminated"] == [True] * 5

    def test_pending_ratio_suspends(self, runner, tmp_path):
        pending = [PatientRecord(id=f"q{i}", dose_level=1, enroll_time=95.0)
                   for i in range(2)]
        done = [resolved(f"p{i}", 1) for i in range(2)]
        path = write_trial(tmp_path, done + pending)
        result = runner.invoke(main, ["decide", "--trial", path])
        out = json.loads(result.output)
        assert out["action"] == "suspend"
        # counts are endpoint observations: two per patient
        assert out["rationale"] == {"pending": 4, "resolved": 4}

    def test_model_based_decision_reports_mc_error(self, runner, tmp_path):
        path = write_trial(tmp_path, [resolved(f"p{i}", 1) for i in range(3)],
                           design="tite-dc")
        result = runner.invoke(main, [
            "decide", "--trial", path, "--draws", "200", "--burn-in", "100",
            "--seed", "0"])
        assert result.exit_code == 0, result.output
        out = json.loads(result.output)
        assert out["action"] in ("escalate", "stay", "de-escalate")
        assert "mc_standard_error_scale" in out["rationale"]

    def test_invalid_state_is_usage_error(self, runner, tmp_path):
        path = tmp_path / "trial.json"
        path.write_text(json.dumps({"config": {}, "state": {"grid": []}}))
        result = runner.invoke(main, ["decide", "--trial", str(path)])
        assert result.exit_code != 0
        assert "invalid trial state" in result.output


class TestBoundaries:
    def test_csv_table(self, runner):
        result = runner.invoke(main, ["boundaries", "--max-n", "3"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0].split(",")[:3] == ["endpoint", "n_treated", "n_events"]
        # both endpoints, n = 1..3, m = 0..n -> 2 * (2 + 3 + 4) rows
        assert len(lines) == 1 + 18

    def test_markdown_table(self, runner):
        result = runner.invoke(main, [
            "boundaries", "--format", "markdown", "--max-n", "2"])
        assert result.exit_code == 0
        assert result.output.startswith("| endpoint |")

    def test_bad_target_is_usage_error(self, runner):
        result = runner.invoke(main, ["boundaries", "--phi-t", "1.5"])
        assert result.exit_code != 0


class TestSensitivity:
    def test_report_written(self, runner, tmp_path):
        out = tmp_path / "sens.json"
        result = runner.invoke(main, [
            "sensitivity", "--scenario", "scenario2", "--design", "boin",
            "--reps", "3", "--seed", "0",
            "--weights", "1/3,1/3,1/3", "--weights", "8/10,1/10,1/10",
            "--accrual-rates", "0.1,0.2", "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads(out.read_text())
        assert len(report) == 4

    def test_bad_weights_rejected(self, runner):
        result = runner.invoke(main, [
            "sensitivity", "--scenario", "scenario2", "--reps", "2",
            "--weights", "1,2"])
        assert result.exit_code != 0

    def test_bad_accrual_rejected(self, runner):
        result = runner.invoke(main, [
            "sensitivity", "--scenario", "scenario2", "--reps", "2",
            "--accrual-rates", "fast"])
        assert result.exit_code != 0


class TestScenarios:
    def test_lists_all_builtins(self, runner):
        result = runner.invoke(main, ["scenarios"])
        assert result.exit_code == 0
        assert len(result.output.strip().splitlines()) == 11
        assert "scenario1" in result.output
