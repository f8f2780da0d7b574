import json
import math

import pytest

from effisplit.cli import main
from effisplit.core.errors import InfeasibleError
from effisplit.scenarios import REPORT_COLUMNS


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr().out


class TestSolveCommand:
    def test_latency(self, capsys, toy3_path):
        code, out = _run(capsys, ["solve", "--instance", toy3_path, "--objective", "latency"])
        assert code == 0
        data = json.loads(out)
        assert data["instance"] == "toy3"
        assert data["schedule"]["pattern"] == "C→M"
        assert data["schedule"]["total_cost"] == 13.5
        assert data["report"]["latency_improvement_pct"] == pytest.approx(10.0)

    def test_qos_defaults_to_energy(self, capsys, toy3_path):
        code, out = _run(capsys, ["solve", "--instance", toy3_path, "--qos", "14"])
        assert code == 0
        data = json.loads(out)
        assert data["schedule"]["objective"] == "energy"
        assert data["schedule"]["total_cost"] == 23

    def test_infeasible_battery(self, capsys, toy3_path):
        code, out = _run(capsys, ["solve", "--instance", toy3_path, "--battery", "20"])
        assert code == 1
        assert json.loads(out) == {"status": "infeasible", "min_resource": 23}

    def test_unbounded_minimum_is_valid_json(self, capsys, toy3_path, monkeypatch):
        import effisplit.cli as cli

        def unreachable(instance, spec):
            raise InfeasibleError("no schedule with finite cost exists", min_resource=math.inf)

        monkeypatch.setattr(cli, "solve_scenario", unreachable)
        code, out = _run(capsys, ["solve", "--instance", toy3_path, "--battery", "20"])
        assert code == 1
        assert "Infinity" not in out
        assert json.loads(out) == {"status": "infeasible", "min_resource": None}

    def test_invalid_objective_combination(self, capsys, toy3_path):
        code, _ = _run(
            capsys, ["solve", "--instance", toy3_path, "--objective", "latency", "--qos", "14"]
        )
        assert code == 2

    def test_missing_instance(self, capsys, tmp_path):
        code, _ = _run(capsys, ["solve", "--instance", str(tmp_path / "missing.json")])
        assert code == 2

    def test_conflicting_limits_rejected_by_parser(self, toy3_path):
        with pytest.raises(SystemExit):
            main(["solve", "--instance", toy3_path, "--battery", "1", "--qos", "1"])

    def test_csv(self, capsys, toy3_path):
        code, out = _run(capsys, ["solve", "--instance", toy3_path, "--format", "csv"])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == ",".join(REPORT_COLUMNS)
        assert "C→M" in lines[1]

    def test_training(self, capsys, toy3_path):
        code, out = _run(capsys, ["solve", "--instance", toy3_path, "--training", "--rho", "0.5"])
        assert code == 0
        data = json.loads(out)
        assert data["scenario"] == "training/latency"
        assert data["schedule"]["segments"][-1]["end"] == 6


class TestEvaluateCommand:
    def test_round_trip(self, capsys, toy3_path, tmp_path):
        schedule = tmp_path / "schedule.json"
        assert main(["solve", "--instance", toy3_path, "--out", str(schedule)]) == 0
        capsys.readouterr()
        code, out = _run(
            capsys, ["evaluate", "--instance", toy3_path, "--schedule", str(schedule)]
        )
        assert code == 0
        data = json.loads(out)
        assert data["total_cost"] == 13.5
        assert data["pattern"] == "C→M"
        assert data["breakdown"]["upload"] == 4

    def test_resource_is_reported_under_constraint(self, capsys, toy3_path, tmp_path):
        schedule = tmp_path / "schedule.json"
        main(["solve", "--instance", toy3_path, "--battery", "24", "--out", str(schedule)])
        capsys.readouterr()
        code, out = _run(
            capsys,
            ["evaluate", "--instance", toy3_path, "--battery", "24", "--schedule", str(schedule)],
        )
        assert code == 0
        assert json.loads(out)["total_resource"] == 23

    def test_wrapped_constraint_rows_are_checked(self, capsys, toy3_path, tmp_path):
        schedule = tmp_path / "schedule.json"
        main(["solve", "--instance", toy3_path, "--qos", "14", "--out", str(schedule)])
        capsys.readouterr()
        code, out = _run(
            capsys,
            ["evaluate", "--instance", toy3_path, "--qos", "14", "--schedule", str(schedule)],
        )
        assert code == 0
        data = json.loads(out)
        assert data["total_cost"] == 23
        assert data["total_resource"] == 13.5

    def test_unreadable_schedule(self, capsys, toy3_path, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("not json", encoding="utf-8")
        code, _ = _run(capsys, ["evaluate", "--instance", toy3_path, "--schedule", str(bad)])
        assert code == 2

    def test_schedule_that_does_not_tile(self, capsys, toy3_path, tmp_path):
        bad = tmp_path / "partial.json"
        bad.write_text(
            json.dumps({"segments": [{"start": 1, "end": 2, "platform": "mobile"}]}),
            encoding="utf-8",
        )
        code, _ = _run(capsys, ["evaluate", "--instance", toy3_path, "--schedule", str(bad)])
        assert code == 2


class TestExportIlpCommand:
    @staticmethod
    def _binaries(text):
        lines = text.splitlines()
        body = lines[lines.index("Binary") + 1 : lines.index("End")]
        return " ".join(body).split()

    def test_toy3(self, capsys, toy3_path):
        code, out = _run(capsys, ["export-ilp", "--instance", toy3_path])
        assert code == 0
        assert out.startswith("\\Problem name: toy3_inference_latency")
        assert len(self._binaries(out)) == 24

    def test_training(self, capsys, toy3_path):
        code, out = _run(capsys, ["export-ilp", "--instance", toy3_path, "--training", "--rho", "0.5"])
        assert code == 0
        assert len(self._binaries(out)) == 84

    def test_out_file(self, capsys, toy3_path, tmp_path):
        path = tmp_path / "model.lp"
        code, out = _run(capsys, ["export-ilp", "--instance", toy3_path, "--qos", "14", "--out", str(path)])
        assert code == 0
        assert out == ""
        assert " qos: " in path.read_text(encoding="utf-8")


class TestSweepCommand:
    def test_sweep_and_query(self, capsys, toy3_path, tmp_path):
        table = str(tmp_path / "table.json")
        code, out = _run(
            capsys,
            ["sweep", "--instance", toy3_path, "--uplink", "1.1,5.85,18.88", "--out", table],
        )
        assert code == 0
        assert json.loads(out) == {"cells": 3, "out": table}

        code, out = _run(
            capsys,
            ["sweep", "--instance", toy3_path, "--out", table, "--query", "uplink=18"],
        )
        assert code == 0
        cell = json.loads(out)
        assert cell["point"] == {"uplink_mbps": 18.88}
        assert cell["feasible"]

    def test_query_with_other_instance(self, capsys, toy3_path, tmp_path):
        table = str(tmp_path / "table.json")
        main(["sweep", "--instance", toy3_path, "--uplink", "2,4", "--out", table])
        capsys.readouterr()
        code, _ = _run(
            capsys,
            ["sweep", "--instance", toy3_path, "--batch", "2", "--out", table, "--query", "uplink=3"],
        )
        assert code == 2

    def test_query_out_of_range(self, capsys, toy3_path, tmp_path):
        table = str(tmp_path / "table.json")
        main(["sweep", "--instance", toy3_path, "--uplink", "2,4", "--out", table])
        capsys.readouterr()
        code, _ = _run(
            capsys, ["sweep", "--instance", toy3_path, "--out", table, "--query", "uplink=9"]
        )
        assert code == 2

    def test_cap(self, capsys, toy3_path):
        code, _ = _run(
            capsys, ["sweep", "--instance", toy3_path, "--uplink", "1,2,3", "--cap", "2"]
        )
        assert code == 2


class TestSynthCommand:
    def test_synth_then_solve(self, capsys, tmp_path):
        path = str(tmp_path / "a.json")
        code, _ = _run(
            capsys, ["synth", "--shape", "discriminative", "--layers", "21", "--seed", "7", "--out", path]
        )
        assert code == 0
        code, out = _run(capsys, ["solve", "--instance", path])
        assert code == 0
        assert json.loads(out)["schedule"]["pattern"] == "M→C"

    def test_output_is_reproducible(self, capsys, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        for path in (first, second):
            main(["synth", "--shape", "autoencoder", "--layers", "12", "--seed", "3", "--out", str(path)])
        assert first.read_bytes() == second.read_bytes()

    def test_invalid_arguments(self, capsys):
        assert main(["synth", "--shape", "discriminative", "--layers", "1"]) == 2
        assert main(["synth", "--shape", "pyramid", "--layers", "5"]) == 2
