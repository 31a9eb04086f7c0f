import json
import subprocess
import sys
from pathlib import Path

import pytest

from orbituse import HIDEB, OverrideError, ScenarioValidationError
from orbituse.cli import main
from orbituse.reporting import dump_bundle, load_scenario

FIXTURE = Path(__file__).resolve().parent.parent / "scenarios" / "sym2.json"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestLoadScenario:
    def test_fixture_round_trip(self, tmp_path):
        bundle = load_scenario(FIXTURE)
        assert bundle.taxes.rates == ((0.0, 0.0), (0.0, 0.0))
        assert bundle.abatement == 0.0
        echo = tmp_path / "echo.json"
        echo.write_text(json.dumps(dump_bundle(bundle)))
        reloaded = load_scenario(echo)
        assert reloaded.scenario == bundle.scenario
        assert reloaded.taxes == bundle.taxes
        assert reloaded.abatement == bundle.abatement

    def test_round_trip_preserves_full_float_precision(self, tmp_path):
        bundle = load_scenario(FIXTURE, ["scenario.k=0.30000000000000004"])
        echo = tmp_path / "echo.json"
        echo.write_text(json.dumps(dump_bundle(bundle)))
        assert load_scenario(echo).scenario.collision_coeff == 0.30000000000000004

    def test_legacy_debris_override_builds_hideb(self):
        bundle = load_scenario(FIXTURE, ["scenario.D0=5"])
        assert bundle.scenario == HIDEB

    def test_tax_override_is_one_based(self):
        bundle = load_scenario(FIXTURE, ["tax.1.2=0.5"])
        assert bundle.taxes.rate(0, 1) == 0.5
        assert bundle.taxes.rate(0, 0) == 0.0

    def test_vector_length_mismatch_names_the_field(self, tmp_path):
        data = json.loads(FIXTURE.read_text())
        data["scenario"]["costs"] = [1.0]
        broken = tmp_path / "broken.json"
        broken.write_text(json.dumps(data))
        with pytest.raises(ScenarioValidationError) as exc:
            load_scenario(broken)
        assert any("costs" in line for line in exc.value.violations)

    def test_unknown_override_key(self):
        with pytest.raises(OverrideError):
            load_scenario(FIXTURE, ["scenario.nonsense=1"])
        with pytest.raises(OverrideError):
            load_scenario(FIXTURE, ["bogus=1"])


class TestCommands:
    def test_solve_reports_reference_numbers(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--scenario", str(FIXTURE))
        assert code == 0
        report = json.loads(out)
        assert report["fleets"] == pytest.approx([10.0 / 7.0] * 2, abs=1e-9)
        assert report["debris"]["stock"] == pytest.approx(20.0 / 7.0, abs=1e-9)
        assert report["welfare"] == pytest.approx([100.0 / 49.0] * 2, abs=1e-9)

    def test_solve_csv_single_row(self, capsys):
        code, out, _ = run_cli(
            capsys, "solve", "--scenario", str(FIXTURE), "--format", "csv"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 2
        assert "fleets.0" in lines[0]

    def test_validation_failure_exits_2(self, capsys, tmp_path):
        data = json.loads(FIXTURE.read_text())
        data["scenario"]["costs"] = [0.0, 1.0]
        broken = tmp_path / "broken.json"
        broken.write_text(json.dumps(data))
        code, _, err = run_cli(capsys, "solve", "--scenario", str(broken))
        assert code == 2
        payload = json.loads(err)
        assert payload["error"] == "ScenarioValidationError"
        assert any("costs" in v for v in payload["violations"])

    def test_strict_assumption_violation_exits_4(self, capsys):
        code, _, err = run_cli(
            capsys,
            "solve",
            "--scenario",
            str(FIXTURE),
            "--set",
            "scenario.k=0.6",
            "--strict",
        )
        assert code == 4
        assert json.loads(err)["error"] == "AssumptionViolation"

    def test_regulate_converges(self, capsys):
        code, out, _ = run_cli(capsys, "regulate", "--scenario", str(FIXTURE))
        assert code == 0
        report = json.loads(out)
        assert report["converged"]
        assert report["max_update"] < 1e-8

    def test_treaty_emits_divergence(self, capsys):
        code, out, _ = run_cli(capsys, "treaty", "--scenario", str(FIXTURE))
        assert code == 0
        report = json.loads(out)
        assert report["qbar_responsive"] == pytest.approx(1.2, abs=1e-9)
        divergence = report["divergence"][0]
        assert divergence["model"]["alpha"] == pytest.approx(20.0 / 49.0, abs=1e-9)
        assert divergence["closed_form"]["alpha"] == pytest.approx(125.0 / 630.0, abs=1e-9)
        assert not divergence["agree"]
        assert "model-derived" in report["variants"]
        assert "closed-form" in report["variants"]

    def test_sweep_is_deterministic(self, capsys, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        for target in (first, second):
            code, _, _ = run_cli(
                capsys,
                "sweep",
                "--scenario",
                str(FIXTURE),
                "--sweep",
                "scenario.D0:0:4:5",
                "--format",
                "csv",
                "--out",
                str(target),
            )
            assert code == 0
        assert first.read_bytes() == second.read_bytes()

    def test_sweep_rows_track_the_axis(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "sweep",
            "--scenario",
            str(FIXTURE),
            "--sweep",
            "scenario.D0:0:4:5",
        )
        assert code == 0
        rows = json.loads(out)
        assert [row["scenario.D0"] for row in rows] == [0.0, 1.0, 2.0, 3.0, 4.0]
        assert rows[0]["qbar_responsive"] == pytest.approx(1.2, abs=1e-9)

    def test_verify_passes_on_reference_fixture(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "verify",
            "--scenario",
            str(FIXTURE),
            "--seed",
            "42",
            "--random-count",
            "8",
        )
        assert code == 0
        digest_lines = [line for line in out.splitlines() if line.startswith(("PASS", "FAIL"))]
        assert len(digest_lines) == 9
        assert all(line.startswith("PASS") for line in digest_lines)

    def test_module_entry_point(self):
        result = subprocess.run(
            [sys.executable, "-m", "orbituse", "solve", "--scenario", str(FIXTURE)],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert json.loads(result.stdout)["fleets"]
