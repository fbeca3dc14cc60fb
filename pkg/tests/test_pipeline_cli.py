"""
End-to-end: run(config) and the typer front end with its exit codes.
"""

import json
import math
from pathlib import Path

import pytest
from pytest import approx
from typer.testing import CliRunner

from src.speccoc import pipeline
from src.speccoc.cli import app
from src.speccoc.errors import PreconditionError
from src.speccoc.models import RunConfig
from src.speccoc.pipeline import run
from src.speccoc.spectral_measure import GRFit

ROOT = Path(__file__).resolve().parent.parent
SAMPLES = ROOT / "data" / "sample"

runner = CliRunner()


def _config(directive=None, **analysis):
    doc = {"analysis": analysis}
    if directive is not None:
        doc["directive"] = directive
    return doc


def _run(doc):
    return run(RunConfig.model_validate(doc))


FIB = {"type": "periodic", "subs": ["fibonacci"]}


class TestPipeline:
    def test_lyapunov_at_zero_is_lambda_hat(self):
        rec = _run(_config(FIB, command="lyapunov", xi=[0.0, 0.0], n=20))
        assert rec.exit_code == 0
        assert rec.outputs["chi"] == approx(rec.outputs["lambda_hat"], abs=1e-12)
        assert len(rec.rows) == 20
        assert rec.inputs["analysis"]["n"] == 20
        assert "numpy" in rec.versions

    def test_lyapunov_along_omega_is_seeded(self):
        doc = _config(FIB, command="lyapunov", omega=0.7, n=30, seed=4)
        doc["suspension"] = {"s": [1.0, 1.0]}
        one, two = _run(doc), _run(doc)
        assert one.outputs == two.outputs
        assert math.isfinite(one.outputs["chi"])

    def test_lyapunov_rejects_wrong_xi_length(self):
        with pytest.raises(PreconditionError):
            _run(_config(FIB, command="lyapunov", xi=[0.1, 0.2, 0.3], n=5))

    def test_dimension_rows(self):
        doc = _config(FIB, command="dimension", omega_grid=[0.1, 0.5, 1.3], n=15, seed=1)
        doc["suspension"] = {"self_similar": True}
        doc["function"] = {"b": ["1", "-1"]}
        rec = _run(doc)
        assert [r["omega"] for r in rec.rows] == [0.1, 0.5, 1.3]
        assert set(rec.outputs["regimes"]) <= {"formula", "clamped_ge_2", "degenerate"}
        assert "level_shift_difference" not in rec.outputs

    def test_dimension_at_level_reports_crosscheck(self):
        doc = _config(FIB, command="dimension", omega=0.3, n=10, seed=2)
        doc["suspension"] = {"level": 2}
        doc["function"] = {"b": ["1", "-1"]}
        rec = _run(doc)
        assert rec.outputs["level"] == 2
        assert rec.outputs["level_shift_difference"] < 1e-8

    def test_dimension_at_zero_with_unequal_roof(self):
        doc = _config(FIB, command="dimension", omega_grid=[0.0, 0.4], n=20, seed=1)
        doc["suspension"] = {"s": [2.0, 1.0]}
        doc["function"] = {"b": ["1", "0.5"]}
        rec = _run(doc)
        assert rec.rows[0]["omega"] == 0.0
        assert rec.rows[0]["d"] == 0.0

    def test_dimension_passes_depth(self, monkeypatch):
        seen = []
        real = pipeline.dimension_scan

        def spy(*args, **kwargs):
            seen.append(args[8] if len(args) > 8 else kwargs["depth"])
            return real(*args, **kwargs)

        monkeypatch.setattr(pipeline, "dimension_scan", spy)
        _run(_config(FIB, command="dimension", omega=0.3, n=8, seed=1, depth=17))
        assert seen == [17]

    def test_self_similar_needs_single_substitution(self):
        doc = _config(
            {"type": "periodic", "subs": ["fibonacci", "fibonacci"]},
            command="dimension", omega=0.3, n=5, seed=1,
        )
        doc["suspension"] = {"self_similar": True}
        with pytest.raises(PreconditionError):
            _run(doc)

    def test_singularity(self):
        doc = _config({"type": "periodic", "subs": ["thue_morse"]},
                      command="singularity", omega_grid=[0.0, 0.3, 0.7], n=30, seed=3)
        rec = _run(doc)
        assert rec.outputs["excluded"] == 1
        assert len(rec.rows) == 2
        assert rec.outputs["half_log_theta"] == approx(0.5 * math.log(2))

    def test_gr(self):
        doc = _config(FIB, command="gr", omega=0.3, R_list=[5, 10, 20], samples=10, seed=2)
        doc["suspension"] = {"s": [1.0, 1.0]}
        doc["function"] = {"kind": "lipschitz", "profile_path": str(SAMPLES / "tent_profiles.csv")}
        rec = _run(doc)
        assert rec.exit_code == 0
        assert [r["R"] for r in rec.rows] == [5.0, 10.0, 20.0]
        assert rec.outputs["ball_radius"] == approx(1 / 40)
        assert rec.outputs["taper"] == "hann"

    def test_gr_ball_bound_uses_fejer_estimate(self):
        def doc(taper):
            d = _config(FIB, command="gr", omega=0.3, R_list=[5, 10, 20], samples=10, seed=2, taper=taper)
            d["suspension"] = {"s": [1.0, 1.0]}
            d["function"] = {"b": ["1", "-1"]}
            return d

        fejer, hann = _run(doc("fejer")), _run(doc("hann"))
        assert fejer.outputs["ball_bound"] == approx(math.pi ** 2 * fejer.rows[-1]["G_R"] / 80)
        assert hann.outputs["taper"] == "hann"
        assert hann.outputs["ball_bound"] > 0
        assert hann.outputs["ball_radius"] == fejer.outputs["ball_radius"]

    def test_failed_gr_fit_marks_record(self, monkeypatch):
        failed = GRFit(math.nan, math.nan, math.nan, math.nan, (5.0, 10.0, 20.0), (0.0, 0.1, 0.2), failed=True)
        monkeypatch.setattr(pipeline, "dim_via_GR", lambda *args, **kwargs: failed)
        doc = _config(FIB, command="gr", omega=0.3, R_list=[5, 10, 20], samples=10, seed=2)
        rec = _run(doc)
        assert rec.exit_code == 3
        assert rec.outputs["failed"] is True

    def test_rauzy(self):
        directive = {"type": "rauzy", "perm": [4, 3, 2, 1], "random_seed": 3}
        rec = _run(_config(directive, command="rauzy", steps=6, rauzy_class=True))
        assert rec.outputs["class_size"] == 7
        assert rec.outputs["reconstruction_error"] < 1e-9
        assert len(rec.outputs["moves"]) == 6
        assert all(abs(r["det"]) == 1 for r in rec.rows)

    def test_verify_fixture_failure(self):
        rec = _run(_config(command="verify", suite="identities", fixtures=["1:1;2:1"], seed=0))
        assert rec.exit_code == 4
        assert "class-A" in rec.outputs["failed"]


class TestCli:
    def test_lyapunov_json_out(self, tmp_path):
        out = tmp_path / "chi.json"
        result = runner.invoke(
            app, ["lyapunov", "--sub", "fibonacci", "--xi", "0,0", "--n", "12", "--json-out", str(out)]
        )
        assert result.exit_code == 0
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert doc["command"] == "lyapunov"
        assert doc["outputs"]["chi"] == approx(doc["outputs"]["lambda_hat"], abs=1e-12)

    def test_invalid_config_exits_1(self):
        result = runner.invoke(app, ["lyapunov", "--sub", "fibonacci", "--n", "5"])
        assert result.exit_code == 1

    def test_malformed_flag_exits_1(self):
        result = runner.invoke(app, ["dimension", "--sub", "fibonacci", "--omega-grid", "1:2", "--seed", "1"])
        assert result.exit_code == 1

    def test_unreadable_config_exits_1(self, tmp_path):
        result = runner.invoke(app, ["run", "--config", str(tmp_path / "missing.yaml")])
        assert result.exit_code == 1

    def test_precondition_exits_2(self):
        result = runner.invoke(app, ["lyapunov", "--sub", "fibonacci", "--xi", "0.1,0.2,0.3", "--n", "5"])
        assert result.exit_code == 2

    def test_draw_exits_2(self):
        result = runner.invoke(app, ["rauzy", "--perm", "2,1", "--lambda", "0.5,0.5", "--steps", "3"])
        assert result.exit_code == 2

    def test_verify_failure_exits_4(self, tmp_path):
        result = runner.invoke(
            app,
            ["verify", "--suite", "identities", "--fixture", "1:1;2:1", "--json-out", str(tmp_path / "v.json")],
        )
        assert result.exit_code == 4

    def test_csv_is_reproducible(self, tmp_path):
        args = ["dimension", "--sub", "fibonacci", "--omega-grid", "0.1:1.0:4", "--function", "simple:1,-1",
                "--n", "12", "--seed", "3", "--json-out", str(tmp_path / "d.json")]
        first = runner.invoke(app, args + ["--threads", "1", "--csv-out", str(tmp_path / "a.csv")])
        second = runner.invoke(app, args + ["--threads", "3", "--csv-out", str(tmp_path / "b.csv")])
        assert first.exit_code == second.exit_code == 0
        a = (tmp_path / "a.csv").read_bytes()
        assert a == (tmp_path / "b.csv").read_bytes()
        assert a.decode("utf-8").splitlines()[0] == "omega,chi,lambda,d,regime,flag"

    def test_dimension_table_on_stdout(self):
        result = runner.invoke(
            app, ["dimension", "--sub", "fibonacci", "--omega-grid", "0.1,0.5", "--n", "8", "--seed", "1"]
        )
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "omega,chi,lambda,d,regime,flag"
        assert [float(line.split(",")[0]) for line in lines[1:3]] == [0.1, 0.5]
        assert '"command"' not in result.stdout

    def test_gr_table_on_stdout(self):
        result = runner.invoke(
            app,
            ["gr", "--sub", "fibonacci", "--omega", "0.3", "--R-list", "5,10,20", "--samples", "4",
             "--s", "1,1", "--seed", "2"],
        )
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "R,G_R"
        assert [float(line.split(",")[0]) for line in lines[1:4]] == [5.0, 10.0, 20.0]

    def test_dimension_json_out_keeps_table_on_stdout(self, tmp_path):
        out = tmp_path / "d.json"
        result = runner.invoke(
            app,
            ["dimension", "--sub", "fibonacci", "--omega", "0.3", "--n", "8", "--seed", "1", "--json-out", str(out)],
        )
        assert result.exit_code == 0
        assert result.stdout.splitlines()[0] == "omega,chi,lambda,d,regime,flag"
        assert json.loads(out.read_text(encoding="utf-8"))["command"] == "dimension"

    def test_missing_profile_exits_1(self, tmp_path):
        result = runner.invoke(
            app,
            ["gr", "--sub", "fibonacci", "--omega", "0.3", "--R-list", "5,10,20", "--samples", "4",
             "--s", "1,1", "--function", f"lipschitz:{tmp_path / 'absent.csv'}"],
        )
        assert result.exit_code == 1
        assert not isinstance(result.exception, OSError)

    def test_run_sample_config(self, tmp_path):
        result = runner.invoke(
            app,
            ["run", "--config", str(SAMPLES / "rauzy_m4.yaml"), "--json-out", str(tmp_path / "r.json")],
        )
        assert result.exit_code == 0
        doc = json.loads((tmp_path / "r.json").read_text(encoding="utf-8"))
        assert doc["outputs"]["class_size"] == 7
        assert doc["outputs"]["accel"] == "zorich"
