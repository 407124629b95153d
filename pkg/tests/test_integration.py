"""
Tests for the experiment layer: config validation, presets, sweep planning,
batch assembly, output files and the command line.
"""

import json
import math
import os

import pandas as pd
import pytest

from app.core.batch import process_sweep_core
from app.core.exceptions import EXIT_CONFIG_ERROR, EXIT_OK, ConfigError, NumericalInvariantError
from app.core.model import initial_joint_state
from app.core.validator import ExperimentConfigValidator
from app.core.zeno import entropy_production, expected_stroke_energetics
from app.integration.evaluators import evaluate_cycle, evaluate_ensemble, evaluate_thermalization, stroke_start
from app.integration.presets import DESCRIPTIONS, PRESETS, get_preset, grid
from app.integration.schemas import ExperimentConfig
from app.integration.worker import apply_overrides, build_points, plan, run_config
from app.main import main
from app.utils import sanitize_filename

ZENO_CONFIG = """
panel = "tiny_zeno"
drive_mode = "zeno"
evaluator = "ensemble"

[params]
tau_comp = 1.0
tau_exp = 0.5
n_meas = 10
n_traj = 3
omega_L = 2.0
gamma_comp = 5.0
gamma_exp = 5.0
master_seed = 17

[[sweep]]
name = "tau_comp"
values = [1.0, 1.5]
"""

BAD_CONFIG = """
panel = "broken"

[params]
omega = 1.0
tau_comp = -1.0
"""


def _write(tmp_path, name, text) -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _read_run(out_dir, run_id):
    run_dir = os.path.join(out_dir, run_id)
    return {name: open(os.path.join(run_dir, name), "rb").read() for name in sorted(os.listdir(run_dir))}


class TestConfigValidation:
    def test_diagnostic_names_field_and_line(self, tmp_path):
        path = _write(tmp_path, "bad.toml", BAD_CONFIG)
        with pytest.raises(ConfigError) as excinfo:
            ExperimentConfigValidator(ExperimentConfig).validate_file(path)
        message = str(excinfo.value)
        assert "params.tau_comp" in message
        assert "(line 6)" in message

    def test_unknown_sweep_parameter(self):
        validator = ExperimentConfigValidator(ExperimentConfig)
        with pytest.raises(ConfigError, match="sweep"):
            validator.validate({"sweep": [{"name": "temperature", "values": [1.0]}]})

    def test_swept_and_tied_parameter(self):
        with pytest.raises(ConfigError):
            ExperimentConfigValidator(ExperimentConfig).validate(
                {
                    "sweep": [{"name": "tau_exp", "values": [1.0]}],
                    "ties": [{"name": "tau_exp", "source": "tau_comp"}],
                }
            )

    def test_isochore_stage_is_rejected(self):
        with pytest.raises(ConfigError, match="stage"):
            ExperimentConfigValidator(ExperimentConfig).validate({"stage": "hot"})

    def test_invalid_toml(self, tmp_path):
        path = _write(tmp_path, "broken.toml", "panel = \n")
        with pytest.raises(ConfigError, match="invalid TOML"):
            ExperimentConfigValidator(ExperimentConfig).validate_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            ExperimentConfigValidator(ExperimentConfig).validate_file(str(tmp_path / "nope.toml"))

    def test_manifest_entry_validates_back(self):
        cfg = ExperimentConfig(panel="p", sweep=[{"name": "gamma", "values": [1.0, 2.0]}])
        assert ExperimentConfig.model_validate(cfg.manifest_entry()) == cfg


class TestSweepPlanning:
    def test_cartesian_product_first_axis_outermost(self):
        cfg = ExperimentConfig(
            sweep=[{"name": "gamma", "values": [1.0, 2.0]}, {"name": "tau_comp", "values": [3.0, 4.0, 5.0]}]
        )
        points, coordinates = build_points(cfg)
        assert [p.index for p in points] == list(range(6))
        assert [(c["gamma"], c["tau_comp"]) for c in coordinates] == [
            (1.0, 3.0), (1.0, 4.0), (1.0, 5.0), (2.0, 3.0), (2.0, 4.0), (2.0, 5.0)
        ]
        assert points[4].params.gamma_exp == 2.0

    def test_ties_follow_their_source(self):
        cfg = ExperimentConfig(
            sweep=[{"name": "tau_comp", "values": [4.0, 8.0]}],
            ties=[{"name": "tau_exp", "source": "tau_comp", "factor": 0.5}],
        )
        points, coordinates = build_points(cfg)
        assert [p.params.tau_exp for p in points] == [2.0, 4.0]
        assert coordinates[1] == {"tau_comp": 8.0, "tau_exp": 4.0}

    def test_no_sweep_is_a_single_point(self):
        points, coordinates = build_points(ExperimentConfig())
        assert len(points) == 1
        assert coordinates == [{}]

    def test_invalid_point_names_panel_and_index(self):
        cfg = ExperimentConfig(panel="edge", sweep=[{"name": "tau_comp", "values": [1.0, 0.0]}])
        with pytest.raises(ConfigError, match="'edge', point 1"):
            build_points(cfg)

    def test_panel_names_must_be_unique(self):
        with pytest.raises(ConfigError, match="unique"):
            plan([ExperimentConfig(panel="a"), ExperimentConfig(panel="a")])


class TestPresets:
    @pytest.mark.parametrize("preset_id", list(PRESETS))
    def test_desk_profile_plans(self, preset_id):
        panels = get_preset(preset_id, "desk")
        assert panels
        assert all(p.preset == preset_id and p.profile == "desk" for p in panels)
        assert plan(panels) >= 1

    def test_full_profile_is_denser(self):
        assert plan(get_preset("fig3", "full")) > plan(get_preset("fig3", "desk"))

    def test_every_preset_is_described(self):
        assert set(DESCRIPTIONS) == set(PRESETS)

    def test_unknown_preset_or_profile(self):
        with pytest.raises(ConfigError, match="Unknown preset"):
            get_preset("nope")
        with pytest.raises(ConfigError, match="Unknown profile"):
            get_preset("fig3", "huge")

    def test_grid_is_inclusive(self):
        assert grid(0.5, 2.0, 0.5) == [0.5, 1.0, 1.5, 2.0]

    def test_overrides_apply_to_every_panel(self):
        panels = get_preset("fig11", "desk")
        cfg = ExperimentConfig.model_validate({"preset": "fig11", "params": {"n_meas": 50}})
        overridden = apply_overrides(panels, cfg)
        assert [p.params.n_meas for p in overridden] == [50] * len(panels)
        assert [p.params.gamma_comp for p in overridden] == [p.params.gamma_comp for p in panels]

    def test_no_overrides_keeps_panels(self):
        panels = get_preset("bound", "desk")
        assert apply_overrides(panels, ExperimentConfig(preset="bound")) is panels


def _ok(task):
    return [{"value": task * 2}], None


def _failing(task):
    if task == 1:
        return [], NumericalInvariantError("trace drifted")
    return [{"value": task}, {"value": -task}], None


class TestEvaluators:
    @pytest.mark.parametrize("profile", ["desk", "full"])
    def test_fitted_relaxation_rate_matches_gap(self, profile):
        """The trace distance to the Gibbs state decays at λ_gap = γ(2n̄+1)/2 for both baths."""
        points, _ = build_points(get_preset("thermalization", profile)[0])
        for point in points:
            rows = evaluate_thermalization(point)
            assert [row["bath"] for row in rows] == ["hot", "cold"]
            for row in rows:
                assert row["relative_error"] < 0.05
                assert row["r_squared"] > 0.99
                assert row["tau_estimate"] == pytest.approx(1.0 / row["lambda_gap"])

    @pytest.mark.slow
    def test_weak_bath_power_signs(self):
        """Lubricated power is positive at every τ_hot, and above the bare power at the same point."""
        bare_panel, zeno_panel = get_preset("fig10", "desk")
        bare_points, _ = build_points(bare_panel)
        zeno_points, _ = build_points(zeno_panel)
        for bare_point, zeno_point in zip(bare_points, zeno_points):
            bare = evaluate_cycle(bare_point)[0]
            zeno = evaluate_cycle(zeno_point)[0]
            assert zeno["power"] > 0
            assert bare["power"] < zeno["power"]
            assert abs(bare["W_tot"]) < 0.5 * abs(zeno["W_tot"])

    def test_sigma_exact_takes_the_first_outcome_marginal(self):
        cfg = ExperimentConfig.model_validate(
            {"drive_mode": "zeno", "evaluator": "ensemble", "params": {"n_meas": 30, "n_traj": 2, "omega_L": 3.0}}
        )
        point = build_points(cfg)[0][0]
        row = evaluate_ensemble(point)[0]
        p = point.params
        rho = initial_joint_state(stroke_start(p, point.stage), p)
        exact = expected_stroke_energetics(p, point.stage, rho, point.basis, point.settings)
        first, last = exact.first_outcome_marginal["+"], exact.last_outcome_marginal["+"]
        assert first < 1.0
        assert row["sigma_exact"] == pytest.approx(math.log(first / last))
        assert row["sigma_exact"] == pytest.approx(entropy_production(last) + math.log(first))

    def test_fig7_stays_in_dense_monitoring(self):
        for profile in ("desk", "full"):
            points, _ = build_points(get_preset("fig7", profile)[0])
            assert all(p.params.gamma_comp * p.params.tau_comp / p.params.n_meas <= 0.5 for p in points)


class TestBatch:
    def test_rows_keep_sweep_order(self):
        result = process_sweep_core("p", [0, 1, 2], [{"x": 0.0}, {"x": 1.0}, {"x": 2.0}], _ok)
        table = result["table"]
        assert list(table["point"]) == [0, 1, 2]
        assert list(table["value"]) == [0, 2, 4]
        assert set(table["status"]) == {"ok"}
        assert result["first_numerical_error"] is None

    def test_failing_point_becomes_an_error_row(self):
        messages = []
        result = process_sweep_core(
            "p", [0, 1, 2], [{"x": 0.0}, {"x": 1.0}, {"x": 2.0}], _failing, log_callback=messages.append
        )
        table = result["table"]
        assert list(table["point"]) == [0, 0, 1, 2, 2]
        failed = table[table["status"] == "error"]
        assert list(failed["error"]) == ["trace drifted"]
        assert result["failed_points"] == 1
        assert isinstance(result["first_numerical_error"], NumericalInvariantError)
        assert any("point 1" in m for m in messages)


class TestUtils:
    @pytest.mark.parametrize(
        "raw, clean",
        [("fig3", "fig3"), ("../etc/passwd", "etcpasswd"), ("a b:c", "abc"), ("...", "run"), ("sweep-1.v2", "sweep-1.v2")],
    )
    def test_sanitize_filename(self, raw, clean):
        assert sanitize_filename(raw) == clean


class TestRunConfig:
    def test_validate_only_writes_nothing(self, tmp_path, out_dir):
        path = _write(tmp_path, "tiny.toml", ZENO_CONFIG)
        assert run_config(path, out_dir=out_dir, validate_only=True) is None
        assert os.listdir(out_dir) == []

    def test_outputs_do_not_depend_on_worker_count(self, tmp_path):
        path = _write(tmp_path, "tiny.toml", ZENO_CONFIG)
        serial_dir, parallel_dir = str(tmp_path / "serial"), str(tmp_path / "parallel")
        run_config(path, out_dir=serial_dir, workers=1)
        run_config(path, out_dir=parallel_dir, workers=2)
        serial, parallel = _read_run(serial_dir, "tiny"), _read_run(parallel_dir, "tiny")
        assert set(serial) == {"tiny_zeno.csv", "manifest.json"}
        assert serial == parallel

    def test_panel_table_and_manifest(self, tmp_path, out_dir):
        path = _write(tmp_path, "tiny.toml", ZENO_CONFIG)
        result = run_config(path, out_dir=out_dir)
        table = result.panels["tiny_zeno"]
        assert list(table["tau_comp"]) == [1.0, 1.5]
        assert set(table["status"]) == {"ok"}
        on_disk = pd.read_csv(os.path.join(out_dir, "tiny", "tiny_zeno.csv"))
        assert list(on_disk.columns) == list(table.columns)

        with open(os.path.join(out_dir, "tiny", "manifest.json"), encoding="utf-8") as f:
            manifest = json.load(f)
        assert manifest["master_seed"] == 17
        assert manifest["rows"] == {"tiny_zeno": 2}
        resolved = ExperimentConfig.model_validate(manifest["configs"]["tiny_zeno"])
        assert resolved.params.n_traj == 3

    def test_seed_override(self, tmp_path, out_dir):
        path = _write(tmp_path, "tiny.toml", ZENO_CONFIG)
        result = run_config(path, seed=5, out_dir=out_dir)
        assert result.manifest["master_seed"] == 5
        assert result.manifest["configs"]["tiny_zeno"]["params"]["master_seed"] == 5


class TestCommandLine:
    def test_list_presets(self, capsys):
        assert main(["run", "--list-presets"]) == EXIT_OK
        listed = capsys.readouterr().out
        assert all(preset_id in listed for preset_id in PRESETS)

    def test_unknown_preset(self):
        assert main(["run", "--preset", "nope"]) == EXIT_CONFIG_ERROR

    def test_invalid_config(self, tmp_path):
        path = _write(tmp_path, "bad.toml", BAD_CONFIG)
        assert main(["run", "--config", path]) == EXIT_CONFIG_ERROR

    def test_validate_only_preset(self, out_dir):
        assert main(["run", "--preset", "fig4", "--validate-only", "--out", out_dir]) == EXIT_OK
        assert os.listdir(out_dir) == []

    def test_seed_must_be_unsigned(self):
        with pytest.raises(SystemExit):
            main(["run", "--preset", "fig3", "--seed", "-1"])
