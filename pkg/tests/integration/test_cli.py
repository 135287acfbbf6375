import importlib
import json
from pathlib import Path

import pytest

from wienervar.core.config import settings
from wienervar.main import main
from wienervar.services.bl_appendix import certify_conditions
from wienervar.services.experiment_runner import experiment_runner

runner_module = importlib.import_module("wienervar.services.experiment_runner")

ACCEPTANCE_DIR = Path(__file__).resolve().parents[2] / "acceptance"

SMALL_LHS = {
    "kind": "estimate-lhs",
    "experiment_id": "small-lhs",
    "seed": 21,
    "n_paths": 10_000,
    "grid": {"n_steps": 8},
    # no closed form, so the run carries no statistical check
    "functional": {"kind": "polynomial-terminal", "coefficients": [0.0, 1.0, -0.1]},
}

CERTIFY = {
    "kind": "bl-certify",
    "experiment_id": "certify-dw",
    "potential": {"kind": "double_well", "alpha": 5.0, "beta": 2.0},
    "expect_certified": True,
}

MOMENTS = {
    "kind": "bl-moments",
    "experiment_id": "moments-convex",
    "potential": {"kind": "polynomial", "coefficients": [0.0, 0.0, 0.5]},
    "psi": ["z2", "z4"],
    "expect_lhs": {"z2": 0.5, "z4": 0.75},
}


def run(out_dir, *args) -> int:
    return main(["--out", str(out_dir), "--log-level", "WARNING", *args])


def test_run_writes_a_record(write_config, out_dir):
    assert run(out_dir, "run", str(write_config(MOMENTS))) == 0
    record = json.loads((out_dir / "moments-convex" / "record.json").read_text(encoding="utf-8"))
    assert record["verdict"] == "pass"
    assert record["exit_code"] == 0
    assert (out_dir / "moments-convex" / "estimates.csv").exists()


def test_wrong_expectation_exits_with_violation(write_config, out_dir):
    config = {**MOMENTS, "expect_lhs": {"z2": 0.25}}
    assert run(out_dir, "run", str(write_config(config))) == 1
    record = json.loads((out_dir / "moments-convex" / "record.json").read_text(encoding="utf-8"))
    assert record["verdict"] == "fail"


def test_strict_inequality_violation_exits_with_violation(write_config, out_dir, monkeypatch):
    monkeypatch.setattr(
        runner_module,
        "certify_conditions",
        lambda p: certify_conditions(p).model_copy(update={"cond_inf2_holds": True}),
    )
    config = {
        "kind": "bl-moments",
        "experiment_id": "moments-wide",
        "potential": {"kind": "polynomial", "coefficients": [0.0, 0.0, -0.25]},
        "expect": {"strict": True},
    }
    assert run(out_dir, "run", str(write_config(config))) == 1
    error = json.loads((out_dir / "moments-wide" / "error.json").read_text(encoding="utf-8"))
    assert error["error"] == "InequalityViolation"
    assert not (out_dir / "moments-wide" / "record.json").exists()


def test_invalid_descriptor_writes_nothing(write_config, out_dir, tmp_path):
    assert run(out_dir, "run", str(write_config({**MOMENTS, "colour": "red"}))) == 2
    broken = tmp_path / "broken.json"
    broken.write_text('{"kind": "bl-moments",', encoding="utf-8")
    assert run(out_dir, "run", str(broken)) == 2
    assert not out_dir.exists()


def test_numeric_setup_error_writes_error_file(write_config, out_dir):
    config = {
        **SMALL_LHS,
        "experiment_id": "bad-knot",
        "grid": {"n_steps": 16},
        "functional": {"kind": "cylinder", "knots": [0.3], "linear": [1.0], "quadratic": [0.0]},
    }
    assert run(out_dir, "run", str(write_config(config))) == 2
    assert (out_dir / "bad-knot" / "error.json").exists()
    assert not (out_dir / "bad-knot" / "record.json").exists()


def test_negative_seed_is_rejected(write_config, out_dir):
    with pytest.raises(SystemExit):
        run(out_dir, "--seed", "-1", "run", str(write_config(MOMENTS)))


def test_seed_override(write_config, out_dir):
    assert run(out_dir, "--seed", "5", "run", str(write_config(SMALL_LHS))) == 0
    record = json.loads((out_dir / "small-lhs" / "record.json").read_text(encoding="utf-8"))
    assert record["config"]["seed"] == 5


def _payload_and_estimates(out_dir):
    folder = out_dir / "small-lhs"
    record = json.loads((folder / "record.json").read_text(encoding="utf-8"))
    return record["payload"], record["estimates"], (folder / "estimates.csv").read_text(encoding="utf-8")


def test_runs_are_reproducible(write_config, tmp_path):
    path = str(write_config(SMALL_LHS))
    assert run(tmp_path / "first", "run", path) == 0
    assert run(tmp_path / "second", "run", path) == 0
    assert _payload_and_estimates(tmp_path / "first") == _payload_and_estimates(tmp_path / "second")


def test_results_do_not_depend_on_thread_count(write_config, tmp_path, monkeypatch):
    path = str(write_config(SMALL_LHS))
    monkeypatch.setattr(settings, "THREADS", 1)
    assert run(tmp_path / "serial", "run", path) == 0
    monkeypatch.setattr(settings, "THREADS", 3)
    assert run(tmp_path / "threaded", "run", path) == 0
    assert _payload_and_estimates(tmp_path / "serial") == _payload_and_estimates(tmp_path / "threaded")


def test_plot_data(write_config, out_dir, tmp_path):
    assert run(out_dir, "run", str(write_config(CERTIFY))) == 0
    plots = tmp_path / "plots"
    assert run(plots, "plot-data", str(out_dir / "certify-dw"), "--series", "g_prime") == 0
    lines = (plots / "certify-dw.g_prime.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,g,gprime,sigma"
    assert len(lines) == 1 + 1201
    assert run(plots, "plot-data", str(out_dir / "certify-dw"), "--series", "lambda_scan") == 2


def test_reproduce_all_survives_a_broken_config(tmp_path, out_dir):
    suite = tmp_path / "suite"
    suite.mkdir()
    (suite / "a_moments.json").write_text(json.dumps(MOMENTS), encoding="utf-8")
    (suite / "b_broken.json").write_text("{", encoding="utf-8")
    (suite / "c_lhs.json").write_text(json.dumps(SMALL_LHS), encoding="utf-8")
    assert run(out_dir, "reproduce-all", str(suite)) == 1
    assert (out_dir / "moments-convex" / "record.json").exists()
    assert (out_dir / "small-lhs" / "record.json").exists()


def test_reproduce_all_needs_configs(tmp_path, out_dir):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run(out_dir, "reproduce-all", str(empty)) == 2


@pytest.mark.parametrize("path", sorted(ACCEPTANCE_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_acceptance_descriptors_validate(path):
    config = experiment_runner.load_config(path)
    assert config.experiment_id == path.stem
