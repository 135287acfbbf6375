import importlib
import json
import math

import numpy as np
import pytest

from wienervar.core.exceptions import EXIT_OK, EXIT_VIOLATION, ConfigurationError, InequalityViolation
from wienervar.schemas.experiment import FunctionalDescriptor
from wienervar.services.bl_appendix import certify_conditions
from wienervar.services.experiment_runner import (
    closed_form_feedback,
    closed_form_lhs,
    config_hash,
    experiment_runner,
    format_float,
    to_jsonable,
    write_csv,
)

runner_module = importlib.import_module("wienervar.services.experiment_runner")

TABLE = {
    "kind": "double-well-table",
    "experiment_id": "dw-small",
    "alphas": [1.0, 2.0],
    "betas": [1.0, 3.0],
}

ROUNDTRIP = {
    "kind": "conjugate-roundtrip",
    "experiment_id": "roundtrip-small",
    "seed": 3,
    "grid": {"n_steps": 16},
    "n_fixtures": 6,
    "families": [
        {"kind": "piecewise-constant", "knots": [0.0, 0.5, 1.0], "lower": -1.0, "upper": 1.0},
        {"kind": "linear-state-feedback", "knots": [0.0, 0.25, 1.0], "lower": -1.0, "upper": 1.0},
    ],
}

MOMENTS = {
    "kind": "bl-moments",
    "experiment_id": "moments-harmonic",
    "potential": {"kind": "polynomial", "coefficients": [0.0, 0.0, 0.5]},
    "psi": ["z2", "z4"],
    "expect_lhs": {"z2": 0.5, "z4": 0.75},
}


def test_to_jsonable():
    data = {"a": np.float64(1.5), "b": [np.int64(2), math.inf, -math.inf, math.nan], "c": np.array([True, False])}
    assert to_jsonable(data) == {"a": 1.5, "b": [2, "inf", "-inf", "nan"], "c": [True, False]}
    assert to_jsonable((1, 2)) == [1, 2]


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(None) == ""
    assert format_float(True) == "true"
    assert format_float(np.int32(7)) == "7"
    assert format_float(-math.inf) == "-inf"
    assert format_float("z2") == "z2"


def test_write_csv(tmp_path):
    path = write_csv(tmp_path / "rows.csv", [{"x": 1.0, "y": None}, {"x": 2.5, "z": "a"}])
    assert path.read_text(encoding="utf-8") == "x,y,z\n1,,\n2.5,,a\n"


def test_closed_forms():
    assert closed_form_lhs(FunctionalDescriptor(kind="linear-terminal", c=2.0)) == pytest.approx(2.0)
    assert closed_form_lhs(FunctionalDescriptor(kind="quadratic-terminal", a=0.25)) == pytest.approx(0.5 * math.log(2.0))
    assert closed_form_lhs(FunctionalDescriptor(kind="quadratic-terminal", a=0.25), d=2) == pytest.approx(math.log(2.0))
    assert closed_form_lhs(FunctionalDescriptor(kind="quadratic-terminal", a=0.5)) is None
    assert closed_form_lhs(FunctionalDescriptor(kind="exp-sup-norm")) is None

    feedback = closed_form_feedback(
        FunctionalDescriptor(kind="cylinder", knots=[1.0], linear=[0.0], quadratic=[0.25])
    )
    np.testing.assert_allclose(feedback(0.5, np.array([1.5])), [1.0])
    assert closed_form_feedback(FunctionalDescriptor(kind="linear-terminal")) is None


def test_parse_config_reports_problems():
    with pytest.raises(ConfigurationError) as excinfo:
        experiment_runner.parse_config({"kind": "double-well-table", "experiment_id": "x", "alphas": [-1.0]})
    assert any("alphas" in p for p in excinfo.value.context["problems"])
    with pytest.raises(ConfigurationError):
        experiment_runner.parse_config({"kind": "no-such-kind", "experiment_id": "x"})


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        experiment_runner.load_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigurationError) as excinfo:
        experiment_runner.load_config(broken)
    assert excinfo.value.context["line"] == 1


def test_with_seed_and_hash():
    config = experiment_runner.parse_config(TABLE)
    reseeded = experiment_runner.with_seed(config, 42)
    assert reseeded.seed == 42
    assert experiment_runner.with_seed(config, None) is config
    assert config_hash(config) != config_hash(reseeded)
    assert config_hash(config) == config_hash(experiment_runner.parse_config(dict(TABLE)))


def test_double_well_table_run():
    record = experiment_runner.run(experiment_runner.parse_config(TABLE))
    assert record.verdict == "pass"
    assert record.exit_code == EXIT_OK
    assert len(record.series["double_well"]) == 4
    assert record.payload["max_error"] <= 1e-6


def test_conjugate_roundtrip_run():
    record = experiment_runner.run(experiment_runner.parse_config(ROUNDTRIP))
    assert record.exit_code == EXIT_OK
    assert {c.name for c in record.checks} == {"tilde-roundtrip", "bar-roundtrip"}


def test_expect_mismatch_is_a_violation():
    config = experiment_runner.parse_config({**MOMENTS, "expect_lhs": {"z2": 0.4}})
    record = experiment_runner.run(config)
    assert record.exit_code == EXIT_VIOLATION
    assert record.verdict == "fail"
    assert [c.name for c in record.checks if not c.passed] == ["lhs[z2]"]


def test_expect_needs_a_headline():
    config = experiment_runner.parse_config({**TABLE, "expect": {"value": 0.0}})
    with pytest.raises(ConfigurationError):
        experiment_runner.run(config)


def test_expect_on_headline():
    config = experiment_runner.parse_config({**MOMENTS, "expect": {"value": 0.5, "allowance": 1e-8}})
    record = experiment_runner.run(config)
    expect = next(c for c in record.checks if c.name == "expect")
    assert expect.passed
    assert expect.observed == pytest.approx(0.5)


def test_write_record(tmp_path):
    record = experiment_runner.run(experiment_runner.parse_config(MOMENTS))
    target = experiment_runner.write_record(record, tmp_path)
    assert target == tmp_path / "moments-harmonic"
    written = json.loads((target / "record.json").read_text(encoding="utf-8"))
    assert written["config_hash"] == record.config_hash
    assert written["verdict"] == "pass"
    assert written["created_at"].endswith("Z")
    lines = (target / "estimates.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "experiment_id,quantity,value,stderr,n,seed"
    assert lines[1].startswith("moments-harmonic,tilted[z2],")


def test_execute_writes_error_file(write_config, out_dir):
    path = write_config(
        {
            "kind": "estimate-lhs",
            "experiment_id": "bad-knot",
            "grid": {"n_steps": 16},
            "n_paths": 100,
            "functional": {"kind": "cylinder", "knots": [0.3], "linear": [1.0], "quadratic": [0.0]},
        },
    )
    with pytest.raises(ConfigurationError):
        experiment_runner.execute(path, out_dir=out_dir)
    error = json.loads((out_dir / "bad-knot" / "error.json").read_text(encoding="utf-8"))
    assert error["error"] == "ConfigurationError"
    assert not (out_dir / "bad-knot" / "record.json").exists()


WIDE_MOMENTS = {
    "kind": "bl-moments",
    "experiment_id": "moments-wide",
    "potential": {"kind": "polynomial", "coefficients": [0.0, 0.0, -0.25]},
    "psi": ["z2"],
}


@pytest.fixture
def claim_certified(monkeypatch):
    def certified(p):
        return certify_conditions(p).model_copy(update={"cond_inf2_holds": True})

    monkeypatch.setattr(runner_module, "certify_conditions", certified)


def test_failed_moment_inequality_is_a_failed_check(claim_certified):
    record = experiment_runner.run(experiment_runner.parse_config(WIDE_MOMENTS))
    assert record.exit_code == EXIT_VIOLATION
    assert [c.name for c in record.checks if not c.passed] == ["moment-inequality"]


def test_strict_expectation_raises_on_failed_moment_inequality(claim_certified):
    config = experiment_runner.parse_config({**WIDE_MOMENTS, "expect": {"strict": True}})
    with pytest.raises(InequalityViolation) as excinfo:
        experiment_runner.run(config)
    assert excinfo.value.exit_code == EXIT_VIOLATION


def test_strict_expectation_passes_on_harmonic_potential():
    record = experiment_runner.run(experiment_runner.parse_config({**MOMENTS, "expect": {"strict": True}}))
    assert record.exit_code == EXIT_OK
