"""
Experiment runner

Validates experiment descriptors, dispatches each kind to the numeric
services, turns the resulting reports into pass/fail checks and writes the
run record. Nothing is written before the descriptor validates, and nothing
is written outside the output directory.
"""

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, TypeAdapter, ValidationError

from wienervar import __version__
from wienervar.core.config import settings
from wienervar.core.datetime_utils import to_utc_string, utc_now
from wienervar.core.exceptions import EXIT_OK, EXIT_VIOLATION, ConfigurationError, WienerVarError
from wienervar.core.parallel import derive_seed
from wienervar.core.statistics import combined_stderr
from wienervar.models.grid import TimeGrid, grid_for
from wienervar.schemas.estimate import Estimate
from wienervar.schemas.experiment import (
    BLCertifyConfig,
    BLMomentsConfig,
    BLWienerConfig,
    ClarkOconeConfig,
    ConjugateRoundTripConfig,
    DoubleWellTableConfig,
    EntropyCheckConfig,
    EstimateLhsConfig,
    ExperimentConfig,
    FunctionalDescriptor,
    GirsanovCheckConfig,
    LowerBoundSuiteConfig,
    OptimizeDriftConfig,
    PrekopaScanConfig,
    TruncationSweepConfig,
)
from wienervar.schemas.record import CheckResult, EstimateRow, RunRecord
from wienervar.schemas.reports import ClarkOconeReport, GirsanovReport, RoundTripReport
from wienervar.services.bl_appendix import (
    bass_g,
    bass_variance,
    capital_g_check,
    capital_g_values,
    certify_conditions,
    default_xi_grid,
    distribution_fx,
    double_well_table,
    moment_inequality_check,
)
from wienervar.services.descriptor_service import descriptor_service
from wienervar.services.drift_class import bar_conjugate, random_family_drifts, tilde_conjugate
from wienervar.services.prekopa import (
    DEFICIT_SLACK,
    check_b2_hypothesis,
    scan_log_partition,
    terminal_tilted_moment,
    wiener_bl_check,
)
from wienervar.services.variational import (
    clark_ocone_objective,
    clark_ocone_value,
    entropy_identity_check,
    estimate_lhs_direct,
    estimate_lhs_importance,
    lower_bound_suite,
    optimize_drift,
    truncation_sweep,
    validate_assumptions,
)
from wienervar.services.wiener_core import (
    apply_drift_transform,
    doleans_moment,
    girsanov_reweighted_mean,
    mean_doleans_weight,
    plain_mean,
    sample_wiener,
)

logger = logging.getLogger(__name__)

CONFIG_ADAPTER = TypeAdapter(ExperimentConfig)

# (t, x) grid for the pointwise Clark–Ocone comparison
CLARK_OCONE_TIMES = (0.0, 0.25, 0.5, 0.75)
CLARK_OCONE_STATES = np.linspace(-2.0, 2.0, 9)

RECORD_FILE = "record.json"
ESTIMATES_FILE = "estimates.csv"
ESTIMATE_COLUMNS = ("experiment_id", "quantity", "value", "stderr", "n", "seed")


# ---- serialization ---------------------------------------------------------

def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(by_alias=True))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def format_float(value: Any) -> str:
    """CSV cell: floats with 17 significant digits, None as empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, rows: Sequence[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> Path:
    """Tidy CSV, UTF-8 with LF line endings; columns default to first-seen key order."""
    if columns is None:
        columns = []
        for row in rows:
            columns.extend(k for k in row if k not in columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_float(row.get(c)) for c in columns])
    return path


def canonical_json(data: Any) -> str:
    return json.dumps(to_jsonable(data), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: BaseModel) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


# ---- outcome ----------------------------------------------------------------

@dataclass
class Outcome:
    """What one experiment handler produced."""
    payload: Dict[str, Any] = field(default_factory=dict)
    series: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    estimates: List[EstimateRow] = field(default_factory=list)
    checks: List[CheckResult] = field(default_factory=list)
    headline: Optional[Tuple[float, float]] = None

    def estimate(self, quantity: str, estimate: Estimate) -> None:
        self.estimates.append(
            EstimateRow(
                quantity=quantity,
                value=estimate.value,
                stderr=estimate.stderr,
                n=estimate.n_samples,
                seed=estimate.seed,
            )
        )

    def value(self, quantity: str, value: float) -> None:
        self.estimates.append(EstimateRow(quantity=quantity, value=value))

    def check(self, name: str, passed: bool, **fields: Any) -> None:
        self.checks.append(CheckResult(name=name, passed=bool(passed), **fields))


def closed_form_lhs(descriptor: FunctionalDescriptor, d: int = 1) -> Optional[float]:
    """log E[e^F] where it is known exactly."""
    if descriptor.kind == "linear-terminal":
        return 0.5 * descriptor.c ** 2
    if descriptor.kind == "quadratic-terminal" and descriptor.a < 0.5:
        return -0.5 * d * math.log1p(-2.0 * descriptor.a)
    if descriptor.kind == "constant":
        return descriptor.b
    return None


def closed_form_feedback(descriptor: FunctionalDescriptor) -> Optional[Callable[[float, np.ndarray], np.ndarray]]:
    """
    Optimal feedback for f(x) = cx + ax² at the single knot t = 1:
    u(s, x) = c + 2a(x + cτ)/(1 − 2aτ), τ = 1 − s.
    """
    if descriptor.kind != "cylinder" or descriptor.knots != [1.0]:
        return None
    c, a = descriptor.linear[0], descriptor.quadratic[0]
    if a >= 0.5:
        return None

    def feedback(s: float, x: np.ndarray) -> np.ndarray:
        tau = 1.0 - s
        return c + 2.0 * a * (x + c * tau) / (1.0 - 2.0 * a * tau)

    return feedback


# ---- runner ----------------------------------------------------------------

class ExperimentRunner:
    """Service for running experiment descriptors and recording the results"""

    def __init__(self):
        self.handlers: Dict[str, Callable[[Any], Outcome]] = {
            "estimate-lhs": self._estimate_lhs,
            "optimize-drift": self._optimize_drift,
            "lower-bound-suite": self._lower_bound_suite,
            "truncation-sweep": self._truncation_sweep,
            "clark-ocone": self._clark_ocone,
            "entropy-check": self._entropy_check,
            "prekopa-scan": self._prekopa_scan,
            "bl-wiener": self._bl_wiener,
            "bl-certify": self._bl_certify,
            "bl-moments": self._bl_moments,
            "double-well-table": self._double_well_table,
            "girsanov-check": self._girsanov_check,
            "conjugate-roundtrip": self._conjugate_roundtrip,
        }

    # ---- config ingestion ----------------------------------------------

    def parse_config(self, data: Any) -> ExperimentConfig:
        try:
            return CONFIG_ADAPTER.validate_python(data)
        except ValidationError as e:
            problems = [f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()]
            raise ConfigurationError("invalid experiment descriptor", problems=problems)

    def load_config(self, path: Union[str, Path]) -> ExperimentConfig:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigurationError("config file not found", path=str(path))
        except json.JSONDecodeError as e:
            raise ConfigurationError("config file is not valid JSON", path=str(path), line=e.lineno)
        return self.parse_config(data)

    def with_seed(self, config: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
        if seed is None:
            return config
        data = config.model_dump(by_alias=True)
        data["seed"] = seed
        return self.parse_config(data)

    # ---- execution -----------------------------------------------------

    def run(self, config: ExperimentConfig, seed: Optional[int] = None) -> RunRecord:
        """Execute one experiment; identical configs give identical payloads."""
        config = self.with_seed(config, seed)
        logger.info(f"Running {config.kind} experiment '{config.experiment_id}' (seed {config.seed})")
        started = time.perf_counter()
        outcome = self.handlers[config.kind](config)
        self._apply_expect(config, outcome)
        wall_time = time.perf_counter() - started

        failed = [c.name for c in outcome.checks if not c.passed]
        if failed:
            logger.warning(f"Experiment '{config.experiment_id}' failed checks: {', '.join(failed)}")
        return RunRecord(
            experiment_id=config.experiment_id,
            kind=config.kind,
            config=to_jsonable(config),
            config_hash=config_hash(config),
            version=__version__,
            created_at=to_utc_string(utc_now()),
            wall_time_seconds=wall_time,
            payload=to_jsonable(outcome.payload),
            series=to_jsonable(outcome.series),
            estimates=outcome.estimates,
            checks=outcome.checks,
            verdict="fail" if failed else "pass",
            exit_code=EXIT_VIOLATION if failed else EXIT_OK,
        )

    def write_record(self, record: RunRecord, out_dir: Union[str, Path, None] = None) -> Path:
        """Write record.json, estimates.csv and one CSV per series under <out>/<experiment_id>/."""
        target = Path(out_dir or settings.OUTPUT_DIR) / record.experiment_id
        target.mkdir(parents=True, exist_ok=True)
        with open(target / RECORD_FILE, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(to_jsonable(record), fh, indent=2, ensure_ascii=False, allow_nan=False)
            fh.write("\n")
        rows = [
            {"experiment_id": record.experiment_id, **row.model_dump()}
            for row in record.estimates
        ]
        write_csv(target / ESTIMATES_FILE, rows, ESTIMATE_COLUMNS)
        for name, series in record.series.items():
            write_csv(target / f"{name}.csv", series)
        return target

    def write_error(self, config: ExperimentConfig, error: WienerVarError, out_dir: Union[str, Path, None] = None) -> Path:
        target = Path(out_dir or settings.OUTPUT_DIR) / config.experiment_id
        target.mkdir(parents=True, exist_ok=True)
        body = {"experiment_id": config.experiment_id, "kind": config.kind, **error.to_dict()}
        trace = getattr(error, "trace", None)
        if trace is not None:
            body["trace"] = trace
        with open(target / "error.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(to_jsonable(body), fh, indent=2, ensure_ascii=False, allow_nan=False)
            fh.write("\n")
        return target

    def execute(
        self,
        config_path: Union[str, Path],
        out_dir: Union[str, Path, None] = None,
        seed: Optional[int] = None,
    ) -> RunRecord:
        """Load, run and write one experiment; errors after validation leave an error.json."""
        config = self.with_seed(self.load_config(config_path), seed)
        try:
            record = self.run(config)
        except WienerVarError as e:
            logger.error(f"Experiment '{config.experiment_id}' aborted: {e.detail}")
            self.write_error(config, e, out_dir)
            raise
        self.write_record(record, out_dir)
        return record

    # ---- shared helpers --------------------------------------------------

    def _grid(self, config) -> TimeGrid:
        return grid_for(config.grid.n_steps)

    def _n_paths(self, config) -> int:
        return config.n_paths or settings.DEFAULT_N_PATHS

    def _apply_expect(self, config, outcome: Outcome) -> None:
        expect = config.expect
        if expect is None or expect.value is None:
            return
        if outcome.headline is None:
            raise ConfigurationError(f"'{config.kind}' experiments have no headline value to compare", kind=config.kind)
        value, stderr = outcome.headline
        tolerance = expect.n_sigma * stderr + expect.allowance
        outcome.check(
            "expect",
            abs(value - expect.value) <= tolerance,
            observed=value,
            expected=expect.value,
            tolerance=tolerance,
        )

    # ---- variational -----------------------------------------------------

    def _estimate_lhs(self, config: EstimateLhsConfig) -> Outcome:
        F = descriptor_service.functional(config.functional)
        grid, n = self._grid(config), self._n_paths(config)
        out = Outcome()
        estimates: Dict[str, Estimate] = {}
        if config.method in ("direct", "both"):
            estimates["direct"] = estimate_lhs_direct(F, n, config.seed, grid, d=config.dimension)
        if config.method in ("importance", "both"):
            v = descriptor_service.drift(config.drift)
            if v.dimension != config.dimension:
                raise ConfigurationError("drift and path dimensions differ", drift=v.dimension, path=config.dimension)
            seed = derive_seed(config.seed, 1) if "direct" in estimates else config.seed
            estimates["importance"] = estimate_lhs_importance(F, v, n, seed, grid)
        assumptions = validate_assumptions(F, n, config.seed, grid, config.dimension)

        for name, estimate in estimates.items():
            out.estimate(f"lhs_{name}", estimate)
        exact = closed_form_lhs(config.functional, config.dimension)
        if exact is not None:
            out.value("lhs_closed_form", exact)
            for name, estimate in estimates.items():
                out.check(
                    f"closed-form-{name}",
                    estimate.agrees_with(exact, 3.0, 1e-12),
                    observed=estimate.value,
                    expected=exact,
                    tolerance=3.0 * estimate.stderr + 1e-12,
                )
        if len(estimates) == 2:
            se = combined_stderr(estimates["direct"], estimates["importance"])
            gap = estimates["direct"].value - estimates["importance"].value
            out.check("direct-vs-importance", abs(gap) <= 3.0 * se, observed=gap, expected=0.0, tolerance=3.0 * se)
        if assumptions.growth_checked:
            out.check("growth-bound", assumptions.growth_holds, observed=float(assumptions.growth_violations))

        headline = next(iter(estimates.values()))
        out.headline = (headline.value, headline.stderr)
        out.payload = {"functional": F.label, "estimates": estimates, "closed_form": exact, "assumptions": assumptions}
        return out

    def _optimize_drift(self, config: OptimizeDriftConfig) -> Outcome:
        F = descriptor_service.functional(config.functional)
        grid, n = self._grid(config), self._n_paths(config)
        trace = optimize_drift(F, config.family, config.optimizer, config.seed, grid)
        lhs = estimate_lhs_direct(F, n, config.seed, grid, d=config.family.dimension)
        final = trace.final_objective

        out = Outcome()
        out.estimate("lhs_direct", lhs)
        out.estimate("best_objective", trace.best_objective)
        out.estimate("final_objective", final)
        se = combined_stderr(lhs, final)
        out.check(
            "lower-bound",
            final.value <= lhs.value + 3.0 * se,
            observed=final.value - lhs.value,
            expected=0.0,
            tolerance=3.0 * se,
            detail="objective at the best theta must not exceed log E[e^F]",
        )
        if config.expect_theta is not None:
            if len(config.expect_theta) != config.family.n_params:
                raise ConfigurationError("expect_theta has the wrong length", expected=config.family.n_params)
            # the last SPSA iterate; best_theta is an argmax over noisy batches
            last = np.asarray(trace.iterates[-1].theta)
            error = float(np.max(np.abs(last - np.asarray(config.expect_theta))))
            out.check(
                "theta",
                error <= config.theta_tolerance,
                observed=error,
                expected=0.0,
                tolerance=config.theta_tolerance,
                detail=f"final iterate {np.round(last, 4).tolist()}",
            )

        out.series["optimizer_trace"] = [
            {
                "iter": it.iteration,
                **{f"theta_{j}": t for j, t in enumerate(it.theta)},
                "objective": it.objective.value,
                "stderr": it.objective.stderr,
            }
            for it in trace.iterates
        ]
        out.headline = (final.value, final.stderr)
        out.payload = {
            "functional": F.label,
            "family": config.family,
            "lhs": lhs,
            "gap": lhs.value - final.value,
            "trace": trace,
        }
        return out

    def _lower_bound_suite(self, config: LowerBoundSuiteConfig) -> Outcome:
        grid, n = self._grid(config), self._n_paths(config)
        if len({family.dimension for family in config.families}) > 1:
            raise ConfigurationError("all drift families of a suite must share one dimension")
        drifts = []
        for j, family in enumerate(config.families):
            drifts.extend(random_family_drifts(family, config.drifts_per_family, derive_seed(config.seed, 1000 + j)))

        out = Outcome()
        suites = []
        rows = []
        for i, descriptor in enumerate(config.functionals):
            F = descriptor_service.functional(descriptor)
            report = lower_bound_suite(F, drifts, n, derive_seed(config.seed, i), grid)
            suites.append({"functional": F.label, "report": report})
            out.estimate(f"lhs[{F.label}]", report.lhs)
            out.check(
                f"lower-bound[{F.label}]",
                report.n_violations == 0,
                observed=report.worst_margin_sigmas,
                detail=f"{report.n_violations} of {len(report.rows)} drifts significantly above the left side",
            )
            rows.extend(
                {
                    "functional": F.label,
                    "drift": k,
                    "family": row.drift,
                    "objective": row.objective.value,
                    "stderr": row.objective.stderr,
                    "margin": row.margin,
                    "combined_stderr": row.combined_stderr,
                }
                for k, row in enumerate(report.rows)
            )
        out.series["lower_bound"] = rows
        out.payload = {"n_drifts": len(drifts), "suites": suites}
        return out

    def _truncation_sweep(self, config: TruncationSweepConfig) -> Outcome:
        F = descriptor_service.functional(config.functional)
        grid, n = self._grid(config), self._n_paths(config)
        report = truncation_sweep(F, config.caps, config.floors, n, config.seed, grid, config.dimension)
        out = Outcome()
        for row in report.rows:
            out.estimate(f"lhs[N={row.floor_n},M={row.cap_m}]", row.estimate)
        out.check("monotone-in-M", report.monotone_in_m)
        out.check("monotone-in-N", report.monotone_in_n)
        out.series["truncation"] = [
            {"floor_n": r.floor_n, "cap_m": r.cap_m, "value": r.estimate.value, "stderr": r.estimate.stderr}
            for r in report.rows
        ]
        last = report.rows[-1].estimate
        out.headline = (last.value, last.stderr)
        out.payload = {"functional": F.label, "report": report}
        return out

    def _clark_ocone(self, config: ClarkOconeConfig) -> Outcome:
        F = descriptor_service.functional(config.functional)
        grid, n = self._grid(config), self._n_paths(config)
        lhs = estimate_lhs_direct(F, n, config.seed, grid)
        objective = clark_ocone_objective(F, n, derive_seed(config.seed, 1), config.quad, grid)
        se = combined_stderr(lhs, objective)

        out = Outcome()
        max_error = None
        exact = closed_form_feedback(config.functional)
        if exact is not None:
            points = []
            for s in CLARK_OCONE_TIMES:
                quadrature = clark_ocone_value(F, s, CLARK_OCONE_STATES, quad_config=config.quad)
                closed = exact(s, CLARK_OCONE_STATES)
                points.extend(
                    {"s": s, "x": x, "quadrature": q, "closed_form": c}
                    for x, q, c in zip(CLARK_OCONE_STATES, quadrature, closed)
                )
            max_error = max(abs(p["quadrature"] - p["closed_form"]) for p in points)
            out.series["clark_ocone_points"] = points
            out.check(
                "pointwise",
                max_error <= config.pointwise_tolerance,
                observed=max_error,
                expected=0.0,
                tolerance=config.pointwise_tolerance,
            )
        report = ClarkOconeReport(
            max_pointwise_error=max_error,
            lhs=lhs,
            objective=objective,
            combined_stderr=se,
            agrees=abs(lhs.value - objective.value) <= 3.0 * se,
        )
        out.check(
            "duality",
            report.agrees,
            observed=objective.value - lhs.value,
            expected=0.0,
            tolerance=3.0 * se,
        )
        out.estimate("lhs_direct", lhs)
        out.estimate("clark_ocone_objective", objective)
        out.headline = (objective.value, objective.stderr)
        out.payload = {"functional": F.label, "report": report}
        return out

    def _entropy_check(self, config: EntropyCheckConfig) -> Outcome:
        v = descriptor_service.drift(config.drift)
        report = entropy_identity_check(v, self._n_paths(config), config.seed, self._grid(config))
        out = Outcome()
        out.estimate("entropy", report.lhs)
        out.estimate("half_energy", report.rhs)
        out.check(
            "entropy-identity",
            report.agrees,
            observed=report.difference,
            expected=0.0,
            tolerance=3.0 * report.combined_stderr,
        )
        out.headline = (report.lhs.value, report.lhs.stderr)
        out.payload = {"drift": v.label, "report": report}
        return out

    # ---- prekopa -----------------------------------------------------------

    def _prekopa_scan(self, config: PrekopaScanConfig) -> Outcome:
        grid, n = self._grid(config), self._n_paths(config)
        G = descriptor_service.param_functional(config.param_functional, grid)
        report = scan_log_partition(G, config.lambdas, n, config.seed, grid)

        out = Outcome()
        out.check(
            "verdict",
            report.verdict == config.expect_verdict,
            detail=f"scan verdict {report.verdict}, expected {config.expect_verdict}",
        )
        b2 = None
        if config.b2_triples:
            b2 = check_b2_hypothesis(G, config.b2_triples, config.seed, grid)
            if config.expect_b2 is not None:
                out.check(
                    "b2-hypothesis",
                    b2.holds == config.expect_b2,
                    observed=float(b2.n_violations),
                    detail=f"(B2) {'holds' if b2.holds else 'fails'} on {b2.n_triples} triples",
                )
        if config.check_closed_form:
            self._check_gaussian_shift(config, report, out)

        for lam, estimate in zip(report.lambda_grid, report.values):
            if estimate is not None:
                out.estimate(f"g({lam[0]})", estimate)
        out.series["lambda_scan"] = self._lambda_scan_rows(report)
        out.payload = {"functional": G.label, "report": report, "b2": b2}
        return out

    def _check_gaussian_shift(self, config: PrekopaScanConfig, report, out: Outcome) -> None:
        """g(λ) = −λ²/4 − ½log 2 and midpoint deficits (Δλ)²/16 for G = −(w(1) − λ)²/2."""
        if config.param_functional.kind != "gaussian-shift":
            raise ConfigurationError("closed forms are known only for the gaussian-shift functional")
        worst = 0.0
        values_ok = True
        for lam, estimate in zip(report.lambda_grid, report.values):
            exact = -0.25 * lam[0] ** 2 - 0.5 * math.log(2.0)
            if estimate is None or not estimate.agrees_with(exact):
                values_ok = False
            elif estimate.stderr > 0:
                worst = max(worst, abs(estimate.value - exact) / estimate.stderr)
        out.check("closed-form-values", values_ok, observed=worst, tolerance=3.0, detail="worst error in stderr units")

        deficits_ok = True
        for d in report.deficits:
            exact = (d.lambda_i[0] - d.lambda_j[0]) ** 2 / 16.0
            if abs(d.deficit - exact) > 3.0 * d.stderr + DEFICIT_SLACK:
                deficits_ok = False
        out.check("closed-form-deficits", deficits_ok, detail="deficits equal (lambda_i - lambda_j)^2/16")

    def _lambda_scan_rows(self, report) -> List[Dict[str, Any]]:
        """One row per grid λ; deficit is the second difference centred at λ when a pair straddles it."""
        centred = {}
        for d in report.deficits:
            mid = 0.5 * (d.lambda_i[0] + d.lambda_j[0])
            centred.setdefault(round(mid, 12), d)
        rows = []
        for lam, estimate in zip(report.lambda_grid, report.values):
            deficit = centred.get(round(lam[0], 12))
            rows.append(
                {
                    "lambda": lam[0],
                    "value": None if estimate is None else estimate.value,
                    "stderr": None if estimate is None else estimate.stderr,
                    "deficit": None if deficit is None else deficit.deficit,
                    "deficit_stderr": None if deficit is None else deficit.stderr,
                }
            )
        return rows

    def _bl_wiener(self, config: BLWienerConfig) -> Outcome:
        grid, n = self._grid(config), self._n_paths(config)
        F = descriptor_service.functional(config.functional)
        l = descriptor_service.linear_functional(config.l, grid)
        psis = descriptor_service.psi_list(config.psi)
        report = wiener_bl_check(F, l, psis, n, config.seed)

        out = Outcome()
        out.check("brascamp-lieb", report.holds, detail=", ".join(f"{r.psi}: {r.lhs:.6g} <= {r.rhs:.6g}" for r in report.rows))
        oracle = {}
        if F.terminal is not None and config.l.kind == "identity" and config.l.coordinate == 0:
            for row, psi in zip(report.rows, psis):
                exact = terminal_tilted_moment(F, psi, config.l.scale)
                oracle[row.psi] = exact
                tolerance = 3.0 * row.lhs_stderr + 1e-9 * max(1.0, abs(exact))
                out.check(
                    f"quadrature[{row.psi}]",
                    abs(row.lhs - exact) <= tolerance,
                    observed=row.lhs,
                    expected=exact,
                    tolerance=tolerance,
                )
        for row in report.rows:
            out.estimates.append(EstimateRow(quantity=f"tilted[{row.psi}]", value=row.lhs, stderr=row.lhs_stderr, n=n, seed=config.seed))
            out.value(f"gaussian[{row.psi}]", row.rhs)
        first = report.rows[0]
        out.headline = (first.lhs, first.lhs_stderr)
        out.payload = {"functional": F.label, "report": report, "quadrature": oracle}
        return out

    # ---- appendix ----------------------------------------------------------

    def _bl_certify(self, config: BLCertifyConfig) -> Outcome:
        p = descriptor_service.potential(config.potential)
        certification = certify_conditions(p)
        out = Outcome()
        if config.expect_certified is not None:
            out.check(
                "certified",
                certification.certified == config.expect_certified,
                detail=f"certified={certification.certified}",
            )
        out.value("log_z", certification.log_z)
        out.value("inf_u_on_d", certification.inf_u_on_d)
        out.value("inf_h_on_d", certification.inf_h_on_d)
        payload = {"potential": p.label, "sigma": p.sigma, "certified": certification.certified, "conditions": certification}

        if config.bass:
            embedding = bass_g(p, embedding=distribution_fx(p, certification.log_z))
            gprime = embedding.gprime_report()
            capital_g = capital_g_check(p, embedding=embedding)
            variance = bass_variance(embedding)
            out.value("max_gprime", gprime.max_gprime)
            out.value("min_capital_g", capital_g.min_value)
            out.value("variance", variance)
            if certification.certified:
                out.check("gprime-bound", gprime.holds, observed=gprime.max_gprime, expected=p.sigma, tolerance=1e-6)
                out.check("capital-g", capital_g.holds, observed=capital_g.min_value, expected=0.0, tolerance=1e-6)
                out.check("variance", variance <= p.sigma ** 2 + 1e-6, observed=variance, expected=p.sigma ** 2, tolerance=1e-6)
            xi = default_xi_grid()
            out.series["g_prime"] = [
                {"x": x, "g": g, "gprime": gp, "sigma": p.sigma}
                for x, g, gp in zip(embedding.x_grid, embedding.g_values, embedding.gprime_values)
            ]
            out.series["capital_g"] = [{"xi": a, "G": b} for a, b in zip(xi, capital_g_values(embedding, xi))]
            payload["bass"] = {"gprime": gprime, "capital_g": capital_g, "variance": variance}

        out.headline = (certification.inf_h_on_d, 0.0)
        out.payload = payload
        return out

    def _bl_moments(self, config: BLMomentsConfig) -> Outcome:
        p = descriptor_service.potential(config.potential)
        certification = certify_conditions(p)
        strict = config.expect is not None and config.expect.strict
        report = moment_inequality_check(p, descriptor_service.psi_list(config.psi), certification, strict=strict)
        out = Outcome()
        if report.asserted:
            out.check("moment-inequality", report.holds, detail=", ".join(f"{r.psi}: {r.lhs:.10g} <= {r.rhs:.10g}" for r in report.rows))
        by_name = {row.psi: row for row in report.rows}
        for name, expected in config.expect_lhs.items():
            if name not in by_name:
                raise ConfigurationError("expect_lhs names a test function that was not computed", psi=name)
            observed = by_name[name].lhs
            out.check(
                f"lhs[{name}]",
                abs(observed - expected) <= config.lhs_tolerance,
                observed=observed,
                expected=expected,
                tolerance=config.lhs_tolerance,
            )
        for row in report.rows:
            out.value(f"tilted[{row.psi}]", row.lhs)
            out.value(f"gaussian[{row.psi}]", row.rhs)
        out.headline = (report.rows[0].lhs, 0.0)
        out.payload = {"potential": p.label, "conditions": certification, "report": report}
        return out

    def _double_well_table(self, config: DoubleWellTableConfig) -> Outcome:
        rows = double_well_table(config.alphas, config.betas)
        worst = max(r.max_error for r in rows)
        out = Outcome()
        out.check("closed-forms", worst <= config.tolerance, observed=worst, expected=0.0, tolerance=config.tolerance)
        out.series["double_well"] = [r.model_dump() for r in rows]
        out.payload = {"rows": rows, "max_error": worst}
        return out

    # ---- wiener core -------------------------------------------------------

    def _girsanov_check(self, config: GirsanovCheckConfig) -> Outcome:
        grid, n = self._grid(config), self._n_paths(config)
        dims = {family.dimension for family in config.drifts}
        if len(dims) > 1:
            raise ConfigurationError("all drifts of a Girsanov check must share one dimension")
        F = descriptor_service.functional(config.functional)
        plain = plain_mean(F, n, config.seed, grid, dims.pop())

        out = Outcome()
        out.estimate("plain_mean", plain)
        reports = []
        for i, family in enumerate(config.drifts):
            v = descriptor_service.drift(family)
            weight = mean_doleans_weight(v, n, derive_seed(config.seed, i, 1), grid)
            reweighted = girsanov_reweighted_mean(F, v, n, derive_seed(config.seed, i, 2), grid)
            moments = []
            for p in config.moments:
                estimate, bound = doleans_moment(v, p, n, derive_seed(config.seed, i, 3), grid)
                holds = bound is None or estimate.value <= bound + 3.0 * estimate.stderr
                moments.append({"p": p, "estimate": estimate.model_dump(), "bound": bound, "holds": holds})
                out.estimate(f"moment[{i},p={p}]", estimate)
                if bound is not None:
                    out.check(f"moment-bound[{i},p={p}]", holds, observed=estimate.value, expected=bound, tolerance=3.0 * estimate.stderr)
            se = combined_stderr(reweighted, plain)
            agrees = abs(reweighted.value - plain.value) <= 3.0 * se
            out.check("martingale[%d]" % i, weight.agrees_with(1.0), observed=weight.value, expected=1.0, tolerance=3.0 * weight.stderr)
            out.check("reweighting[%d]" % i, agrees, observed=reweighted.value, expected=plain.value, tolerance=3.0 * se)
            out.estimate(f"mean_weight[{i}]", weight)
            out.estimate(f"reweighted_mean[{i}]", reweighted)
            reports.append(
                {
                    "drift": v.label,
                    "report": GirsanovReport(
                        mean_weight=weight,
                        plain_mean=plain,
                        reweighted_mean=reweighted,
                        moments=moments,
                        holds=weight.agrees_with(1.0) and agrees and all(m["holds"] for m in moments),
                    ),
                }
            )
        out.headline = (plain.value, plain.stderr)
        out.payload = {"functional": F.label, "drifts": reports}
        return out

    def _conjugate_roundtrip(self, config: ConjugateRoundTripConfig) -> Outcome:
        grid = self._grid(config)
        max_tilde = max_bar = 0.0
        for i in range(config.n_fixtures):
            family = config.families[i % len(config.families)]
            v = random_family_drifts(family, 1, derive_seed(config.seed, i))[0]
            path = sample_wiener(grid, family.dimension, derive_seed(config.seed, i, 1))
            back = apply_drift_transform(apply_drift_transform(path, tilde_conjugate(v), sign=-1), v, sign=1)
            forth = apply_drift_transform(apply_drift_transform(path, v, sign=-1), bar_conjugate(v), sign=1)
            max_tilde = max(max_tilde, float(np.max(np.abs(back.values - path.values))))
            max_bar = max(max_bar, float(np.max(np.abs(forth.values - path.values))))
        report = RoundTripReport(
            n_fixtures=config.n_fixtures,
            max_tilde_error=max_tilde,
            max_bar_error=max_bar,
            tolerance=config.tolerance,
            holds=max(max_tilde, max_bar) <= config.tolerance,
        )
        out = Outcome()
        out.check("tilde-roundtrip", max_tilde <= config.tolerance, observed=max_tilde, expected=0.0, tolerance=config.tolerance)
        out.check("bar-roundtrip", max_bar <= config.tolerance, observed=max_bar, expected=0.0, tolerance=config.tolerance)
        out.value("max_tilde_error", max_tilde)
        out.value("max_bar_error", max_bar)
        out.headline = (max(max_tilde, max_bar), 0.0)
        out.payload = {"report": report}
        return out


experiment_runner = ExperimentRunner()
