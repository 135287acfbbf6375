"""
Both sides of the variational representation

    log E[e^{F(W)}] = sup_v E[F(T^v(W)) − ½∫_0^1 |v_s|² ds]

with direct and importance-sampled estimators of the left side, the drift
objective on the right, SPSA over drift families, the Clark–Ocone optimal
drift, truncation experiments and assumption validators.
"""

import logging
import math
from functools import partial
from typing import List, Optional, Sequence

import numpy as np

from wienervar.core.exceptions import ConfigurationError, EvaluationError, NumericError, OptimizationError
from wienervar.core.parallel import block_generator, derive_seed
from wienervar.core.statistics import (
    combined_stderr,
    is_monotone,
    log_mean_exp_estimate,
    max_summand_share,
    mean_estimate,
)
from wienervar.models.drift import SimpleDrift
from wienervar.models.functional import FunctionalSpec
from wienervar.models.grid import PathBatch, TimeGrid, grid_for
from wienervar.schemas.drift import DriftFamily
from wienervar.schemas.estimate import Estimate
from wienervar.schemas.optimizer import OptimizerConfig, QuadConfig
from wienervar.schemas.reports import (
    AssumptionReport,
    EntropyReport,
    LowerBoundReport,
    LowerBoundRow,
    OptimizationIterate,
    OptimizationTrace,
    TruncationReport,
    TruncationRow,
)
from wienervar.services.drift_class import (
    bar_conjugate,
    clip_theta,
    family_initial_theta,
    instantiate_family,
)
from wienervar.services.wiener_core import doleans_terms, map_path_blocks, transform_batch

logger = logging.getLogger(__name__)

# Stream keeping SPSA perturbation signs independent of the path streams
PERTURBATION_STREAM = 101


# ---- left side ---------------------------------------------------------

def estimate_lhs_direct(
    F: FunctionalSpec,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
    d: int = 1,
) -> Estimate:
    """log of the Monte Carlo mean of e^{F(W)}; rejected paths contribute zero."""
    grid = grid or grid_for()
    log_terms = map_path_blocks(grid, d, n_paths, seed, F.evaluate_batch)
    estimate = log_mean_exp_estimate(log_terms, seed)
    share = max_summand_share(log_terms)
    if share > 0.1:
        logger.warning(f"One path carries {share:.1%} of the exponential mean of {F.label}; tail may be heavy")
    return estimate


def _importance_log_terms(F: FunctionalSpec, v: SimpleDrift, batch: PathBatch) -> np.ndarray:
    stochastic_integral, energy = doleans_terms(batch, v)
    return -stochastic_integral - 0.5 * energy + F.evaluate_batch(transform_batch(batch, v, sign=1))


def estimate_lhs_importance(
    F: FunctionalSpec,
    v: SimpleDrift,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> Estimate:
    """
    log E[e^F] from paths pushed by the control v.

    Each summand is E^{−v}_1(W)·e^{F(T^v(W))}, the Girsanov identity applied
    to −v. At the optimal drift the summands are constant for linear F.
    """
    grid = grid or grid_for()
    log_terms = map_path_blocks(grid, v.dimension, n_paths, seed, partial(_importance_log_terms, F, v))
    return log_mean_exp_estimate(log_terms, seed)


# ---- right side --------------------------------------------------------

def _objective_samples(F: FunctionalSpec, v: SimpleDrift, batch: PathBatch) -> np.ndarray:
    _, energy = doleans_terms(batch, v)
    return F.evaluate_batch(transform_batch(batch, v, sign=1)) - 0.5 * energy


def rhs_objective(
    F: FunctionalSpec,
    v: SimpleDrift,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> Estimate:
    """Monte Carlo of E[F(T^v(W)) − ½∫|v_s|² ds]."""
    grid = grid or grid_for()
    samples = map_path_blocks(grid, v.dimension, n_paths, seed, partial(_objective_samples, F, v))
    rejected = np.flatnonzero(samples == -np.inf)
    if rejected.size:
        raise EvaluationError(
            "functional rejected a shifted path; the drift objective is undefined",
            functional=F.label,
            drift=v.label,
            first_path_index=int(rejected[0]),
            count=int(rejected.size),
        )
    return mean_estimate(samples, seed)


def _weighted_objective_samples(F: FunctionalSpec, v: SimpleDrift, batch: PathBatch) -> np.ndarray:
    stochastic_integral, energy = doleans_terms(batch, v)
    return np.exp(stochastic_integral - 0.5 * energy) * (F.evaluate_batch(batch) - 0.5 * energy)


def relative_entropy_objective(
    F: FunctionalSpec,
    v: SimpleDrift,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> Estimate:
    """E[E^v_1·(F(W) − ½∫|v_s(W)|² ds)], the objective written under P^v."""
    grid = grid or grid_for()
    samples = map_path_blocks(grid, v.dimension, n_paths, seed, partial(_weighted_objective_samples, F, v))
    return mean_estimate(samples, seed)


# ---- SPSA ---------------------------------------------------------------

def _nonfinite_estimate(seed: int, n: int) -> Estimate:
    return Estimate(value=-math.inf, stderr=0.0, n_samples=n, seed=seed)


def _summarize(samples: np.ndarray, seed: int) -> Estimate:
    if not np.all(np.isfinite(samples)):
        return _nonfinite_estimate(seed, samples.size)
    return mean_estimate(samples, seed)


def optimize_drift(
    F: FunctionalSpec,
    family: DriftFamily,
    opt_config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    grid: Optional[TimeGrid] = None,
) -> OptimizationTrace:
    """
    Maximize rhs_objective over the family box by simultaneous-perturbation
    stochastic approximation.

    Iteration k draws one path batch and evaluates θ_k + c_kΔ, θ_k − c_kΔ and
    θ_k on it, so the gradient estimate sees common random numbers.
    """
    opt = opt_config or OptimizerConfig()
    grid = grid or grid_for()
    theta = family_initial_theta(family)
    signs = block_generator(seed, 0, stream=PERTURBATION_STREAM)
    iterates: List[OptimizationIterate] = []
    streak = 0
    step_rule = {"a": opt.a, "A": opt.big_a, "c": opt.c, "alpha": opt.alpha, "gamma": opt.gamma}

    def trace_so_far() -> OptimizationTrace:
        best = max(iterates, key=lambda it: it.objective.value)
        return OptimizationTrace(
            iterates=iterates, best_theta=best.theta, best_objective=best.objective, step_rule=step_rule
        )

    for k in range(opt.iterations):
        a_k, c_k = opt.step(k), opt.perturbation(k)
        delta = signs.choice([-1.0, 1.0], size=family.n_params)
        plus = clip_theta(family, theta + c_k * delta)
        minus = clip_theta(family, theta - c_k * delta)
        drifts = [instantiate_family(family, t) for t in (plus, minus, theta)]
        batch_seed = derive_seed(seed, k)

        def evaluate(batch: PathBatch) -> np.ndarray:
            with np.errstate(over="ignore", invalid="ignore"):
                return np.stack([_objective_samples(F, v, batch) for v in drifts], axis=1)

        samples = map_path_blocks(grid, family.dimension, opt.n_paths_per_eval, batch_seed, evaluate)
        y_plus, y_minus = (float(np.mean(samples[:, j])) for j in (0, 1))
        current = _summarize(samples[:, 2], batch_seed)
        iterates.append(OptimizationIterate(iteration=k, theta=theta.tolist(), objective=current))

        if not (math.isfinite(y_plus) and math.isfinite(y_minus)):
            streak += 1
            logger.warning(f"Non-finite SPSA objective at iteration {k} ({streak} in a row)")
            if streak >= opt.max_nonfinite_streak:
                raise OptimizationError(
                    "drift optimization diverged: objective repeatedly non-finite",
                    trace=trace_so_far(),
                    iteration=k,
                )
            continue
        streak = 0
        spread = plus - minus
        gradient = np.where(spread != 0.0, (y_plus - y_minus) / np.where(spread != 0.0, spread, 1.0), 0.0)
        theta = clip_theta(family, theta + a_k * gradient)

    trace = trace_so_far()
    best = instantiate_family(family, trace.best_theta)
    trace.final_objective = rhs_objective(F, best, opt.final_n_paths, derive_seed(seed, opt.iterations + 1), grid)
    logger.info(
        f"SPSA on {F.label}: best θ={np.round(trace.best_theta, 4).tolist()} "
        f"final objective {trace.final_objective.value:.6f} ± {trace.final_objective.stderr:.6f}"
    )
    return trace


# ---- Clark–Ocone drift -------------------------------------------------------

def _knot_index(times: np.ndarray, t: float) -> int:
    k = int(np.argmin(np.abs(times - t)))
    return k if abs(times[k] - t) <= 1e-12 else -1


def _clark_ocone_at_order(F: FunctionalSpec, s: float, known: np.ndarray, x: np.ndarray, order: int) -> np.ndarray:
    """
    E[e^F Σ_{t_j > s} ∂_j f | W(s) = x, past] / E[e^F | ...] by tensor
    Gauss–Hermite quadrature over the unknown knot values.
    """
    cyl = F.cylinder
    knots = cyl.knots
    unknown = np.flatnonzero(knots > s + 1e-12)
    if unknown.size == 0:
        return np.zeros(x.size)
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    n, m, u = x.size, knots.size, unknown.size
    shape = (n,) + (order,) * u
    args = np.empty(shape + (m,))
    for j in range(m):
        if j not in unknown:
            args[..., j] = known[:, j].reshape((n,) + (1,) * u)
    level = x.reshape((n,) + (1,) * u)
    previous = s
    log_weight = np.zeros((1,) + (order,) * u)
    for axis, j in enumerate(unknown):
        step = np.sqrt(knots[j] - previous)
        z = nodes.reshape((1,) + tuple(order if a == axis else 1 for a in range(u)))
        level = level + step * z
        args[..., j] = np.broadcast_to(level, shape)
        log_weight = log_weight + np.log(weights).reshape(z.shape)
        previous = knots[j]
    log_terms = cyl.f(args) + log_weight
    grad = cyl.grad_f(args)
    drift_terms = np.sum(grad[..., unknown], axis=-1)
    flat = log_terms.reshape(n, -1)
    flat = flat - np.max(flat, axis=1, keepdims=True)
    tilt = np.exp(flat)
    return np.sum(tilt * drift_terms.reshape(n, -1), axis=1) / np.sum(tilt, axis=1)


def clark_ocone_value(
    F: FunctionalSpec,
    s: float,
    x,
    known=None,
    quad_config: Optional[QuadConfig] = None,
) -> np.ndarray:
    """
    Optimal drift at time s for current state x.

    `known` holds w(t_j) for knots t_j ≤ s, shape (n, m); entries for later
    knots are ignored.
    """
    _check_cylinder(F)
    quad = quad_config or QuadConfig()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = F.cylinder.knots.size
    known = np.zeros((x.size, m)) if known is None else np.asarray(known, dtype=float).reshape(x.size, m)
    previous = _clark_ocone_at_order(F, s, known, x, quad.orders[0])
    for order in quad.orders[1:]:
        current = _clark_ocone_at_order(F, s, known, x, order)
        change = np.max(np.abs(current - previous) / np.maximum(np.abs(current), 1.0))
        if change <= quad.rtol:
            return current
        previous = current
    raise NumericError(
        "Gauss–Hermite quadrature did not converge at the highest order",
        time=float(s),
        max_order=quad.orders[-1],
        relative_change=float(change),
    )


def _check_cylinder(F: FunctionalSpec) -> None:
    if F.kind != "cylinder" or F.cylinder is None:
        raise ConfigurationError("the Clark–Ocone drift needs a cylinder functional", kind=F.kind)
    if F.cylinder.knots.size > 2:
        raise ConfigurationError("cylinder functionals are limited to at most two knots", m=int(F.cylinder.knots.size))


def _clark_ocone_rule(F: FunctionalSpec, quad: QuadConfig, times: np.ndarray, past: np.ndarray) -> np.ndarray:
    s = float(times[-1])
    knots = F.cylinder.knots
    known = np.zeros((past.shape[0], knots.size))
    for j, t in enumerate(knots):
        if t <= s + 1e-12:
            idx = _knot_index(times, t)
            if idx < 0:
                raise ConfigurationError("cylinder knot is not a grid knot", t=float(t))
            known[:, j] = past[:, idx, 0]
    return clark_ocone_value(F, s, past[:, -1, 0], known, quad)[:, None]


def clark_ocone_drift(
    F: FunctionalSpec,
    quad_config: Optional[QuadConfig] = None,
    grid: Optional[TimeGrid] = None,
) -> SimpleDrift:
    """
    The optimal feedback u_s = E[e^F ∇f | F_s]/E[e^F | F_s] as a simple drift
    with one level per grid step.

    The drift is a feedback of the controlled path; bar_conjugate turns it
    into a control of the noise path.
    """
    _check_cylinder(F)
    quad = quad_config or QuadConfig()
    grid = grid or grid_for()
    grid.indices_of(F.cylinder.knots)
    rule = partial(_clark_ocone_rule, F, quad)
    return SimpleDrift(
        knots=grid.knots,
        feedbacks=tuple(rule for _ in range(grid.n_steps)),
        dimension=1,
        label=f"clark-ocone({F.label})",
    )


def clark_ocone_objective(
    F: FunctionalSpec,
    n_paths: int,
    seed: int,
    quad_config: Optional[QuadConfig] = None,
    grid: Optional[TimeGrid] = None,
) -> Estimate:
    """rhs_objective of the Clark–Ocone control, i.e. of bar_conjugate(u)."""
    grid = grid or grid_for()
    u = clark_ocone_drift(F, quad_config, grid)
    return rhs_objective(F, bar_conjugate(u), n_paths, seed, grid)


# ---- truncation and assumptions ---------------------------------------------

def truncation_sweep(
    F: FunctionalSpec,
    M_list: Sequence[Optional[float]],
    N_list: Sequence[Optional[float]],
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
    d: int = 1,
) -> TruncationReport:
    """
    log E[e^{(F∨(−N))∧M}] for every (N, M) pair on one path sample.

    None stands for an inactive truncation. Values must be nondecreasing in
    M and nonincreasing in N.
    """
    grid = grid or grid_for()
    caps = sorted(M_list, key=lambda m: math.inf if m is None else m) or [None]
    floors = sorted(N_list, key=lambda n: math.inf if n is None else n) or [None]
    values = map_path_blocks(grid, d, n_paths, seed, F.evaluate_batch)
    rows: List[TruncationRow] = []
    table = {}
    for floor in floors:
        for cap in caps:
            truncated = values
            if floor is not None:
                truncated = np.maximum(truncated, -floor)
            if cap is not None:
                truncated = np.minimum(truncated, cap)
            estimate = log_mean_exp_estimate(truncated, seed)
            table[(floor, cap)] = estimate
            rows.append(TruncationRow(cap_m=cap, floor_n=floor, estimate=estimate))

    def monotone(series: List[Estimate], increasing: bool) -> bool:
        return is_monotone([e.value for e in series], [e.stderr for e in series], increasing)

    in_m = all(monotone([table[(fl, c)] for c in caps], True) for fl in floors)
    in_n = all(monotone([table[(fl, c)] for fl in floors], False) for c in caps)
    return TruncationReport(rows=rows, monotone_in_m=in_m, monotone_in_n=in_n)


def validate_assumptions(
    F: FunctionalSpec,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
    d: int = 1,
) -> AssumptionReport:
    """Tail diagnostics for E[e^F], the E[F₋^{1+δ}] moment and the declared growth bound."""
    grid = grid or grid_for()

    def columns(batch: PathBatch) -> np.ndarray:
        return np.stack([F.evaluate_batch(batch), batch.sup_norm()], axis=1)

    data = map_path_blocks(grid, d, n_paths, seed, columns)
    values, sup_norms = data[:, 0], data[:, 1]
    accepted = np.isfinite(values)
    negative = np.maximum(-values[accepted], 0.0)

    moment = None
    if F.delta is not None:
        moment = mean_estimate(negative ** (1.0 + F.delta), seed)

    report = AssumptionReport(
        delta=F.delta,
        log_mean_exp=log_mean_exp_estimate(values, seed),
        max_summand_share=max_summand_share(values),
        negative_part_moment=moment,
        rejected_paths=int(np.sum(~accepted)),
    )
    if F.growth is not None:
        lhs = np.log1p(negative)
        rhs = F.growth.bound(sup_norms[accepted])
        violations = int(np.sum(lhs > rhs + 1e-12))
        report.growth_checked = True
        report.growth_holds = violations == 0
        report.growth_violations = violations
        if violations:
            logger.warning(f"Declared growth bound fails on {violations} sampled paths of {F.label}")
    return report


# ---- property suites ----------------------------------------------------

def _sigmas(margin: float, stderr: float) -> float:
    """Margin in units of its standard error; exact estimates give 0 or ±inf."""
    if stderr > 0:
        return margin / stderr
    if margin == 0:
        return 0.0
    return math.copysign(math.inf, margin)


def lower_bound_suite(
    F: FunctionalSpec,
    drifts: Sequence[SimpleDrift],
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> LowerBoundReport:
    """
    rhs_objective(v) ≤ log E[e^F] for every drift, within three combined
    standard errors.

    Each drift gets its own path seed so the two estimates are independent.
    """
    if not drifts:
        raise ConfigurationError("the lower-bound suite needs at least one drift")
    grid = grid or grid_for()
    lhs = estimate_lhs_direct(F, n_paths, seed, grid, d=drifts[0].dimension)
    rows = []
    for i, v in enumerate(drifts):
        objective = rhs_objective(F, v, n_paths, derive_seed(seed, i + 1), grid)
        se = combined_stderr(lhs, objective)
        margin = lhs.value - objective.value
        rows.append(
            LowerBoundRow(
                drift=v.label, objective=objective, margin=margin, combined_stderr=se, violated=margin < -3.0 * se
            )
        )
    worst = min(rows, key=lambda r: _sigmas(r.margin, r.combined_stderr))
    n_violations = sum(r.violated for r in rows)
    if n_violations:
        logger.error(f"Lower bound violated by {n_violations} of {len(rows)} drifts for {F.label}")
    return LowerBoundReport(
        lhs=lhs,
        rows=rows,
        worst_margin=worst.margin,
        worst_margin_sigmas=_sigmas(worst.margin, worst.combined_stderr),
        n_violations=n_violations,
    )


def entropy_identity_check(
    v: SimpleDrift,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> EntropyReport:
    """
    E^v[log E^v_1] against ½E^v[∫|v|² ds].

    Expectations under P^v are realized by pulling back through v̄: with B
    Brownian, W = T^{v̄}(B) has the law P^v.
    """
    grid = grid or grid_for()
    pullback = bar_conjugate(v)

    def columns(batch: PathBatch) -> np.ndarray:
        tilted = transform_batch(batch, pullback, sign=1)
        stochastic_integral, energy = doleans_terms(tilted, v)
        return np.stack([stochastic_integral - 0.5 * energy, 0.5 * energy], axis=1)

    data = map_path_blocks(grid, v.dimension, n_paths, seed, columns)
    lhs = mean_estimate(data[:, 0], seed)
    rhs = mean_estimate(data[:, 1], seed)
    se = combined_stderr(lhs, rhs)
    difference = lhs.value - rhs.value
    return EntropyReport(lhs=lhs, rhs=rhs, difference=difference, combined_stderr=se, agrees=abs(difference) <= 3.0 * se)


__all__ = [
    "estimate_lhs_direct",
    "estimate_lhs_importance",
    "rhs_objective",
    "relative_entropy_objective",
    "optimize_drift",
    "clark_ocone_value",
    "clark_ocone_drift",
    "clark_ocone_objective",
    "truncation_sweep",
    "validate_assumptions",
    "lower_bound_suite",
    "entropy_identity_check",
]
