"""
Log-concavity of λ ↦ log E[e^{G(W, λ)}] as a statistical scan, the (B2)
hypothesis checker, the conditional decomposition w = w^l + ⟨l, w⟩·l and the
Brascamp–Lieb check on Wiener space.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from wienervar.core.config import settings
from wienervar.core.exceptions import (
    ConfigurationError,
    DomainError,
    EstimationError,
    EvaluationError,
    WienerVarError,
)
from wienervar.core.parallel import block_generator
from wienervar.core.statistics import (
    effective_sample_size,
    grouped_jackknife_stderr,
    log_mean_exp_estimate,
    normalized_weights,
)
from wienervar.models.functional import FunctionalSpec, LinearFunctional, ParamFunctionalSpec, PsiFunction
from wienervar.models.grid import PathBatch, TimeGrid, WienerPath, grid_for
from wienervar.schemas.estimate import Estimate
from wienervar.schemas.reports import B2Report, ConcavityReport, MidpointDeficit, WienerBLReport, WienerBLRow
from wienervar.services.wiener_core import map_path_blocks, sample_paths

logger = logging.getLogger(__name__)

B2_STREAM = 202
DEFICIT_SLACK = 1e-12
NORMALIZATION_TOLERANCE = 1e-12


# ---- concavity scan -----------------------------------------------------

def _midpoint_pairs(n_points: int) -> List[Tuple[int, int]]:
    adjacent = [(i, i + 1) for i in range(n_points - 1)]
    skip_one = [(i, i + 2) for i in range(n_points - 2)]
    return adjacent + skip_one


def scan_log_partition(
    G: ParamFunctionalSpec,
    lambda_grid: Sequence,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
    d: int = 1,
) -> ConcavityReport:
    """
    g(λ) = log E[e^{G(W,λ)}] on the grid and its midpoint deficits
    g((λ_i+λ_j)/2) − ½g(λ_i) − ½g(λ_j) for adjacent and skip-one pairs.

    Every λ, midpoints included, sees the same paths. Deficit standard errors
    come from the paired per-path linearization of the three log-means.
    """
    grid = grid or grid_for()
    points = [np.atleast_1d(np.asarray(lam, dtype=float)) for lam in lambda_grid]
    if len(points) < 2:
        raise ConfigurationError("a concavity scan needs at least two lambda values")
    for lam in points:
        if lam.shape != G.lambda_low.shape or not G.contains(lam):
            raise ConfigurationError("lambda outside the functional's domain", lam=lam.tolist())
    pairs = _midpoint_pairs(len(points))
    midpoints = [0.5 * (points[i] + points[j]) for i, j in pairs]
    evaluation_points = points + midpoints

    def columns(batch: PathBatch) -> np.ndarray:
        out = np.empty((batch.n_paths, len(evaluation_points)))
        for p, lam in enumerate(evaluation_points):
            try:
                out[:, p] = G.evaluate_batch(batch, lam)
            except EvaluationError:
                out[:, p] = np.nan
        return out

    table = map_path_blocks(grid, d, n_paths, seed, columns)
    failures: List[str] = []
    estimates: List[Optional[Estimate]] = []
    linearized: List[Optional[np.ndarray]] = []
    for p, lam in enumerate(evaluation_points):
        column = table[:, p]
        try:
            if np.any(np.isnan(column)):
                raise EvaluationError("G produced an invalid value", lam=lam.tolist())
            estimate = log_mean_exp_estimate(column, seed)
            scaled = np.exp(column - (estimate.value))
            estimates.append(estimate)
            linearized.append(scaled)
        except WienerVarError as e:
            failures.append(f"lambda={lam.tolist()}: {e.detail}")
            estimates.append(None)
            linearized.append(None)

    deficits: List[MidpointDeficit] = []
    for q, (i, j) in enumerate(pairs):
        m = len(points) + q
        if estimates[m] is None or estimates[i] is None or estimates[j] is None:
            continue
        deficit = estimates[m].value - 0.5 * estimates[i].value - 0.5 * estimates[j].value
        per_path = linearized[m] - 0.5 * linearized[i] - 0.5 * linearized[j]
        stderr = float(np.std(per_path, ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
        deficits.append(
            MidpointDeficit(lambda_i=points[i].tolist(), lambda_j=points[j].tolist(), deficit=deficit, stderr=stderr)
        )

    if failures:
        verdict = "inconclusive"
        logger.warning(f"Concavity scan of {G.label} inconclusive: {len(failures)} lambda values failed")
    elif all(d.deficit >= -3.0 * d.stderr - DEFICIT_SLACK for d in deficits):
        verdict = "pass"
    else:
        verdict = "fail"
    return ConcavityReport(
        lambda_grid=[lam.tolist() for lam in points],
        values=estimates[: len(points)],
        deficits=deficits,
        failures=failures,
        verdict=verdict,
    )


# ---- (B2) ------------------------------------------------------------------

def check_b2_hypothesis(
    G: ParamFunctionalSpec,
    n_triples: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
    d: int = 1,
    slack: Optional[float] = None,
) -> B2Report:
    """
    Pointwise test of

        G(θw₁+(1−θ)w₂, θλ₁+(1−θ)λ₂) ≥ θG(w₁,λ₁) + (1−θ)G(w₂,λ₂) − ½θ(1−θ)|w₁−w₂|²_H

    with w₁ = w₂ + h, h a random Cameron–Martin path and θ cycling through
    ¼, ½, ¾.
    """
    grid = grid or grid_for()
    slack = settings.MARGINAL_SLACK if slack is None else slack
    rng = block_generator(seed, 0, stream=B2_STREAM)
    w2 = sample_paths(grid, d, n_triples, seed).values

    level = rng.normal(0.0, 2.0, size=(n_triples, 1, d))
    roughness = rng.uniform(0.0, 1.0, size=(n_triples, 1, 1))
    slopes = level + roughness * rng.standard_normal((n_triples, grid.n_steps, d))
    h = np.zeros_like(w2)
    h[:, 1:, :] = np.cumsum(slopes * grid.dt[None, :, None], axis=1)
    h_norm_sq = np.sum(np.sum(slopes ** 2, axis=2) * grid.dt[None, :], axis=1)
    w1 = w2 + h

    low, high = G.lambda_low, G.lambda_high
    lam1 = rng.uniform(low, high, size=(n_triples, low.size))
    lam2 = rng.uniform(low, high, size=(n_triples, low.size))
    theta = np.array([0.25, 0.5, 0.75])[np.arange(n_triples) % 3]

    slacks = np.empty(n_triples)
    for t in range(n_triples):
        th = theta[t]
        mixed = PathBatch(grid, (th * w1[t] + (1.0 - th) * w2[t])[None])
        lhs = G.evaluate_batch(mixed, th * lam1[t] + (1.0 - th) * lam2[t])[0]
        g1 = G.evaluate_batch(PathBatch(grid, w1[t][None]), lam1[t])[0]
        g2 = G.evaluate_batch(PathBatch(grid, w2[t][None]), lam2[t])[0]
        rhs = th * g1 + (1.0 - th) * g2 - 0.5 * th * (1.0 - th) * h_norm_sq[t]
        slacks[t] = lhs - rhs

    violated = slacks < -slack
    worst = int(np.argmin(slacks))
    example = None
    if np.any(violated):
        first = int(np.flatnonzero(violated)[0])
        example = {
            "theta": float(theta[first]),
            "slack": float(slacks[first]),
            "h_norm_sq": float(h_norm_sq[first]),
            "h_at_1": float(np.linalg.norm(h[first, -1])),
        }
        logger.info(f"(B2) fails for {G.label} on {int(np.sum(violated))} of {n_triples} triples")
    return B2Report(
        n_triples=n_triples,
        n_violations=int(np.sum(violated)),
        worst_slack=float(slacks[worst]),
        holds=not bool(np.any(violated)),
        example_violation=example,
    )


# ---- conditional decomposition ---------------------------------------------

def _check_normalized(l: LinearFunctional) -> None:
    if l.h_norm == 0.0:
        raise DomainError("the zero functional has no conditional decomposition")
    if abs(l.h_norm - 1.0) > NORMALIZATION_TOLERANCE:
        raise ConfigurationError("normalize l to |l|_H = 1 before decomposing", h_norm=l.h_norm)


def decompose_batch(batch: PathBatch, l: LinearFunctional) -> Tuple[PathBatch, np.ndarray]:
    _check_normalized(l)
    if not batch.grid.same_as(l.representer.grid):
        raise ConfigurationError("paths and l live on different grids")
    z = l.pairing(batch.values)
    residual = batch.values - z[:, None, None] * l.representer.values()[None, :, :]
    return PathBatch(batch.grid, residual), z


def conditional_decompose(path: WienerPath, l: LinearFunctional) -> Tuple[WienerPath, float]:
    """(w^l, z) with z = ⟨l, w⟩ and w^l = w − z·l, independent Gaussian pieces under Wiener measure."""
    residual, z = decompose_batch(path.as_batch(), l)
    return residual.path(0), float(z[0])


def conditional_slice(F: FunctionalSpec, l: LinearFunctional, half_width: float = 10.0) -> ParamFunctionalSpec:
    """G(w, z) = F(w^l + z·l): F restricted to the line through w^l along l."""
    unit = l.normalized()
    direction = unit.representer.values()

    def evaluator(batch: PathBatch, lam: np.ndarray) -> np.ndarray:
        residual, _ = decompose_batch(batch, unit)
        return F.evaluate_batch(PathBatch(batch.grid, residual.values + lam[0] * direction[None, :, :]))

    return ParamFunctionalSpec(
        evaluator=evaluator,
        lambda_low=[-half_width],
        lambda_high=[half_width],
        delta=F.delta,
        label=f"slice({F.label})",
    )


# ---- Brascamp–Lieb on Wiener space ------------------------------------------

def gaussian_psi_moment(psi: PsiFunction, scale: float) -> float:
    """E[ψ(scale·Z)] for standard normal Z by adaptive quadrature."""
    value, _ = integrate.quad(lambda z: psi(scale * z) * stats.norm.pdf(z), -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)
    return float(value)


def terminal_tilted_moment(F: FunctionalSpec, psi: PsiFunction, scale: float = 1.0) -> float:
    """
    E_Q[ψ(scale·(W(1) − E_Q W(1)))] for a terminal functional F, by quadrature
    against e^{F}φ. Cross-checks the importance-sampled side of
    wiener_bl_check when l is scale·t.
    """
    if F.terminal is None:
        raise ConfigurationError("the quadrature oracle needs a terminal functional", functional=F.label)

    def tilt(x: float) -> float:
        return math.exp(float(F.terminal(np.asarray(x)))) * stats.norm.pdf(x)

    def moment(fn) -> float:
        value, _ = integrate.quad(lambda x: fn(x) * tilt(x), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11, limit=200)
        return float(value)

    mass = moment(lambda x: 1.0)
    if not mass > 0:
        raise EstimationError("the tilt e^F has no mass", functional=F.label)
    center = moment(lambda x: x) / mass
    return moment(lambda x: float(psi(scale * (x - center)))) / mass


def wiener_bl_check(
    F: FunctionalSpec,
    l: LinearFunctional,
    psi_list: Sequence[PsiFunction],
    n_paths: int,
    seed: int,
) -> WienerBLReport:
    """
    E_Q[ψ(⟨l,W⟩ − E_Q⟨l,W⟩)] ≤ E[ψ(|l|_H Z)] for Q ∝ e^F·Wiener.

    The tilted side is self-normalized importance sampling with weights
    e^{F(W)}; its standard error is a grouped jackknife that refits the
    centering on every replicate.
    """
    if l.h_norm == 0.0:
        raise DomainError("l must be nonzero")
    grid = l.representer.grid

    def columns(batch: PathBatch) -> np.ndarray:
        return np.stack([F.evaluate_batch(batch), l.pairing(batch.values)], axis=1)

    data = map_path_blocks(grid, l.representer.dimension, n_paths, seed, columns)
    log_weights, z = data[:, 0], data[:, 1]
    weights = normalized_weights(log_weights)
    ess = effective_sample_size(weights)
    fraction = ess / n_paths
    if fraction < settings.ESS_MIN_FRACTION:
        raise EstimationError("importance weights degenerate", ess=ess, n_paths=n_paths)
    if fraction < 0.1:
        logger.warning(f"Effective sample size {ess:.0f} of {n_paths} for tilt {F.label}")
    tilted_mean = float(np.sum(weights * z))

    def tilted_moment(psi: PsiFunction, mask: np.ndarray) -> float:
        w = normalized_weights(log_weights[mask])
        center = np.sum(w * z[mask])
        return float(np.sum(w * psi(z[mask] - center)))

    rows = []
    for psi in psi_list:
        lhs = tilted_moment(psi, np.ones(n_paths, dtype=bool))
        stderr = grouped_jackknife_stderr(lambda mask: tilted_moment(psi, mask), n_paths)
        rhs = gaussian_psi_moment(psi, l.h_norm)
        rows.append(WienerBLRow(psi=psi.name, lhs=lhs, lhs_stderr=stderr, rhs=rhs, holds=lhs <= rhs + 3.0 * stderr))
    return WienerBLReport(
        h_norm=l.h_norm,
        tilted_mean=tilted_mean,
        effective_sample_size=ess,
        ess_fraction=fraction,
        rows=rows,
        holds=all(r.holds for r in rows),
    )


__all__ = [
    "scan_log_partition",
    "check_b2_hypothesis",
    "decompose_batch",
    "conditional_decompose",
    "conditional_slice",
    "gaussian_psi_moment",
    "terminal_tilted_moment",
    "wiener_bl_check",
]
