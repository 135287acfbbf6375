"""
Brascamp–Lieb certification for a nonconvex 1-D potential.

X has density e^{−V}·φ_σ/Z and Y ~ N(0, σ²). Two sufficient conditions
compare log Z with infima over D_V = {V'' ≤ 0}:

    inf_{D_V} U_V ≥ log Z,   U_V(x) = ½σ²V'(x)² + xV'(x) − V(x)
    inf_{D_V} h   ≥ log Z,   h(x)   = −x²/(2σ²) − V(x)

Either one yields g' ≤ σ for the Bass map g = F_X⁻¹∘Φ, hence
E[ψ(X − EX)] ≤ E[ψ(Y)] for convex ψ. Everything here is deterministic
quadrature.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize, stats

from wienervar.core.config import settings
from wienervar.core.exceptions import DomainError, InequalityViolation, NumericError
from wienervar.models.functional import PsiFunction
from wienervar.models.potential import NonconvexRegion, Potential1D
from wienervar.schemas.reports import (
    BLConditionReport,
    CapitalGReport,
    DoubleWellRow,
    GPrimeReport,
    MomentReport,
    MomentRow,
)
from wienervar.services.prekopa import gaussian_psi_moment

logger = logging.getLogger(__name__)

REGION_SCAN_POINTS = 4096
REGION_BAND = 1e-12
REGION_XTOL = 1e-11
INFIMUM_SCAN_POINTS = 2048
INFIMUM_XTOL = 1e-10
TABLE_CELLS = 4096
CELL_ORDER = 16
TAIL_WARNING = 1e-12
QUAD_RTOL = 1e-10
BISECTION_STEPS = 48
DENSITY_FLOOR = 1e-300


# ---- partition function --------------------------------------------------

def log_density_unnormalized(p: Potential1D, x) -> np.ndarray:
    """−V(x) + log φ_σ(x)."""
    x = np.asarray(x, dtype=float)
    return -p.V(x) + stats.norm.logpdf(x, scale=p.sigma)


def tail_remainder(p: Potential1D) -> Optional[float]:
    """Gaussian mass of e^{−V}φ_σ outside [−R, R] bounded through the linear floor."""
    if p.linear_floor is None:
        return None
    a, b = p.linear_floor
    s, R = p.sigma, p.half_width
    scale = math.exp(-b + 0.5 * a * a * s * s)
    return scale * (stats.norm.sf((R + a * s * s) / s) + stats.norm.cdf((-R + a * s * s) / s))


def _quad(fn: Callable[[float], float], lo: float, hi: float, points=None, scale: float = 0.0) -> float:
    """Adaptive Gauss–Kronrod; `scale` sets the magnitude below which errors are judged absolutely."""
    value, abserr = integrate.quad(fn, lo, hi, points=points, limit=400, epsabs=1e-15, epsrel=1e-13)
    if not math.isfinite(value) or abserr > QUAD_RTOL * max(abs(value), scale) + 1e-13:
        raise NumericError("adaptive quadrature did not reach its tolerance", value=value, abserr=abserr)
    return float(value)


def _breakpoints(p: Potential1D) -> List[float]:
    return [x for x in (-p.sigma, 0.0, p.sigma) if -p.half_width < x < p.half_width]


def partition_z(p: Potential1D) -> float:
    """
    log Z with Z = ∫ φ_σ e^{−V} by adaptive Gauss–Kronrod on [−R, R] plus the
    floor's tail bound for the mass outside.

    The tail bound is an upper bound, so the result never understates log Z.
    Without a floor only the mass on [−R, R] is counted.
    """
    R = p.half_width
    z = _quad(lambda x: math.exp(float(log_density_unnormalized(p, x))), -R, R, _breakpoints(p))
    if z <= 0:
        raise NumericError("partition function vanished on [-R, R]", potential=p.label)
    remainder = tail_remainder(p)
    if remainder is None:
        logger.warning(f"{p.label} has no linear floor; mass outside [-{R}, {R}] is uncertified")
        return math.log(z)
    if remainder > TAIL_WARNING * z:
        logger.warning(f"Tail remainder {remainder:.3e} of {p.label} exceeds the certified budget")
    return math.log(z + remainder)


# ---- U_V, D_V and infima -------------------------------------------------------

def u_potential(p: Potential1D, x):
    """U_V(x) = ½σ²V'(x)² + xV'(x) − V(x)."""
    x = np.asarray(x, dtype=float)
    dv = p.dV(x)
    return 0.5 * p.sigma ** 2 * dv ** 2 + x * dv - p.V(x)


def h_potential(p: Potential1D, x):
    """−x²/(2σ²) − V(x), pointwise below U_V."""
    x = np.asarray(x, dtype=float)
    return -(x ** 2) / (2.0 * p.sigma ** 2) - p.V(x)


def nonconvex_region(p: Potential1D) -> NonconvexRegion:
    """
    {V'' ≤ 0} on [−R, R] by a dense scan and bisection of each sign change.

    Tangential zeros of V'' strictly between scan points are not detected.
    """
    R = p.half_width
    xs = np.linspace(-R, R, REGION_SCAN_POINTS)
    inside = np.asarray(p.d2V(xs), dtype=float) <= REGION_BAND
    if not np.any(inside):
        return NonconvexRegion([])

    def boundary(lo: float, hi: float) -> float:
        return float(optimize.bisect(lambda x: float(p.d2V(x)) - REGION_BAND, lo, hi, xtol=REGION_XTOL))

    intervals = []
    change = np.flatnonzero(np.diff(inside.astype(int)))
    starts = [0] if inside[0] else []
    stops = []
    for i in change:
        if inside[i + 1]:
            starts.append(i + 1)
        else:
            stops.append(i)
    if inside[-1]:
        stops.append(xs.size - 1)
    for s, e in zip(starts, stops):
        lo = -R if s == 0 else boundary(xs[s - 1], xs[s])
        hi = R if e == xs.size - 1 else boundary(xs[e], xs[e + 1])
        intervals.append((lo, hi))
    return NonconvexRegion(intervals)


def _interval_infimum(fn: Callable, lo: float, hi: float) -> Tuple[float, float]:
    """Dense scan then golden section; endpoints always compete, ties go to the smaller |x|."""
    if hi - lo <= INFIMUM_XTOL:
        x = lo if abs(lo) <= abs(hi) else hi
        return float(fn(x)), x
    xs = np.linspace(lo, hi, INFIMUM_SCAN_POINTS)
    values = np.asarray(fn(xs), dtype=float)
    i = int(np.argmin(values))
    candidates = [(float(values[0]), float(xs[0])), (float(values[-1]), float(xs[-1])), (float(values[i]), float(xs[i]))]
    if 0 < i < xs.size - 1 and values[i] < min(values[i - 1], values[i + 1]):
        result = optimize.minimize_scalar(
            lambda x: float(fn(x)),
            bracket=(xs[i - 1], xs[i], xs[i + 1]),
            method="golden",
            options={"xtol": INFIMUM_XTOL},
        )
        x = float(np.clip(result.x, lo, hi))
        candidates.append((float(fn(x)), x))
    best = min(v for v, _ in candidates)
    tied = [(v, x) for v, x in candidates if v <= best + 1e-15 * max(1.0, abs(best))]
    value, x = min(tied, key=lambda c: abs(c[1]))
    return value, x


def region_infimum(fn: Callable, region: NonconvexRegion) -> Tuple[float, Optional[float]]:
    """Infimum over a union of intervals; +inf and no argmin when the region is empty."""
    best, arg = math.inf, None
    for lo, hi in region.intervals:
        value, x = _interval_infimum(fn, lo, hi)
        if value < best or (value == best and arg is not None and abs(x) < abs(arg)):
            best, arg = value, x
    return best, arg


def certify_conditions(p: Potential1D) -> BLConditionReport:
    log_z = partition_z(p)
    region = nonconvex_region(p)
    inf_u, arg_u = region_infimum(lambda x: u_potential(p, x), region)
    inf_h, arg_h = region_infimum(lambda x: h_potential(p, x), region)
    slack = settings.MARGINAL_SLACK
    cond2 = inf_h >= log_z - slack
    cond1 = inf_u >= log_z - slack or cond2
    report = BLConditionReport(
        log_z=log_z,
        tail_remainder=tail_remainder(p),
        region=region.intervals,
        inf_u_on_d=inf_u,
        inf_h_on_d=inf_h,
        argmin_u=arg_u,
        argmin_h=arg_h,
        cond_inf1_holds=cond1,
        cond_inf2_holds=cond2,
        cond_inf1_marginal=abs(inf_u - log_z) <= slack,
        cond_inf2_marginal=abs(inf_h - log_z) <= slack,
    )
    logger.info(
        f"{p.label}: log Z={log_z:.6f}, inf U={inf_u:.6g}, inf h={inf_h:.6g}, "
        f"certified={'yes' if report.certified else 'no'}"
    )
    return report


# ---- F_X and the Bass map ------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(CELL_ORDER)


@dataclass(eq=False)
class BassEmbedding:
    """
    Tabulated F_X on [−R, R] and the map g = F_X⁻¹∘Φ.

    Mass to the left and to the right of every knot is kept separately so
    both tails keep full relative precision.
    """
    potential: Potential1D
    knots: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    log_z: float
    x_grid: Optional[np.ndarray] = None
    g_values: Optional[np.ndarray] = None
    gprime_values: Optional[np.ndarray] = None
    clamped_points: int = 0

    @property
    def total(self) -> float:
        return float(self.lower[-1])

    def density(self, y) -> np.ndarray:
        """F_X'(y), normalized by the tabulated mass."""
        y = np.asarray(y, dtype=float)
        return np.exp(log_density_unnormalized(self.potential, y) - math.log(self.total))

    def _partial(self, cell: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Unnormalized mass from knots[cell] to x, with x inside that cell."""
        left = self.knots[cell]
        half = 0.5 * (x - left)
        nodes = left[:, None] + half[:, None] * (_GL_NODES[None, :] + 1.0)
        values = np.exp(log_density_unnormalized(self.potential, nodes))
        return half * np.sum(values * _GL_WEIGHTS[None, :], axis=1)

    def _cell(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.knots, x, side="right") - 1, 0, self.knots.size - 2)

    def cdf(self, x) -> np.ndarray:
        x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), self.knots[0], self.knots[-1])
        cell = self._cell(x)
        return (self.lower[cell] + self._partial(cell, x)) / self.total

    def sf(self, x) -> np.ndarray:
        x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), self.knots[0], self.knots[-1])
        cell = self._cell(x)
        return (self.upper[cell] - self._partial(cell, x)) / self.total

    def quantile(self, p_lower, p_upper=None) -> np.ndarray:
        """
        F_X⁻¹ by bisection inside the table cell plus one Newton step.

        p_upper = 1 − p_lower may be passed separately to keep precision in
        the right tail.
        """
        p_lower = np.atleast_1d(np.asarray(p_lower, dtype=float))
        p_upper = 1.0 - p_lower if p_upper is None else np.atleast_1d(np.asarray(p_upper, dtype=float))
        out = np.empty_like(p_lower)
        left_side = p_lower <= 0.5
        for use_lower, mask in ((True, left_side), (False, ~left_side)):
            if not np.any(mask):
                continue
            if use_lower:
                mass = p_lower[mask] * self.total
                cell = np.clip(np.searchsorted(self.lower, mass, side="right") - 1, 0, self.knots.size - 2)
                target = mass - self.lower[cell]
            else:
                mass = p_upper[mask] * self.total
                cell = np.clip(np.searchsorted(-self.upper, -mass, side="left") - 1, 0, self.knots.size - 2)
                target = self.upper[cell] - mass
            lo, hi = self.knots[cell].copy(), self.knots[cell + 1].copy()
            for _ in range(BISECTION_STEPS):
                mid = 0.5 * (lo + hi)
                below = self._partial(cell, mid) < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            x = 0.5 * (lo + hi)
            dens = self.density(x)
            ok = dens > DENSITY_FLOOR
            if use_lower:
                residual = self.cdf(x) - p_lower[mask]
            else:
                residual = p_upper[mask] - self.sf(x)
            step = np.where(ok, residual / np.where(ok, dens, 1.0), 0.0)
            out[mask] = np.clip(x - step, self.knots[cell], self.knots[cell + 1])
        return out

    def g(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.quantile(stats.norm.cdf(x), stats.norm.sf(x))

    def g_prime(self, x) -> Tuple[np.ndarray, int]:
        """φ(x)/F_X'(g(x)), density clamped away from underflow; returns (values, clamped count)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        dens = self.density(self.g(x))
        clamped = dens < DENSITY_FLOOR
        if np.any(clamped):
            logger.warning(f"Density underflow at {int(np.sum(clamped))} points of the Bass map; clamped")
        return stats.norm.pdf(x) / np.maximum(dens, DENSITY_FLOOR), int(np.sum(clamped))

    def gprime_report(self) -> GPrimeReport:
        if self.gprime_values is None:
            raise DomainError("the Bass map has not been tabulated")
        i = int(np.argmax(self.gprime_values))
        sigma = self.potential.sigma
        return GPrimeReport(
            sigma=sigma,
            max_gprime=float(self.gprime_values[i]),
            argmax_x=float(self.x_grid[i]),
            holds=bool(self.gprime_values[i] <= sigma + 1e-6),
            clamped_points=self.clamped_points,
        )


def distribution_fx(p: Potential1D, log_z: Optional[float] = None) -> BassEmbedding:
    """
    Cumulative table of e^{−V}φ_σ on TABLE_CELLS cells of [−R, R], Gauss–
    Legendre per cell, cross-checked against the adaptive partition function.
    """
    log_z = partition_z(p) if log_z is None else log_z
    R = p.half_width
    knots = np.linspace(-R, R, TABLE_CELLS + 1)
    half = 0.5 * np.diff(knots)
    nodes = knots[:-1, None] + half[:, None] * (_GL_NODES[None, :] + 1.0)
    cells = half * np.sum(np.exp(log_density_unnormalized(p, nodes)) * _GL_WEIGHTS[None, :], axis=1)
    if np.any(cells < 0) or not np.all(np.isfinite(cells)):
        raise NumericError("cumulative table of F_X is not monotone", potential=p.label)
    lower = np.concatenate([[0.0], np.cumsum(cells)])
    upper = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    total = lower[-1]
    tabulated = math.log(total + (tail_remainder(p) or 0.0))
    if abs(tabulated - log_z) > 1e-9:
        raise NumericError(
            "tabulated and adaptive partition functions disagree",
            table=tabulated,
            adaptive=log_z,
        )
    if np.any(np.diff(lower) <= 0):
        logger.debug(f"F_X of {p.label} is flat on part of the table; quantiles there are ambiguous")
    return BassEmbedding(potential=p, knots=knots, lower=lower, upper=upper, log_z=log_z)


def bass_g(p: Potential1D, x_grid: Optional[Sequence[float]] = None, embedding: Optional[BassEmbedding] = None):
    """Tabulate g and g' on x ∈ [−6, 6] (or the given grid)."""
    embedding = embedding or distribution_fx(p)
    xs = np.linspace(-6.0, 6.0, 1201) if x_grid is None else np.asarray(x_grid, dtype=float)
    embedding.x_grid = xs
    embedding.g_values = embedding.g(xs)
    embedding.gprime_values, embedding.clamped_points = embedding.g_prime(xs)
    return embedding


def capital_g_values(embedding: BassEmbedding, xi) -> np.ndarray:
    """G(ξ) = σF_X'(F_X⁻¹(ξ)) − φ(Φ⁻¹(ξ)); G ≥ 0 is g' ≤ σ."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any((xi <= 0) | (xi >= 1)):
        raise DomainError("xi must lie in (0, 1)")
    x = embedding.quantile(xi, 1.0 - xi)
    return embedding.potential.sigma * embedding.density(x) - stats.norm.pdf(stats.norm.ppf(xi))


def default_xi_grid() -> np.ndarray:
    return np.concatenate([[1e-6], np.linspace(1e-3, 1.0 - 1e-3, 999), [1.0 - 1e-6]])


def capital_g_check(
    p: Potential1D,
    xi_grid: Optional[Sequence[float]] = None,
    embedding: Optional[BassEmbedding] = None,
) -> CapitalGReport:
    embedding = embedding or distribution_fx(p)
    xi = default_xi_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    values = capital_g_values(embedding, xi)
    low, high = capital_g_values(embedding, [1e-6, 1.0 - 1e-6])
    i = int(np.argmin(values))
    decays = bool(abs(low) < 1e-4 and abs(high) < 1e-4)
    report = CapitalGReport(
        min_value=float(values[i]),
        argmin_xi=float(xi[i]),
        boundary_low=float(low),
        boundary_high=float(high),
        boundary_decays=decays,
        holds=bool(values[i] >= -1e-6),
    )
    if not report.holds:
        logger.info(f"G(xi) of {p.label} dips to {report.min_value:.3e}; g' exceeds sigma somewhere")
    return report


def bass_variance(embedding: BassEmbedding, order: int = 200) -> float:
    """E[g(Z)²] − (E g(Z))² by Gauss–Hermite quadrature in Z."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    weights = weights / math.sqrt(2.0 * math.pi)
    g = embedding.g(nodes)
    w = weights
    mean = float(np.sum(w * g))
    return float(np.sum(w * g * g) - mean * mean)


# ---- moment inequality ---------------------------------------------------

def tilted_mean(p: Potential1D, log_z: float) -> float:
    R = p.half_width
    return _quad(
        lambda x: x * math.exp(float(log_density_unnormalized(p, x)) - log_z), -R, R, _breakpoints(p), scale=p.sigma
    )


def tilted_psi_moment(p: Potential1D, psi: PsiFunction, center: float, log_z: float) -> float:
    """E[ψ(X − center)] against e^{−V}φ_σ/Z on [−R, R]."""
    R = p.half_width
    return _quad(
        lambda x: float(psi(x - center)) * math.exp(float(log_density_unnormalized(p, x)) - log_z),
        -R,
        R,
        _breakpoints(p),
    )


def moment_inequality_check(
    p: Potential1D,
    psi_list: Sequence[PsiFunction],
    certification: Optional[BLConditionReport] = None,
    strict: bool = False,
) -> MomentReport:
    """
    E[ψ(X − EX)] against E[ψ(Y)] for each ψ.

    The inequality is asserted only for certified potentials; otherwise both
    sides are reported. With `strict`, a failed asserted row raises
    InequalityViolation instead of being flagged.
    """
    certification = certification or certify_conditions(p)
    log_z = certification.log_z
    mean = tilted_mean(p, log_z)
    slack = settings.MARGINAL_SLACK
    rows = []
    for psi in psi_list:
        lhs = tilted_psi_moment(p, psi, mean, log_z)
        rhs = gaussian_psi_moment(psi, p.sigma)
        rows.append(MomentRow(psi=psi.name, lhs=lhs, rhs=rhs, holds=lhs <= rhs + slack * max(1.0, abs(rhs))))
    holds = all(r.holds for r in rows)
    if not certification.certified:
        logger.info(f"{p.label} is not certified; moment comparison is informational")
    elif strict and not holds:
        worst = max(rows, key=lambda r: r.lhs - r.rhs)
        raise InequalityViolation(
            "moment inequality fails for a certified potential",
            potential=p.label,
            psi=worst.psi,
            lhs=worst.lhs,
            rhs=worst.rhs,
        )
    return MomentReport(certified=certification.certified, mean_x=mean, rows=rows, holds=holds, asserted=certification.certified)


# ---- double well ------------------------------------------------------------

def double_well_closed_forms(alpha: float, beta: float) -> Tuple[float, float]:
    """(inf_{D_V} h, inf_{D_V} U_V) for V = ½α²x⁴ − ½βx² and σ = 1."""
    if alpha <= 0 or beta <= 0:
        raise DomainError("alpha and beta must be positive", alpha=alpha, beta=beta)
    inf_h = min(beta * (5.0 * beta - 6.0) / (72.0 * alpha ** 2), 0.0)
    inf_u = min(beta ** 2 * (8.0 * beta - 9.0) / (216.0 * alpha ** 2), 0.0)
    return inf_h, inf_u


def double_well_table(alphas: Sequence[float], betas: Sequence[float]) -> List[DoubleWellRow]:
    """Numeric infima over D_V against the closed forms on an (α, β) grid."""
    rows = []
    for alpha in alphas:
        for beta in betas:
            p = Potential1D.double_well(alpha, beta)
            region = nonconvex_region(p)
            inf_h, _ = region_infimum(lambda x: h_potential(p, x), region)
            inf_u, _ = region_infimum(lambda x: u_potential(p, x), region)
            closed_h, closed_u = double_well_closed_forms(alpha, beta)
            rows.append(
                DoubleWellRow(
                    alpha=alpha,
                    beta=beta,
                    inf_h_closed=closed_h,
                    inf_h_numeric=inf_h,
                    inf_u_closed=closed_u,
                    inf_u_numeric=inf_u,
                    max_error=max(abs(inf_h - closed_h), abs(inf_u - closed_u)),
                )
            )
    return rows


__all__ = [
    "BassEmbedding",
    "partition_z",
    "tail_remainder",
    "u_potential",
    "h_potential",
    "nonconvex_region",
    "region_infimum",
    "certify_conditions",
    "distribution_fx",
    "bass_g",
    "capital_g_values",
    "capital_g_check",
    "bass_variance",
    "moment_inequality_check",
    "double_well_closed_forms",
    "double_well_table",
]
