import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from wienervar.core.exceptions import EXIT_VIOLATION, DomainError, InequalityViolation
from wienervar.models.functional import make_psi
from wienervar.models.potential import Potential1D
from wienervar.services.bl_appendix import (
    bass_g,
    bass_variance,
    capital_g_check,
    capital_g_values,
    certify_conditions,
    distribution_fx,
    double_well_closed_forms,
    double_well_table,
    h_potential,
    moment_inequality_check,
    nonconvex_region,
    partition_z,
    tail_remainder,
    u_potential,
)

PSIS = [make_psi("z2"), make_psi("z4")]


@pytest.fixture(scope="module")
def flat():
    return Potential1D.polynomial([0.0])


@pytest.fixture(scope="module")
def harmonic():
    # e^{-x²/2}φ is N(0, ½) up to normalization
    return Potential1D.polynomial([0.0, 0.0, 0.5])


@pytest.fixture(scope="module")
def harmonic_embedding(harmonic):
    return bass_g(harmonic, x_grid=np.linspace(-3.0, 3.0, 61))


def test_flat_partition_function(flat):
    assert partition_z(flat) == pytest.approx(0.0, abs=1e-12)
    assert tail_remainder(flat) < 1e-30


def test_partition_function_adds_the_tail_remainder():
    # V(x) = x is its own floor, so the remainder is exact and Z = e^{1/2}
    tilt = Potential1D.polynomial([0.0, 1.0], half_width=3.0)
    interior, _ = integrate.quad(lambda x: math.exp(-x) * stats.norm.pdf(x), -3.0, 3.0, epsabs=1e-14)
    remainder = tail_remainder(tilt)
    assert remainder == pytest.approx(math.exp(0.5) - interior, rel=1e-9)
    assert remainder > 1e-3
    assert partition_z(tilt) == pytest.approx(0.5, abs=1e-10)
    assert partition_z(tilt) - math.log(interior) == pytest.approx(math.log1p(remainder / interior), rel=1e-9)


def test_tabulated_mass_matches_the_partition_function_with_tail():
    tilt = Potential1D.polynomial([0.0, 1.0], half_width=3.0)
    embedding = distribution_fx(tilt)
    assert embedding.log_z == pytest.approx(0.5, abs=1e-10)
    assert embedding.cdf(np.array([3.0]))[0] == pytest.approx(1.0, abs=1e-12)


def test_flat_distribution_is_gaussian(flat):
    embedding = distribution_fx(flat)
    xs = np.linspace(-4.0, 4.0, 17)
    np.testing.assert_allclose(embedding.cdf(xs), stats.norm.cdf(xs), atol=1e-10)
    np.testing.assert_allclose(embedding.sf(xs), stats.norm.sf(xs), atol=1e-10)


def test_harmonic_partition_function(harmonic):
    assert partition_z(harmonic) == pytest.approx(-0.5 * math.log(2.0), abs=1e-10)


def test_harmonic_is_certified(harmonic):
    report = certify_conditions(harmonic)
    assert report.region == []
    assert report.inf_h_on_d == math.inf
    assert report.argmin_h is None
    assert report.certified


def test_harmonic_moments(harmonic):
    report = moment_inequality_check(harmonic, PSIS)
    assert report.asserted and report.holds
    assert report.mean_x == pytest.approx(0.0, abs=1e-10)
    assert report.rows[0].lhs == pytest.approx(0.5, rel=1e-8)
    assert report.rows[1].lhs == pytest.approx(0.75, rel=1e-8)
    assert report.rows[1].rhs == pytest.approx(3.0, rel=1e-8)


def test_harmonic_bass_map(harmonic_embedding):
    xs = harmonic_embedding.x_grid
    np.testing.assert_allclose(harmonic_embedding.g_values, xs / math.sqrt(2.0), atol=1e-8)
    np.testing.assert_allclose(harmonic_embedding.gprime_values, 1.0 / math.sqrt(2.0), rtol=1e-6)
    report = harmonic_embedding.gprime_report()
    assert report.holds
    assert report.clamped_points == 0


def test_harmonic_bass_variance(harmonic_embedding):
    assert bass_variance(harmonic_embedding) == pytest.approx(0.5, rel=1e-6)


def test_quantile_inverts_the_cdf(harmonic_embedding):
    p = np.array([1e-4, 0.01, 0.3, 0.5, 0.9, 0.999])
    np.testing.assert_allclose(harmonic_embedding.cdf(harmonic_embedding.quantile(p)), p, atol=1e-10)


def test_gprime_report_needs_tabulation(harmonic):
    with pytest.raises(DomainError):
        distribution_fx(harmonic).gprime_report()


def test_capital_g_domain(harmonic_embedding):
    with pytest.raises(DomainError):
        capital_g_values(harmonic_embedding, [0.0, 0.5])


def test_double_well_closed_forms():
    inf_h, inf_u = double_well_closed_forms(1.0, 1.0)
    assert inf_h == pytest.approx(-1.0 / 72.0)
    assert inf_u == pytest.approx(-1.0 / 216.0)
    assert double_well_closed_forms(5.0, 2.0) == (0.0, 0.0)
    with pytest.raises(DomainError):
        double_well_closed_forms(0.0, 1.0)


def test_double_well_table_matches_closed_forms():
    rows = double_well_table([1.0, 2.0], [0.5, 1.0, 3.0])
    assert len(rows) == 6
    assert max(r.max_error for r in rows) <= 1e-6


def test_double_well_region():
    region = nonconvex_region(Potential1D.double_well(1.0, 1.0))
    assert len(region.intervals) == 1
    lo, hi = region.intervals[0]
    assert lo == pytest.approx(-1.0 / math.sqrt(6.0), abs=1e-9)
    assert hi == pytest.approx(1.0 / math.sqrt(6.0), abs=1e-9)


def test_double_well_certification():
    report = certify_conditions(Potential1D.double_well(1.0, 1.0))
    assert report.inf_h_on_d == pytest.approx(-1.0 / 72.0, abs=1e-9)
    assert report.log_z < report.inf_h_on_d
    assert report.cond_inf2_holds and report.certified

    shallow = certify_conditions(Potential1D.double_well(5.0, 2.0))
    assert shallow.certified
    assert shallow.argmin_h == pytest.approx(0.0, abs=1e-3)
    assert shallow.inf_h_on_d == pytest.approx(0.0, abs=1e-8)


def test_deep_double_well_is_not_certified():
    p = Potential1D.double_well(1.0, 3.0)
    certification = certify_conditions(p)
    assert not certification.certified
    report = moment_inequality_check(p, PSIS, certification)
    assert not report.asserted
    assert len(report.rows) == 2


def test_certified_double_well_bass_map():
    p = Potential1D.double_well(5.0, 2.0)
    embedding = bass_g(p, x_grid=np.linspace(-4.0, 4.0, 161))
    assert embedding.gprime_report().holds
    assert capital_g_check(p, embedding=embedding).holds


@given(
    alpha=st.floats(0.2, 3.0),
    beta=st.floats(0.2, 3.0),
    x=st.floats(-3.0, 3.0),
)
def test_h_lies_below_u(alpha, beta, x):
    p = Potential1D.double_well(alpha, beta, half_width=4.0)
    assert h_potential(p, x) <= u_potential(p, x) + 1e-9


def _claimed_certified(p):
    return certify_conditions(p).model_copy(update={"cond_inf2_holds": True})


def test_strict_moment_check_raises_on_a_failed_certified_inequality():
    # e^{−V}φ ∝ e^{−x²/4} has variance 2, above the Gaussian's 1
    wide = Potential1D.polynomial([0.0, 0.0, -0.25])
    certification = _claimed_certified(wide)
    report = moment_inequality_check(wide, PSIS, certification)
    assert report.asserted and not report.holds
    assert report.rows[0].lhs == pytest.approx(2.0, rel=1e-8)
    with pytest.raises(InequalityViolation) as excinfo:
        moment_inequality_check(wide, PSIS, certification, strict=True)
    assert excinfo.value.exit_code == EXIT_VIOLATION
    assert excinfo.value.context["psi"] == "z4"


def test_strict_moment_check_passes_when_the_inequality_holds(harmonic):
    report = moment_inequality_check(harmonic, PSIS, strict=True)
    assert report.holds


def test_strict_moment_check_ignores_uncertified_potentials():
    wide = Potential1D.polynomial([0.0, 0.0, -0.25])
    report = moment_inequality_check(wide, PSIS, strict=True)
    assert not report.asserted
    assert not report.holds
