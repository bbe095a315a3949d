import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special
from scipy.integrate import quad

from threshold_rem.model import validate
from threshold_rem.slepian import (
    SlepianTable,
    TableError,
    default_table,
    f_epsilon,
    slepian_cdf,
    slepian_logcdf,
    slepian_logsf,
    slepian_mean,
    slepian_pdf,
    slepian_sf,
    slepian_tail,
)

# 40-digit evaluations of the closed form (mpmath), frozen
F0_AT = {
    0.0: 0.09084505690810466423,
    3.0: 0.98400478727561846502,
    -2.0: 5.914726300087712523e-05,
}
SF_AT_6 = 3.842847238899176071e-08
PDF_AT = {1.0: 0.46571142707747920210, -1.0: 0.01823002196080749750}
MEAN = 2 / math.sqrt(math.pi)


def test_cdf_at_zero_closed_form():
    assert slepian_cdf(0.0) == pytest.approx(0.25 - 1 / (2 * math.pi), rel=1e-14)


@pytest.mark.parametrize("a", sorted(F0_AT))
def test_cdf_reference_values(a):
    assert slepian_cdf(a) == pytest.approx(F0_AT[a], rel=1e-12)


def test_upper_tail_reference():
    assert slepian_sf(6.0) == pytest.approx(SF_AT_6, rel=1e-10)
    assert math.exp(slepian_logsf(6.0)) == pytest.approx(SF_AT_6, rel=1e-10)
    # far tail does not underflow in log form
    assert np.isfinite(slepian_logsf(40.0))


@pytest.mark.parametrize("a", sorted(PDF_AT))
def test_pdf_reference_values(a):
    assert slepian_pdf(a) == pytest.approx(PDF_AT[a], rel=1e-12)


def test_cdf_terms_with_independent_erfc():
    # write out F0 at a = 3 from math.erfc, term by term
    a = 3.0
    q = 0.5 * math.erfc(a / math.sqrt(2))
    ph = math.exp(-a * a / 2) / math.sqrt(2 * math.pi)
    ref = 1 - 2 * q + q * q - a * ph * (1 - q) - ph * ph
    assert slepian_cdf(a) == pytest.approx(ref, rel=1e-14)


def test_normalization():
    total, _ = quad(slepian_pdf, -np.inf, np.inf, epsabs=1e-13, limit=200)
    assert abs(total - 1) < 1e-6


def test_pdf_is_derivative_of_cdf():
    a = np.linspace(-5, 8, 1301)
    h = 1e-5
    fd = (slepian_cdf(a + h) - slepian_cdf(a - h)) / (2 * h)
    assert np.max(np.abs(fd - slepian_pdf(a))) < 1e-6


def test_mean_matches_exact_moment():
    assert slepian_mean() == pytest.approx(MEAN, rel=1e-10)


def test_tail_form_dominates_at_large_a():
    ratios = [slepian_tail(a) / slepian_pdf(a) for a in (4.0, 6.0, 10.0)]
    assert abs(ratios[1] - 1) < 0.05
    assert abs(ratios[2] - 1) < abs(ratios[0] - 1)


def test_log_functions_agree_with_linear():
    a = np.linspace(-4, 6, 201)
    np.testing.assert_allclose(np.exp(slepian_logcdf(a)), slepian_cdf(a), rtol=1e-10, atol=1e-300)
    np.testing.assert_allclose(np.exp(slepian_logsf(a)), slepian_sf(a), rtol=1e-10)


@given(st.floats(-8, 12), st.floats(0, 5))
def test_cdf_monotone_bounded(a, d):
    lo, hi = slepian_cdf(a), slepian_cdf(a + d)
    assert 0 <= lo <= hi <= 1


def test_f_epsilon_scaling():
    p = validate(P=2, N0=2, T=10, Delta0=1, R=0.5, M=0.4)
    s = p.noise_scale
    mean, _ = quad(lambda e: e * f_epsilon(e, p), -20 * s, 40 * s, limit=400)
    assert mean == pytest.approx(s * MEAN, rel=1e-8)


def test_table_requires_build():
    with pytest.raises(TableError):
        SlepianTable().ppf(0.5)


def test_table_inversion_round_trip():
    tab = default_table()
    u = np.concatenate([np.linspace(1e-6, 1 - 1e-6, 1001), [1e-30, 1e-200]])
    np.testing.assert_allclose(slepian_cdf(tab.ppf(u)), u, rtol=1e-9)
    p = np.array([1e-3, 1e-12, 1e-100, 1e-290])
    np.testing.assert_allclose(np.exp(slepian_logsf(tab.isf(p))), p, rtol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-700, -1e-6))
def test_isf_inverts_log_tail(logp):
    a = default_table().isf(math.exp(logp))
    assert slepian_logsf(a) == pytest.approx(logp, rel=1e-8, abs=1e-10)


def test_table_cache_round_trip(tmp_path):
    tab = SlepianTable(n=2000).build()
    path = tmp_path / "f0.bin"
    tab.save(path)
    again = SlepianTable.load(path)
    assert (again.n, again.lo, again.hi) == (2000, -6.0, 8.0)
    u = np.linspace(0.01, 0.99, 17)
    np.testing.assert_array_equal(again.ppf(u), tab.ppf(u))
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(TableError, match="not a Slepian table"):
        SlepianTable.load(path)


def test_table_samples_match_law():
    from scipy import stats

    rng = np.random.default_rng(5)
    x = default_table().ppf(rng.random(10**6))
    assert abs(x.mean() - MEAN) / MEAN < 0.02
    assert stats.kstest(x, slepian_cdf).statistic < 0.005


def test_logpdf_matches_pdf():
    from threshold_rem.slepian import slepian_logpdf

    a = np.linspace(-6, 8, 141)
    np.testing.assert_allclose(np.exp(slepian_logpdf(a)), slepian_pdf(a), rtol=1e-10, atol=1e-300)
    assert np.isfinite(slepian_logpdf(np.array([-30.0, 40.0]))).all()
