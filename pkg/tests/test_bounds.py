import math

import numpy as np
import pytest

from threshold_rem.bounds import (
    BoundsConfig,
    NumericalError,
    background_mse,
    error_exponent,
    log_wwb,
    ml_mse_exponent,
    wwb,
    wwb_exponent,
    wwb_objective,
)
from threshold_rem.model import DomainError, validate


def wwb_params(R, C=1.0, T=40.0, Delta0=1.0, M=0.4):
    return validate(P=2 * C, N0=2.0, T=T, Delta0=Delta0, R=R, M=M)


@pytest.mark.parametrize("R,expected", [(0.0, 0.5), (0.1, 0.4), (1 / 6, 1 / 3), (0.5, (1 - math.sqrt(0.5)) ** 2),
                                        (1.0, 0.0), (2.0, 0.0)])
def test_error_exponent(R, expected):
    assert error_exponent(R, 1.0) == pytest.approx(expected, abs=1e-15)


def test_error_exponent_continuous_and_decreasing():
    R = np.linspace(0, 1.5, 3001)
    E = np.array([error_exponent(r, 1.0) for r in R])
    assert np.all(np.diff(E) <= 1e-15)
    assert error_exponent(0.25 - 1e-13, 1.0) == pytest.approx(error_exponent(0.25, 1.0), abs=1e-9)
    assert error_exponent(1 - 1e-13, 1.0) == pytest.approx(0.0, abs=1e-9)


def test_ml_exponent_branches():
    assert ml_mse_exponent(0.05, 1.0) == pytest.approx(0.1)
    assert ml_mse_exponent(0.2, 1.0) == pytest.approx(0.3)  # C/2 - R above C/6
    assert ml_mse_exponent(2.0, 1.0) == 0.0


def test_wwb_exponent_branches():
    assert wwb_exponent(0.2, 1.0) == pytest.approx(0.4)
    assert wwb_exponent(1.0, 1.0) == pytest.approx(0.5)
    # between C/6 and C/4 the two exponents disagree
    assert wwb_exponent(0.2, 1.0) != ml_mse_exponent(0.2, 1.0)
    assert wwb_exponent(2.0, 1.0) == 0.5 and ml_mse_exponent(2.0, 1.0) == 0.0


def test_domain_checks():
    with pytest.raises(DomainError):
        error_exponent(0.1, 0.0)
    with pytest.raises(DomainError):
        error_exponent(-0.1, 1.0)
    with pytest.raises(DomainError):
        BoundsConfig(wwb_h_grid=10)
    with pytest.raises(DomainError):
        BoundsConfig(B=0.0)
    assert BoundsConfig().prefactor(0.3) == pytest.approx(0.03)


def _objective_direct(h, C, T, Delta):
    x = min(h / Delta, 1.0) * C * T / 2
    num = h * h * (1 - h / T) ** 2 * math.exp(-x)
    den = 2 * (1 - max(1 - 2 * h / T, 0.0) * math.exp(-x))
    return math.log(num / den)


@pytest.mark.parametrize("h", [1e-3, 0.05, 0.3, 1.0, 3.0, 7.0])
def test_objective_matches_direct_formula(h):
    C, T, Delta = 1.0, 8.0, 0.5
    assert float(wwb_objective(h, C, T, Delta)) == pytest.approx(_objective_direct(h, C, T, Delta), rel=1e-12)


def test_objective_small_h_stays_finite():
    # the denominator vanishes like h; expm1 keeps the log finite
    v = wwb_objective(np.array([1e-14, 1e-10]), 1.0, 40.0, 1e-3)
    assert np.all(np.isfinite(v))
    assert float(wwb_objective(0.0, 1.0, 40.0, 1.0)) == -math.inf
    assert float(wwb_objective(40.0, 1.0, 40.0, 1.0)) == -math.inf


def test_search_beats_dense_grid():
    for R in (0.1, 0.5, 2.0):
        p = wwb_params(R)
        lw, h = log_wwb(p)
        grid = np.concatenate([np.geomspace(p.Delta * 1e-9, p.Delta, 200_000),
                               np.linspace(p.Delta, p.T, 200_000)])
        dense = np.max(wwb_objective(grid, p.C, p.T, p.Delta))
        assert lw >= dense - 1e-9
        assert lw - dense < 1e-6
        assert float(wwb_objective(h, p.C, p.T, p.Delta)) == pytest.approx(lw)


def test_large_rate_exponent():
    p = wwb_params(2.0)
    rate = -log_wwb(p)[0] / p.T
    assert abs(rate - 0.5) / 0.5 < 0.2


def test_wwb_positive_and_ordered_in_R():
    # for h beyond the pulse width the objective no longer depends on Delta, so
    # at moderate T small rates can share the same bound
    vals = [wwb(wwb_params(R, T=20.0)) for R in (0.05, 0.1, 0.2, 0.4)]
    assert all(v > 0 for v in vals)
    assert all(a >= b * (1 - 1e-12) for a, b in zip(vals, vals[1:]))
    # with a wide pulse prefactor the small-offset branch takes over and R matters
    wide = [wwb(wwb_params(R, T=40.0, Delta0=40.0, M=0.3)) for R in (0.05, 0.1, 0.2)]
    assert wide[0] > wide[1] > wide[2]


def test_background_formulas():
    assert background_mse("linear", N0=2, E=20) == pytest.approx(0.05)
    assert background_mse("gabor", N0=2, W=2, E=20) == pytest.approx(0.0125)
    assert background_mse("locus", N0=2, M=0.4, L=0.8) == pytest.approx(1.0)
    assert background_mse("locus", N0=2, M=0.4, Edot=1.0) == pytest.approx(1.0)
    M = 0.4
    ref = 0.05 + (M * M / 3) * 100 * math.exp(-5)
    assert background_mse("total", N0=2, W=1, E=20, K=100, M=M) == pytest.approx(ref, rel=1e-14)
    assert background_mse("total", N0=2, W=1, E=20, K=100, B=1.0) == pytest.approx(0.05 + 100 * math.exp(-5))


def test_background_errors():
    with pytest.raises(DomainError, match="missing input E"):
        background_mse("linear", N0=2)
    with pytest.raises(DomainError, match="unknown MSE kind"):
        background_mse("cubic", N0=2)
    with pytest.raises(DomainError, match="must be positive"):
        background_mse("linear", N0=2, E=-1)


def test_numerical_error_type():
    assert issubclass(NumericalError, ArithmeticError)
