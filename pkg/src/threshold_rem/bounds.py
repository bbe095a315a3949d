"""
Error exponents, MSE approximations and the Weiss-Weinstein bound for the
rectangular pulse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .model import DomainError

__all__ = [
    "NumericalError",
    "BoundsConfig",
    "error_exponent",
    "ml_mse_exponent",
    "wwb_exponent",
    "wwb",
    "log_wwb",
    "wwb_objective",
    "background_mse",
]


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BoundsConfig:
    """Knobs of the bound computations.

    B is the prefactor of the anomalous term of the total-MSE approximation;
    ``None`` means ``M**2/3``, the mean square of an estimate uniform on
    ``[-M, M]``.
    """

    B: float | None = None
    wwb_h_grid: int = 4000

    def __post_init__(self):
        if self.B is not None and not self.B > 0:
            raise DomainError("B must be positive")
        if self.wwb_h_grid < 1000:
            raise DomainError("wwb_h_grid must be at least 1000")

    def prefactor(self, M):
        return M * M / 3.0 if self.B is None else self.B


def error_exponent(R, C):
    """Reliability function of infinite-bandwidth orthogonal signalling."""
    if not C > 0:
        raise DomainError("C must be positive")
    if R < 0:
        raise DomainError("R must be nonnegative")
    if R < C / 4:
        return C / 2 - R
    if R < C:
        return (math.sqrt(C) - math.sqrt(R)) ** 2
    return 0.0


def ml_mse_exponent(R, C):
    """Exponential decay rate of the ML mean-square error as a function of R."""
    if R < C / 6:
        return 2.0 * R
    return error_exponent(R, C)


def wwb_exponent(R, C):
    """Decay rate of the Weiss-Weinstein bound: ``2R`` below ``C/4``, else ``C/2``."""
    return 2.0 * R if R < C / 4 else C / 2.0


def wwb_objective(h, C, T, Delta):
    """Logarithm of the bound's ratio at test offset ``h`` (time units).

    Evaluated in the log domain; the denominator ``1 - (1-2h/T)_+ e^{-x}`` is
    formed with ``expm1`` since it vanishes as ``h -> 0``.
    """
    h = np.asarray(h, dtype=float)
    x = np.minimum(h / Delta, 1.0) * C * T / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = np.maximum(1.0 - h / T, 0.0)
        lin2 = np.maximum(1.0 - 2.0 * h / T, 0.0)
        num = 2 * np.log(h) + 2 * np.log(lin) - x
        den = np.where(lin2 > 0, -np.expm1(np.log(lin2) - x), 1.0)
        out = num - math.log(2.0) - np.log(den)
    return np.where((h > 0) & (lin > 0) & (den > 0), out, -np.inf)


def log_wwb(params, config=BoundsConfig()):
    """``log WWB`` with the maximizing offset, ``(log_value, h_star)``."""
    C, T, Delta = params.C, params.T, params.Delta
    n = config.wwb_h_grid
    h_small = np.geomspace(Delta * 1e-9, Delta, n)
    h_large = np.linspace(Delta, T, n)
    h = np.concatenate([h_small, h_large[1:]])
    obj = wwb_objective(h, C, T, Delta)
    if not np.isfinite(obj).any():
        raise NumericalError("WWB denominator underflows at every grid point")
    i = int(np.argmax(obj))
    lo, hi = h[max(i - 1, 0)], h[min(i + 1, len(h) - 1)]
    best_h, best = h[i], obj[i]
    if hi > lo:
        # refine inside the bracket, in log(h) on the small-offset side
        if hi <= Delta:
            res = minimize_scalar(lambda u: -wwb_objective(math.exp(u), C, T, Delta),
                                  bounds=(math.log(lo), math.log(hi)), method="bounded",
                                  options={"xatol": 1e-12})
            cand = math.exp(res.x)
        else:
            res = minimize_scalar(lambda v: -wwb_objective(v, C, T, Delta),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12 * T})
            cand = res.x
        val = float(wwb_objective(cand, C, T, Delta))
        if val > best:
            best_h, best = cand, val
    return float(best), float(best_h)


def wwb(params, config=BoundsConfig()):
    """Weiss-Weinstein bound on the delay MSE (time units squared)."""
    return math.exp(log_wwb(params, config)[0])


def background_mse(kind, **inputs):
    """Classical MSE formulas.

    kind
        ``"linear"``: ``N0/(2E)``; needs N0, E.
        ``"gabor"``: ``N0/(2 W^2 E)``; needs N0, W, E.
        ``"locus"``: ``2 N0 M^2 / L^2``; needs N0, M and either L or Edot
        (then ``L = 2 M sqrt(Edot)``).
        ``"total"``: ``N0/(2 W^2 E) + B K exp(-E/(2 N0))``; needs N0, W, E, K
        and optionally B (default ``M^2/3``, which then needs M).
    """
    def need(*names):
        out = []
        for n in names:
            v = inputs.get(n)
            if v is None:
                raise DomainError(f"{kind}: missing input {n}")
            if not v > 0:
                raise DomainError(f"{kind}: input {n} must be positive")
            out.append(float(v))
        return out

    if kind == "linear":
        N0, E = need("N0", "E")
        return N0 / (2 * E)
    if kind == "gabor":
        N0, W, E = need("N0", "W", "E")
        return N0 / (2 * W * W * E)
    if kind == "locus":
        N0, M = need("N0", "M")
        if inputs.get("L") is None:
            (Edot,) = need("Edot")
            L = 2 * M * math.sqrt(Edot)
        else:
            (L,) = need("L")
        return 2 * N0 * M * M / (L * L)
    if kind == "total":
        N0, W, E, K = need("N0", "W", "E", "K")
        if inputs.get("B") is None:
            (M,) = need("M")
            B = M * M / 3
        else:
            (B,) = need("B")
        return N0 / (2 * W * W * E) + B * K * math.exp(-E / (2 * N0))
    raise DomainError(f"unknown MSE kind {kind!r}")
