"""
Distribution of the supremum of a unit-variance stationary Gaussian process
with triangular autocorrelation ``[1 - |tau|]_+`` over an interval of length
one, plus the scaled density of the per-cell correlation maxima.

The closed forms are written in terms of the standard normal density ``phi``
and the upper-tail integral ``Q(a) = int_a^inf phi``. ``1 - Q(a)`` is evaluated
through ``erfc`` (and through the Mills ratio ``erfcx`` for negative ``a``) so
that neither tail loses precision to cancellation.
"""

from __future__ import annotations

import math
import struct

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

__all__ = [
    "upper_tail",
    "slepian_cdf",
    "slepian_sf",
    "slepian_logcdf",
    "slepian_logsf",
    "slepian_pdf",
    "slepian_logpdf",
    "slepian_tail",
    "slepian_mean",
    "f_epsilon",
    "TableError",
    "SlepianTable",
    "default_table",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_LOG_SQRT2PI = 0.5 * math.log(2.0 * math.pi)


def upper_tail(a):
    """``Q(a) = (2 pi)^{-1/2} int_a^inf exp(-u^2/2) du``."""
    return 0.5 * special.erfc(np.asarray(a, dtype=float) / _SQRT2)


def _phi(a):
    return np.exp(-0.5 * a * a) / _SQRT2PI


def _mills(a):
    # (1 - Q(a)) / phi(a) for a <= 0, no overflow
    return math.sqrt(math.pi / 2.0) * special.erfcx(-a / _SQRT2)


def _split(a):
    a = np.asarray(a, dtype=float)
    return a, a < 0


def slepian_sf(a):
    """Survival function ``1 - F0(a)``, accurate in the upper tail."""
    a, neg = _split(a)
    out = np.empty_like(a)
    ap = a[~neg]
    q = upper_tail(ap)
    ph = _phi(ap)
    out[~neg] = 2 * q - q * q + ap * ph * (1 - q) + ph * ph
    out[neg] = 1.0 - _cdf_negative(a[neg])
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def _cdf_negative(a):
    # F0 = phi^2 (r^2 - a r - 1) with r the Mills ratio; avoids the
    # cancellation between three terms of size phi^2
    r = _mills(a)
    return _phi(a) ** 2 * (r * r - a * r - 1.0)


def slepian_cdf(a):
    """``F0(a) = Pr{sup X <= a}``, clamped to [0, 1]."""
    a, neg = _split(a)
    out = np.empty_like(a)
    out[neg] = _cdf_negative(a[neg])
    out[~neg] = 1.0 - slepian_sf(a[~neg])
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def slepian_logcdf(a):
    a, neg = _split(a)
    out = np.empty_like(a)
    an = a[neg]
    r = _mills(an)
    with np.errstate(divide="ignore"):
        out[neg] = (-an * an - 2 * _LOG_SQRT2PI) + np.log(np.maximum(r * r - an * r - 1.0, 0.0))
        out[~neg] = np.log1p(-slepian_sf(a[~neg]))
    return out if out.ndim else float(out)


def slepian_logsf(a):
    """``log(1 - F0(a))`` without underflow for large ``a``."""
    a, neg = _split(a)
    out = np.empty_like(a)
    out[neg] = np.log1p(-_cdf_negative(a[neg]))
    ap = a[~neg]
    # 1 - F0 = phi * [2 Q/phi - Q^2/phi + a (1 - Q) + phi]
    logphi = -0.5 * ap * ap - _LOG_SQRT2PI
    qr = 0.5 * special.erfcx(ap / _SQRT2) * math.sqrt(2 * math.pi)  # Q/phi
    q = upper_tail(ap)
    ph = np.exp(logphi)
    out[~neg] = logphi + np.log(2 * qr - q * qr + ap * (1 - q) + ph)
    return out if out.ndim else float(out)


def slepian_pdf(a):
    """Exact density ``f0(a) = a phi(a)^2 + (1 - Q(a)) (1 + a^2) phi(a)``."""
    a, neg = _split(a)
    out = np.empty_like(a)
    an = a[neg]
    out[neg] = _phi(an) ** 2 * (an + _mills(an) * (1 + an * an))
    ap = a[~neg]
    ph = _phi(ap)
    out[~neg] = ap * ph * ph + (1 - upper_tail(ap)) * (1 + ap * ap) * ph
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def slepian_logpdf(a):
    """``log f0(a)``, finite far into both tails."""
    a, neg = _split(a)
    out = np.empty_like(a)
    an = a[neg]
    out[neg] = (-an * an - 2 * _LOG_SQRT2PI) + np.log(an + _mills(an) * (1 + an * an))
    ap = a[~neg]
    ph = _phi(ap)
    out[~neg] = (-0.5 * ap * ap - _LOG_SQRT2PI) + np.log(ap * ph + (1 - upper_tail(ap)) * (1 + ap * ap))
    return out if out.ndim else float(out)


def slepian_tail(a):
    """Large-``a`` form of the density, ``a^2 phi(a)``."""
    a = np.asarray(a, dtype=float)
    out = a * a * _phi(a)
    return out if out.ndim else float(out)


def slepian_mean():
    """``int a f0(a) da`` by adaptive quadrature."""
    from scipy.integrate import quad

    val, _ = quad(lambda x: x * slepian_pdf(x), -np.inf, np.inf, epsabs=1e-13, limit=200)
    return val


def f_epsilon(eps, params):
    """Density of a per-cell correlation maximum: ``f0(eps/s)/s``, ``s = sqrt(N0 P T/2)``."""
    s = params.noise_scale
    return slepian_pdf(np.asarray(eps, dtype=float) / s) / s


# -- inverse CDF -----------------------------------------------------------

class TableError(RuntimeError):
    """The inverse-CDF table was used before being built or loaded."""


_MAGIC = b"SLP1"
_HEADER = struct.Struct("<4sIdd")


class SlepianTable:
    """Monotone-cubic inverse of ``F0`` for sampling.

    The table interpolates ``a`` as a function of ``logit F0(a)`` on ``n``
    equally spaced nodes over ``[lo, hi]``. Probabilities beyond the table are
    inverted by Newton iteration on the log tail functions, started from the
    asymptotic solution of ``a phi(a) = p``.
    """

    def __init__(self, n=10_000, lo=-6.0, hi=8.0):
        self.n, self.lo, self.hi = int(n), float(lo), float(hi)
        self._interp = None
        self._z_lo = self._z_hi = None

    @property
    def ready(self):
        return self._interp is not None

    def build(self):
        nodes = np.linspace(self.lo, self.hi, self.n)
        self._set(nodes)
        return self

    def _set(self, nodes):
        z = slepian_logcdf(nodes) - slepian_logsf(nodes)
        self._nodes = nodes
        self._interp = PchipInterpolator(z, nodes, extrapolate=False)
        self._z_lo, self._z_hi = z[0], z[-1]

    def save(self, path):
        if not self.ready:
            raise TableError("table not initialized")
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, self.n, self.lo, self.hi))
            fh.write(self._nodes.astype("<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            magic, n, lo, hi = _HEADER.unpack(fh.read(_HEADER.size))
            if magic != _MAGIC:
                raise TableError(f"{path}: not a Slepian table cache")
            nodes = np.frombuffer(fh.read(8 * n), dtype="<f8")
        if nodes.size != n:
            raise TableError(f"{path}: truncated table")
        tab = cls(n, lo, hi)
        tab._set(nodes.copy())
        return tab

    def ppf(self, u):
        """Quantile function of ``F0``."""
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return self._from_logs(np.log(u), np.log1p(-u))

    def isf(self, p):
        """Inverse survival: ``a`` with ``1 - F0(a) = p``, accurate for tiny ``p``."""
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            return self._from_logs(np.log1p(-p), np.log(p))

    def _from_logs(self, logu, logp):
        if not self.ready:
            raise TableError("inverse-CDF table not initialized; call build() or load()")
        logu, logp = np.broadcast_arrays(np.maximum(logu, -700.0), np.maximum(logp, -700.0))
        z = logu - logp
        out = np.empty(z.shape)
        mid = (z >= self._z_lo) & (z <= self._z_hi)
        out[mid] = self._interp(z[mid])
        hi = z > self._z_hi
        if hi.any():
            out[hi] = _newton_upper(logp[hi], self.hi)
        lo = z < self._z_lo
        if lo.any():
            out[lo] = _newton_lower(logu[lo], self.lo)
        return out if out.ndim else float(out)


def _newton_upper(logp, start):
    # solve log sf(a) = logp; asymptotically sf ~ a phi(a)
    x = np.sqrt(np.maximum(-2.0 * logp, start * start))
    for _ in range(60):
        x = np.maximum(x, start)
        f = slepian_logsf(x) - logp
        # d/da log sf = -pdf/sf
        dlog = -np.exp(slepian_logpdf(x) - slepian_logsf(x))
        step = f / dlog
        x = x - step
        if np.all(np.abs(step) < 1e-13 * np.maximum(1, np.abs(x))):
            break
    return x


def _newton_lower(logu, start):
    x = np.full(logu.shape, start)
    for _ in range(80):
        f = slepian_logcdf(x) - logu
        d = np.exp(slepian_logpdf(x) - slepian_logcdf(x))
        step = f / d
        x = np.minimum(x - step, start)
        if np.all(np.abs(step) < 1e-12 * np.maximum(1, np.abs(x))):
            break
    return x


_DEFAULT = None


def default_table():
    """Lazily built shared table with the default resolution."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = SlepianTable().build()
    return _DEFAULT
