"""
Domain types shared by the analytic and simulation layers.

A :class:`SystemParams` holds the physical constants of the delay-estimation
model (signal power, noise level, duration, pulse-width prefactor, bandwidth
exponent, delay half-range and amplitude range). Everything else, such as the
capacity ``C = P/N0`` or the number of resolution cells ``K``, is derived from
it once at validation time.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "SystemParams",
    "validate",
    "alpha_max_for",
    "RectangularPulse",
    "autocorrelation",
    "PhaseLabel",
    "Boundary",
    "GridSpec",
    "RunConfig",
    "dumps_kv",
    "loads_kv",
    "dumps_json",
    "loads_json",
    "load_config",
]

log = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-9


class DomainError(ValueError):
    """A parameter set violates one of the model invariants."""


def _round_even(x):
    # nearest even integer, never below 2
    k = 2 * int(round(x / 2.0))
    return max(k, 2)


@dataclass(frozen=True)
class SystemParams:
    """Validated model constants.

    Do not construct directly; use :func:`validate` (or
    :meth:`SystemParams.create`), which checks the invariants and fills in the
    derived quantities.

    Attributes
    ----------
    P : float
        Signal power.
    N0 : float
        Noise level; the white noise has two-sided spectral density ``N0/2``.
    T : float
        Observation duration.
    Delta0 : float
        Pulse-width prefactor, the pulse width is ``Delta0 * exp(-R*T)``.
    R : float
        Exponential growth rate of the bandwidth (nats per unit time).
    M : float
        Half-range of the dimensionless delay ``m`` (units of ``T``).
    alpha_min, alpha_max : float
        Amplitude range. ``alpha_min == alpha_max == 1`` is delay-only mode.
    C, E : float
        Capacity ``P/N0`` and energy ``P*T``.
    K_exact, Delta_exact : float
        ``(2MT/Delta0) e^{RT}`` and ``Delta0 e^{-RT}`` before rounding.
    K : int
        Number of resolution cells, rounded to an even integer >= 2.
    Delta : float
        Pulse width consistent with ``K``: ``Delta = 2MT/K``.
    """

    P: float
    N0: float
    T: float
    Delta0: float
    R: float
    M: float
    alpha_min: float = 1.0
    alpha_max: float = 1.0
    C: float = field(init=False)
    E: float = field(init=False)
    K_exact: float = field(init=False)
    Delta_exact: float = field(init=False)
    K: int = field(init=False)
    Delta: float = field(init=False)

    def __post_init__(self):
        K_exact = (2.0 * self.M * self.T / self.Delta0) * math.exp(self.R * self.T)
        K = _round_even(K_exact)
        object.__setattr__(self, "C", self.P / self.N0)
        object.__setattr__(self, "E", self.P * self.T)
        object.__setattr__(self, "K_exact", K_exact)
        object.__setattr__(self, "Delta_exact", self.Delta0 * math.exp(-self.R * self.T))
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "Delta", 2.0 * self.M * self.T / K)

    @classmethod
    def create(cls, **raw) -> "SystemParams":
        return validate(**raw)

    @property
    def joint(self) -> bool:
        """True when the amplitude is an unknown parameter."""
        return self.alpha_min < self.alpha_max

    @property
    def noise_scale(self) -> float:
        """Standard deviation ``sqrt(N0*P*T/2)`` of the noise correlation."""
        return math.sqrt(self.N0 * self.E / 2.0)

    def replace(self, **changes) -> "SystemParams":
        """Re-validate with some raw fields changed."""
        raw = self.raw()
        strict = changes.pop("strict_alpha", True)
        raw.update(changes)
        return validate(strict_alpha=strict, **raw)

    def raw(self) -> dict:
        return {
            "P": self.P,
            "N0": self.N0,
            "T": self.T,
            "Delta0": self.Delta0,
            "R": self.R,
            "M": self.M,
            "alpha_min": self.alpha_min,
            "alpha_max": self.alpha_max,
        }


def validate(P, N0, T, Delta0, R, M, alpha_min=1.0, alpha_max=1.0,
             strict_alpha=True) -> SystemParams:
    """Check the model invariants and return a :class:`SystemParams`.

    Parameters
    ----------
    P, N0, T, Delta0, R, M : float
        Raw model constants, see :class:`SystemParams`.
    alpha_min, alpha_max : float, optional
        Amplitude range; defaults to delay-only mode.
    strict_alpha : bool, optional
        When False, the amplitude range may take the limiting values
        ``alpha_min = 0`` and ``alpha_max = inf`` and the average-energy
        normalization is not enforced. Used for limiting-case phase diagrams.

    Raises
    ------
    DomainError
        Naming the violated invariant.
    """
    vals = dict(P=P, N0=N0, T=T, Delta0=Delta0, R=R, M=M,
                alpha_min=alpha_min, alpha_max=alpha_max)
    for name, v in vals.items():
        if v is None or isinstance(v, bool):
            raise DomainError(f"{name} must be a number")
        try:
            vals[name] = float(v)
        except (TypeError, ValueError):
            raise DomainError(f"{name} must be a number, got {v!r}") from None
    P, N0, T, Delta0, R, M = (vals[k] for k in ("P", "N0", "T", "Delta0", "R", "M"))
    a_lo, a_hi = vals["alpha_min"], vals["alpha_max"]
    for name in ("P", "N0", "T", "Delta0", "R", "M"):
        if not math.isfinite(vals[name]):
            raise DomainError(f"{name} must be finite")
    for name in ("P", "N0", "T", "Delta0"):
        if vals[name] <= 0:
            raise DomainError(f"{name} must be positive")
    if R < 0:
        raise DomainError("R must be nonnegative")
    if not 0 < M < 0.5:
        raise DomainError("M must lie in (0, 1/2)")

    if strict_alpha:
        if not (0 < a_lo <= 1 <= a_hi) or not math.isfinite(a_hi):
            raise DomainError("amplitude range must satisfy 0 < alpha_min <= 1 <= alpha_max < inf")
        if a_lo < a_hi:
            mean_sq = (a_hi ** 3 - a_lo ** 3) / (3.0 * (a_hi - a_lo))
            if abs(mean_sq - 1.0) > NORMALIZATION_TOL:
                raise DomainError(
                    f"amplitude normalization violated: mean of alpha^2 over "
                    f"[{a_lo:g}, {a_hi:g}] is {mean_sq:.12g}, not 1")
    elif not (0 <= a_lo <= 1 <= a_hi) or math.isnan(a_hi):
        raise DomainError("amplitude range must satisfy 0 <= alpha_min <= 1 <= alpha_max")

    Delta_exact = Delta0 * math.exp(-R * T)
    K_exact = 2.0 * M * T / Delta_exact
    if K_exact < 2:
        raise DomainError(f"K = 2MT/Delta = {K_exact:.6g} is below 2")
    if M > 0.5 - Delta_exact / T:
        raise DomainError(f"M exceeds 1/2 - Delta/T = {0.5 - Delta_exact / T:.12g}")

    params = SystemParams(P, N0, T, Delta0, R, M, a_lo, a_hi)
    if M > 0.5 - params.Delta / T:
        raise DomainError(f"M exceeds 1/2 - Delta/T = {0.5 - params.Delta / T:.12g} after rounding K")
    if params.K != K_exact:
        log.debug("K rounded from %.6g to %d; Delta re-derived as %.6g",
                  K_exact, params.K, params.Delta)
    return params


def alpha_max_for(alpha_min):
    """Upper amplitude that makes the mean of alpha^2 over the range equal 1."""
    a = float(alpha_min)
    if not 0 <= a < 1:
        raise DomainError("alpha_min must lie in [0, 1)")
    return (-a + math.sqrt(12.0 - 3.0 * a * a)) / 2.0


@dataclass(frozen=True)
class RectangularPulse:
    """Rectangular pulse of width ``Delta`` and energy ``E``."""

    params: SystemParams

    @property
    def amplitude(self):
        return math.sqrt(self.params.E / self.params.Delta)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) <= self.params.Delta / 2, self.amplitude, 0.0)

    def autocorrelation(self, tau):
        return autocorrelation(self, tau)


def autocorrelation(pulse, tau):
    """Triangular autocorrelation ``P*T*max(0, 1 - |tau|/Delta)``.

    Accepts either a :class:`RectangularPulse` or a :class:`SystemParams`.
    """
    p = pulse.params if isinstance(pulse, RectangularPulse) else pulse
    tau = np.asarray(tau, dtype=float)
    out = p.E * np.maximum(0.0, 1.0 - np.abs(tau) / p.Delta)
    return out if out.ndim else float(out)


class PhaseLabel(enum.Enum):
    """Thermodynamic phase of a (beta, R) point."""

    ORDERED = "ordered"
    GLASSY = "glassy"
    PARAMAGNETIC = "paramagnetic"
    GLASSY_WEST = "glassy-west"
    GLASSY_CENTRAL = "glassy-central"
    GLASSY_EAST = "glassy-east"
    PARAMAGNETIC_NORTH = "paramagnetic-north"
    PARAMAGNETIC_SOUTH = "paramagnetic-south"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Boundary:
    """Marker for a point lying on the border of two or more phases."""

    labels: frozenset

    def __str__(self):
        return "boundary(" + "|".join(sorted(l.value for l in self.labels)) + ")"


@dataclass(frozen=True)
class GridSpec:
    """Sampling of the delay axis: ``points_per_pulse`` samples per width Delta."""

    points_per_pulse: int = 16
    tie_break: str = "lowest-index"

    def __post_init__(self):
        if int(self.points_per_pulse) != self.points_per_pulse or self.points_per_pulse < 2:
            raise DomainError("G must be an integer >= 2")
        if self.tie_break != "lowest-index":
            raise DomainError(f"unsupported tie_break {self.tie_break!r}")
        object.__setattr__(self, "points_per_pulse", int(self.points_per_pulse))

    @property
    def G(self):
        return self.points_per_pulse

    def size(self, params):
        return params.K * self.points_per_pulse


# -- serialization ---------------------------------------------------------

KEYS = ("P", "N0", "T", "Delta0", "R", "M", "alpha_min", "alpha_max", "G", "seed")


@dataclass(frozen=True)
class RunConfig:
    """A parameter set together with grid resolution and seed."""

    params: SystemParams
    grid: GridSpec = GridSpec()
    seed: int = 0

    def as_dict(self):
        d = self.params.raw()
        d["G"] = self.grid.G
        d["seed"] = int(self.seed)
        return d


def _from_mapping(d, strict_alpha=True):
    unknown = set(d) - set(KEYS)
    if unknown:
        raise DomainError(f"unknown parameter keys: {', '.join(sorted(unknown))}")
    missing = [k for k in ("P", "N0", "T", "Delta0", "R", "M") if k not in d]
    if missing:
        raise DomainError(f"missing parameter keys: {', '.join(missing)}")
    raw = {k: d[k] for k in KEYS[:8] if k in d}
    params = validate(strict_alpha=strict_alpha, **raw)
    grid = GridSpec(int(d.get("G", 16)))
    return RunConfig(params, grid, int(d.get("seed", 0)))


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def dumps_kv(config: RunConfig) -> str:
    """Flat ``name = value`` text, one key per line, in canonical key order."""
    d = config.as_dict()
    return "".join(f"{k} = {_fmt(d[k])}\n" for k in KEYS)


def parse_kv(text):
    """Parse ``name = value`` lines into a dict of floats/ints (no validation)."""
    d = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"line {lineno}: expected 'name = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        try:
            d[k] = int(v) if k in ("G", "seed") else float(v)
        except ValueError:
            raise DomainError(f"line {lineno}: bad value for {k}: {v!r}") from None
    return d


def loads_kv(text, strict_alpha=True) -> RunConfig:
    return _from_mapping(parse_kv(text), strict_alpha)


def dumps_json(config: RunConfig) -> str:
    return json.dumps(config.as_dict(), indent=2) + "\n"


def loads_json(text, strict_alpha=True) -> RunConfig:
    return _from_mapping(json.loads(text), strict_alpha)


def load_config(path) -> dict:
    """Read a config file into a raw dict; ``.json`` is sniffed by extension."""
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        return json.loads(text)
    return parse_kv(text)
