"""
Monte Carlo simulation of ML delay (and joint amplitude+delay) estimation of a
rectangular pulse in white Gaussian noise.

For a rectangular pulse of width ``Delta`` the noise part of the receiver
correlation ``int n(t) s(t - mT) dt`` equals ``sqrt(E/Delta)`` times the
increment of a Wiener process over ``[mT - Delta/2, mT + Delta/2]``. Sampling
the Wiener path on a grid of step ``Delta/G`` therefore gives the correlation
exactly at every grid delay, with no time-domain waveform at all.

Two sources of energy levels are available:

* ``exact``: per-cell maxima of the simulated correlation on the delay grid.
* ``surrogate``: i.i.d. draws from the Slepian law for the cell maxima and
  ``eps0 = alpha0 P T + Normal(0, N0 P T/2)`` for the true cell. Adjacent-cell
  dependence is ignored. When no partition function is requested only the
  largest anomalous level is needed, and it is drawn directly as the maximum
  order statistic, so ``K`` may be astronomically large.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .model import DomainError, GridSpec, SystemParams
from .slepian import default_table

__all__ = [
    "GridError",
    "TrialError",
    "WienerPath",
    "CorrelationProcess",
    "EnergyLevels",
    "PartitionSummary",
    "TrialOutcome",
    "RunResult",
    "trial_seed",
    "correlation_process",
    "energy_levels_exact",
    "levels_from_process",
    "energy_levels_surrogate",
    "sample_surrogate_extreme",
    "partition_empirical",
    "partition_empirical_joint",
    "ml_delay_estimate",
    "joint_ml_estimate",
    "run_trial",
    "mc_run",
]

EXACT, SURROGATE = "exact", "surrogate"


class GridError(ValueError):
    """A Wiener path does not cover or align with the requested delay grid."""


class TrialError(RuntimeError):
    def __init__(self, index, seed, cause):
        super().__init__(f"trial {index} (seed {seed}) failed: {cause!r}")
        self.index, self.seed = index, seed


def trial_seed(master_seed, index):
    """64-bit seed of trial ``index``: ``SeedSequence([master_seed, index])``."""
    if master_seed < 0 or index < 0:
        raise DomainError("seeds and trial indices must be nonnegative")
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _grid_offsets(params, grid, m0):
    # delays m = m0 + k*delta/T with m in [-M, M); delta = Delta/G
    scale = params.T * grid.G / params.Delta
    k_lo = math.ceil((-params.M - m0) * scale - 1e-9)
    k_hi = math.ceil((params.M - m0) * scale - 1e-9)
    return k_lo, k_hi


def _check_m0(params, m0):
    if abs(m0) > params.M:
        raise DomainError(f"true delay m0={m0} outside [-M, M]")


@dataclass(frozen=True)
class WienerPath:
    """Gaussian increments of a Wiener process with variance rate ``N0/2``.

    Point ``j`` of the path sits at time ``t_start + j*step``; ``W`` at the
    first point is zero.
    """

    t_start: float
    step: float
    increments: np.ndarray
    variance_rate: float
    seed: int | None = None

    @classmethod
    def sample(cls, params, grid, rng=None, m0=0.0, seed=None):
        """Draw a path covering exactly the window needed by :func:`correlation_process`."""
        _check_m0(params, m0)
        if rng is None:
            rng = np.random.default_rng(seed)
        delta = params.Delta / grid.G
        k_lo, k_hi = _grid_offsets(params, grid, m0)
        n = (k_hi - k_lo) + grid.G - 1
        t_start = m0 * params.T - params.Delta / 2 + k_lo * delta
        rate = params.N0 / 2
        inc = rng.standard_normal(n) * math.sqrt(rate * delta)
        return cls(t_start, delta, inc, rate, seed)

    def values(self):
        return np.concatenate([[0.0], np.cumsum(self.increments)])

    @property
    def t_stop(self):
        return self.t_start + self.step * self.increments.size


@dataclass(frozen=True)
class CorrelationProcess:
    """Receiver correlation ``y(m)`` sampled at ``m = m0 + k Delta/(G T)``."""

    k: np.ndarray
    y: np.ndarray
    params: SystemParams
    grid: GridSpec
    m0: float = 0.0
    alpha0: float = 1.0

    @property
    def m(self):
        return self.m0 + self.k * (self.params.Delta / (self.grid.G * self.params.T))

    @property
    def cell(self):
        """Index of the width-Delta cell each grid point belongs to."""
        return np.floor_divide(self.k, self.grid.G)

    def with_values(self, y):
        return replace(self, y=np.asarray(y, dtype=float))


def correlation_process(path, params, grid, m0=0.0, alpha0=1.0):
    """Sample ``y(m) = alpha0 R_s((m-m0)T) + sqrt(E/Delta) [W(mT+Delta/2) - W(mT-Delta/2)]``.

    Raises
    ------
    GridError
        If the path step differs from ``Delta/G`` or the path does not cover
        ``[(m0 T - M T) - Delta/2, M T + Delta/2]`` on grid-aligned points.
    """
    _check_m0(params, m0)
    G = grid.G
    delta = params.Delta / G
    if not math.isclose(path.step, delta, rel_tol=1e-9):
        raise GridError(f"path step {path.step:g} != Delta/G = {delta:g}")
    k_lo, k_hi = _grid_offsets(params, grid, m0)
    t_first = m0 * params.T - params.Delta / 2 + k_lo * delta
    off = (t_first - path.t_start) / delta
    off_i = int(round(off))
    if abs(off - off_i) > 1e-6 or off_i < 0:
        raise GridError("path does not start on a grid point at or before the needed window")
    n = k_hi - k_lo
    if off_i + n + G - 1 > path.increments.size:
        raise GridError("path does not cover the needed window")
    W = path.values()
    amp = math.sqrt(params.E / params.Delta)
    i = np.arange(n) + off_i
    noise = amp * (W[i + G] - W[i])
    k = np.arange(k_lo, k_hi)
    signal = alpha0 * params.E * np.maximum(0.0, 1.0 - np.abs(k) / G)
    return CorrelationProcess(k, signal + noise, params, grid, m0, alpha0)


@dataclass(frozen=True)
class EnergyLevels:
    """Correct-cell energy ``eps0`` and the anomalous cell maxima ``eps``."""

    eps0: float
    eps: np.ndarray
    mode: str
    T: float

    def __post_init__(self):
        if not math.isfinite(self.eps0) or not np.all(np.isfinite(self.eps)):
            raise ValueError("energy levels must be finite")


def levels_from_process(proc):
    """Per-cell maxima of a sampled correlation; cells -1 and 0 form ``eps0``."""
    cell = proc.cell
    starts = np.flatnonzero(np.r_[True, cell[1:] != cell[:-1]])
    maxima = np.maximum.reduceat(proc.y, starts)
    ids = cell[starts]
    true = (ids == -1) | (ids == 0)
    eps0 = float(maxima[true].max())
    return EnergyLevels(eps0, maxima[~true], EXACT, proc.params.T)


def energy_levels_exact(path, params, grid, m0=0.0, alpha0=1.0):
    return levels_from_process(correlation_process(path, params, grid, m0, alpha0))


def _eps0_surrogate(params, rng, alpha0=1.0):
    return alpha0 * params.E + params.noise_scale * rng.standard_normal()


def energy_levels_surrogate(params, count=None, seed=None, table=None, rng=None, alpha0=1.0):
    """Draw ``count`` (default ``K - 1``) i.i.d. cell maxima from the Slepian law.

    Raises
    ------
    TableError
        If ``table`` is given but was never built or loaded.
    """
    table = default_table() if table is None else table
    if count is None:
        count = params.K - 1
    count = int(count)
    if count < 0:
        raise DomainError("count must be nonnegative")
    if rng is None:
        rng = np.random.default_rng(seed)
    eps0 = _eps0_surrogate(params, rng, alpha0)
    u = rng.random(count)
    eps = params.noise_scale * np.asarray(table.ppf(u), dtype=float).reshape(-1)
    return EnergyLevels(eps0, eps, SURROGATE, params.T)


def sample_surrogate_extreme(params, count, rng, table=None):
    """Largest of ``count`` i.i.d. Slepian cell maxima, drawn in one step.

    ``max U_i`` is distributed as ``V**(1/count)``; its upper tail probability
    ``1 - V**(1/count)`` is formed with ``expm1`` so counts far beyond what
    could be materialized are handled exactly.
    """
    table = default_table() if table is None else table
    if count <= 0:
        return -math.inf
    v = rng.random()
    p = -math.expm1(math.log(v) / float(count))
    return params.noise_scale * float(table.isf(p))


@dataclass(frozen=True)
class PartitionSummary:
    beta: float
    log_Z0: float
    log_Za: float
    log_Z: float
    psi_emp: float


def partition_empirical(levels, beta):
    """``Z = e^{beta eps0} + sum_i e^{beta eps_i}`` in the log domain."""
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    log_Z0 = beta * levels.eps0
    log_Za = float(logsumexp(beta * levels.eps)) if levels.eps.size else -math.inf
    log_Z = float(np.logaddexp(log_Z0, log_Za))
    return PartitionSummary(beta, log_Z0, log_Za, log_Z, log_Z / levels.T)


def _alpha_nodes(params, n_alpha):
    lo, hi = params.alpha_min, params.alpha_max
    alpha = np.linspace(lo, hi, n_alpha)
    w = np.full(n_alpha, (hi - lo) / (n_alpha - 1))
    w[[0, -1]] /= 2
    return alpha, np.log(w)


def _joint_terms(eps, beta, alpha, E):
    # beta (alpha eps - alpha^2 E/2), shape (n_alpha, n_eps)
    return beta * (alpha[:, None] * eps[None, :] - alpha[:, None] ** 2 * E / 2)


def partition_empirical_joint(levels, beta, params, n_alpha=129):
    """Joint partition function, integrated over the amplitude by the trapezoid rule."""
    if not params.joint:
        raise DomainError("joint partition function needs alpha_min < alpha_max")
    alpha, logw = _alpha_nodes(params, n_alpha)
    E = params.E
    log_Z0 = float(logsumexp(logw + _joint_terms(np.array([levels.eps0]), beta, alpha, E)[:, 0]))
    if levels.eps.size:
        per_alpha = logsumexp(_joint_terms(levels.eps, beta, alpha, E), axis=1)
        log_Za = float(logsumexp(logw + per_alpha))
    else:
        log_Za = -math.inf
    log_Z = float(np.logaddexp(log_Z0, log_Za))
    return PartitionSummary(beta, log_Z0, log_Za, log_Z, log_Z / levels.T)


@dataclass(frozen=True)
class TrialOutcome:
    m_hat: float
    alpha_hat: float
    sq_error: float
    anomalous: bool
    seed: int | None = None
    trial_index: int | None = None
    psi: tuple = ()


def ml_delay_estimate(proc, seed=None) -> TrialOutcome:
    """Grid argmax of the correlation; first index wins ties."""
    i = int(np.argmax(proc.y))
    return _outcome(proc, i, 1.0, seed)


def joint_ml_estimate(proc, seed=None) -> TrialOutcome:
    """Joint ML of amplitude and delay.

    For each delay the likelihood is concave in the amplitude with maximizer
    ``clip(y/E, alpha_min, alpha_max)``; the delay estimate maximizes the
    resulting profile.
    """
    p = proc.params
    if not p.joint:
        raise DomainError("joint estimation needs alpha_min < alpha_max")
    a = np.clip(proc.y / p.E, p.alpha_min, p.alpha_max)
    profile = a * proc.y - a * a * p.E / 2
    i = int(np.argmax(profile))
    return _outcome(proc, i, float(a[i]), seed)


def _outcome(proc, i, alpha_hat, seed):
    p = proc.params
    k = int(proc.k[i])
    err = k * p.Delta / (proc.grid.G * p.T)
    return TrialOutcome(proc.m0 + err, alpha_hat, err * err, abs(k) > proc.grid.G, seed)


def _profile(eps, p):
    a = min(max(eps / p.E, p.alpha_min), p.alpha_max)
    return a * eps - a * a * p.E / 2, a


def _surrogate_outcome(p, eps0, eps_max, rng, m0, seed):
    """Estimate from the true-cell energy and the best anomalous energy."""
    if p.joint:
        v0, a0 = _profile(eps0, p)
        va, aa = _profile(eps_max, p) if math.isfinite(eps_max) else (-math.inf, math.nan)
        anomalous = va > v0
        alpha_hat = aa if anomalous else a0
    else:
        anomalous = eps_max > eps0
        alpha_hat = 1.0
    if not anomalous:
        return TrialOutcome(m0, alpha_hat, 0.0, False, seed)
    # delay uniform over the anomalous part of [-M, M]
    w = p.Delta / p.T
    left = max(m0 - w - (-p.M), 0.0)
    right = max(p.M - (m0 + w), 0.0)
    u = rng.random() * (left + right)
    m_hat = -p.M + u if u < left else m0 + w + (u - left)
    return TrialOutcome(m_hat, alpha_hat, (m_hat - m0) ** 2, True, seed)


class _LogSumExp:
    """Streaming log-sum-exp over chunks, one accumulator per row."""

    def __init__(self, rows):
        self.m = np.full(rows, -np.inf)
        self.s = np.zeros(rows)

    def add(self, x):  # x: (rows, n)
        if x.shape[1] == 0:
            return
        cm = x.max(axis=1)
        new = np.maximum(self.m, cm)
        with np.errstate(invalid="ignore"):
            self.s = self.s * np.exp(self.m - new) + np.exp(x - new[:, None]).sum(axis=1)
        self.m = new

    def result(self):
        with np.errstate(divide="ignore"):
            return self.m + np.log(self.s)


def _surrogate_levels_streamed(p, count, betas, rng, table, n_alpha, chunk):
    """Log anomalous partition functions per beta and the largest level."""
    betas = np.asarray(betas, dtype=float)
    if p.joint:
        alpha, logw = _alpha_nodes(p, n_alpha)
        acc = [_LogSumExp(n_alpha) for _ in betas]
    else:
        acc = _LogSumExp(betas.size)
    if p.joint:
        chunk = max(1024, chunk // n_alpha)
    eps_max = -math.inf
    done = 0
    while done < count:
        n = min(chunk, count - done)
        eps = p.noise_scale * table.ppf(rng.random(n))
        eps_max = max(eps_max, float(eps.max()))
        if p.joint:
            for j, b in enumerate(betas):
                acc[j].add(_joint_terms(eps, b, alpha, p.E))
        else:
            acc.add(betas[:, None] * eps[None, :])
        done += n
    if p.joint:
        log_Za = np.array([float(logsumexp(logw + a.result())) for a in acc])
    else:
        log_Za = acc.result()
    return log_Za, eps_max


def _log_Z0(p, eps0, betas, n_alpha):
    betas = np.asarray(betas, dtype=float)
    if not p.joint:
        return betas * eps0
    alpha, logw = _alpha_nodes(p, n_alpha)
    return np.array([float(logsumexp(logw + _joint_terms(np.array([eps0]), b, alpha, p.E)[:, 0]))
                     for b in betas])


def run_trial(params, grid=GridSpec(), mode=SURROGATE, seed=0, betas=(), m0=0.0,
              alpha0=1.0, table=None, n_alpha=129, chunk=1 << 18):
    """One realization: estimate, and ``psi_emp`` for every ``beta`` requested."""
    p = params
    rng = np.random.default_rng(seed)
    betas = tuple(float(b) for b in betas)
    if mode == EXACT:
        path = WienerPath.sample(p, grid, rng, m0, seed)
        proc = correlation_process(path, p, grid, m0, alpha0)
        out = joint_ml_estimate(proc, seed) if p.joint else ml_delay_estimate(proc, seed)
        if betas:
            levels = levels_from_process(proc)
            if p.joint:
                psi = tuple(partition_empirical_joint(levels, b, p, n_alpha).psi_emp for b in betas)
            else:
                psi = tuple(partition_empirical(levels, b).psi_emp for b in betas)
            out = replace(out, psi=psi)
        return out
    if mode != SURROGATE:
        raise DomainError(f"unknown mode {mode!r}")
    _check_m0(p, m0)
    table = default_table() if table is None else table
    level_rng, pick_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    eps0 = _eps0_surrogate(p, level_rng, alpha0)
    count = p.K - 1
    if betas:
        log_Za, eps_max = _surrogate_levels_streamed(p, count, betas, level_rng, table, n_alpha, chunk)
        log_Z = np.logaddexp(_log_Z0(p, eps0, betas, n_alpha), log_Za)
        psi = tuple(float(v) for v in log_Z / p.T)
    else:
        eps_max = sample_surrogate_extreme(p, count, level_rng, table)
        psi = ()
    out = _surrogate_outcome(p, eps0, eps_max, pick_rng, m0, seed)
    return replace(out, psi=psi)


@dataclass
class RunResult:
    """Aggregate of an ``mc_run``; trials are kept in index order."""

    n_trials: int
    mse: float
    local_mse: float
    anomaly_rate: float
    betas: tuple
    psi_mean: tuple
    psi_std: tuple
    alpha_median: float
    trials: list = field(repr=False, default_factory=list)

    def summary(self):
        return {
            "n_trials": self.n_trials,
            "mse": self.mse,
            "local_mse": self.local_mse,
            "anomaly_rate": self.anomaly_rate,
            "alpha_median": self.alpha_median,
            "psi": [{"beta": b, "mean": m, "std": s}
                    for b, m, s in zip(self.betas, self.psi_mean, self.psi_std)],
        }


def mc_run(params, grid=GridSpec(), n_trials=100, mode=SURROGATE, master_seed=0,
           betas=(), m0=0.0, alpha0=1.0, threads=1, table=None, **kw) -> RunResult:
    """Run ``n_trials`` independent realizations and aggregate them.

    Trial ``i`` is seeded with :func:`trial_seed` ``(master_seed, i)`` and the
    reduction runs over trials in index order, so results do not depend on
    ``threads``.
    """
    if n_trials < 1:
        raise DomainError("n_trials must be at least 1")
    table = default_table() if (mode == SURROGATE and table is None) else table

    def one(i):
        s = trial_seed(master_seed, i)
        try:
            out = run_trial(params, grid, mode, s, betas, m0, alpha0, table, **kw)
        except Exception as exc:
            raise TrialError(i, s, exc) from exc
        return replace(out, trial_index=i)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials = list(pool.map(one, range(n_trials)))
    else:
        trials = [one(i) for i in range(n_trials)]
    return aggregate(trials, betas)


def aggregate(trials, betas=()):
    sq = np.array([t.sq_error for t in trials])
    anom = np.array([t.anomalous for t in trials], dtype=bool)
    local = sq[~anom]
    psi = np.array([t.psi for t in trials], dtype=float).reshape(len(trials), len(betas))
    ddof = 1 if len(trials) > 1 else 0
    return RunResult(
        n_trials=len(trials),
        mse=float(sq.mean()),
        local_mse=float(local.mean()) if local.size else math.nan,
        anomaly_rate=float(anom.mean()),
        betas=tuple(float(b) for b in betas),
        psi_mean=tuple(float(v) for v in psi.mean(axis=0)) if betas else (),
        psi_std=tuple(float(v) for v in psi.std(axis=0, ddof=ddof)) if betas else (),
        alpha_median=float(np.median([t.alpha_hat for t in trials])),
        trials=list(trials),
    )
