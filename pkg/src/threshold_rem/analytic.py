"""
Large-T free energies and phase diagrams.

All free energies are in nats per unit time, ``psi = lim ln Z / T``. The
delay-only model has three phases (ordered, glassy, paramagnetic); joint
amplitude+delay estimation splits the glassy phase in three and the
paramagnetic phase in two, according to where the dominant amplitude sits.

Scalar entry points return :class:`PsiBreakdown`; the ``*_values`` helpers are
vectorized over numpy arrays and are what the grid exporters use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import Boundary, DomainError, PhaseLabel

__all__ = [
    "BOUNDARY_TOL",
    "PsiBreakdown",
    "beta_c",
    "psi_a_single",
    "psi_single",
    "psi_single_values",
    "classify_phase_single",
    "PhaseCurve",
    "PhaseDiagram",
    "phase_boundaries_single",
    "epsilon_T",
    "epsilon_star",
    "psi_a_alpha",
    "psi_a_alpha_values",
    "psi_a_joint",
    "psi_joint",
    "psi_joint_values",
    "r_beta",
    "classify_phase_joint",
    "dominant_alpha",
    "phase_boundaries_joint",
    "mismatch_transform",
]

BOUNDARY_TOL = 1e-12

O, G, PM = PhaseLabel.ORDERED, PhaseLabel.GLASSY, PhaseLabel.PARAMAGNETIC
GW, GC, GE = PhaseLabel.GLASSY_WEST, PhaseLabel.GLASSY_CENTRAL, PhaseLabel.GLASSY_EAST
PN, PS = PhaseLabel.PARAMAGNETIC_NORTH, PhaseLabel.PARAMAGNETIC_SOUTH

_COLLAPSE = {GW: G, GC: G, GE: G, PN: PM, PS: PM, O: O, G: G, PM: PM}


@dataclass(frozen=True)
class PsiBreakdown:
    """A free-energy value with the phase branch that produced it.

    ``boundary_distance`` is the Euclidean distance in the (beta, R) plane to
    the nearest boundary of the point's own phase; it is zero on a boundary.
    ``alpha`` is the dominant amplitude for the joint free energies.
    """

    value: float
    branch: object
    boundary_distance: float = math.nan
    alpha: float = math.nan

    def __float__(self):
        return float(self.value)


def _check(beta, R):
    if beta < 0 or R < 0 or math.isnan(beta) or math.isnan(R):
        raise DomainError("beta and R must be nonnegative")


def beta_c(R, params):
    """Glassy transition point ``(2/N0) sqrt(R/C)``."""
    return 2.0 / params.N0 * np.sqrt(np.asarray(R, dtype=float) / params.C) * 1.0


def _pick(labels, fallback):
    labels = frozenset(labels)
    if len(labels) == 1:
        return next(iter(labels))
    if not labels:
        return fallback
    return Boundary(labels)


# -- delay only ------------------------------------------------------------

def _para(beta, R, p):
    return R + beta * beta * p.N0 * p.P / 4.0


def _glassy(beta, R, p):
    return beta * np.sqrt(p.N0 * p.P * R)


def psi_a_single(beta, R, params) -> PsiBreakdown:
    """Free energy of the anomalous part of the partition function."""
    _check(beta, R)
    bc = float(beta_c(R, params))
    if beta < bc:
        value, label = _para(beta, R, params), PM
    else:
        value, label = float(_glassy(beta, R, params)), G
    branch = Boundary(frozenset({PM, G})) if abs(beta - bc) <= BOUNDARY_TOL else label
    return PsiBreakdown(value, branch, abs(beta - bc))


def psi_single_values(beta, R, params):
    """Vectorized ``psi(beta, R)`` for delay-only estimation."""
    beta = np.asarray(beta, dtype=float)
    R = np.asarray(R, dtype=float)
    bc = beta_c(R, params)
    psi_a = np.where(beta < bc, _para(beta, R, params), _glassy(beta, R, params))
    return np.maximum(beta * params.P, psi_a)


def _labels_single(beta, R, p, tol=BOUNDARY_TOL):
    bc = float(beta_c(R, p))
    ordered = beta * p.P
    para = _para(beta, R, p)
    glassy = float(_glassy(beta, R, p))
    psi_a = para if beta < bc else glassy
    out = set()
    if ordered >= psi_a - tol:
        out.add(O)
    if beta <= bc + tol and para >= ordered - tol:
        out.add(PM)
    if beta >= bc - tol and glassy >= ordered - tol:
        out.add(G)
    return out, max(ordered, psi_a), (O if ordered >= psi_a else (PM if beta < bc else G))


def psi_single(beta, R, params) -> PsiBreakdown:
    """Three-phase free energy ``max(beta P, psi_a)`` of delay-only estimation."""
    _check(beta, R)
    labels, value, primary = _labels_single(beta, R, params)
    branch = _pick(labels, primary)
    diagram = phase_boundaries_single(params)
    return PsiBreakdown(value, branch, diagram.distance(beta, R, branch))


def classify_phase_single(beta, R, params):
    _check(beta, R)
    labels, _, primary = _labels_single(beta, R, params)
    return _pick(labels, primary)


# -- boundary curves -------------------------------------------------------

@dataclass(frozen=True)
class PhaseCurve:
    """A boundary between two phases.

    The curve is ``R = rate(beta)`` for ``beta`` in ``beta_range`` or, when
    ``vertical`` is set, the line ``beta = beta_range[0]`` for ``R`` in
    ``rate_range``. Infinite range ends are truncated by the caller's window.
    """

    name: str
    between: frozenset
    beta_range: tuple
    rate: Callable = None
    vertical: bool = False
    rate_range: tuple = (0.0, math.inf)

    def polyline(self, beta_max, R_max, n=200):
        """Sampled ``(beta, R)`` points inside ``[0, beta_max] x [0, R_max]``."""
        if self.vertical:
            b = self.beta_range[0]
            lo, hi = self.rate_range[0], min(self.rate_range[1], R_max)
            if b > beta_max or lo > hi:
                return np.empty((0, 2))
            r = np.linspace(lo, hi, n)
            return np.column_stack([np.full(n, b), r])
        lo, hi = self.beta_range[0], min(self.beta_range[1], beta_max)
        if lo > hi:
            return np.empty((0, 2))
        b = np.linspace(lo, hi, n)
        r = np.asarray(self.rate(b), dtype=float) * np.ones_like(b)
        keep = (r >= 0) & (r <= R_max) & np.isfinite(r)
        return np.column_stack([b[keep], r[keep]])


@dataclass(frozen=True)
class PhaseDiagram:
    curves: tuple
    triple_point: tuple  # (R, beta)

    def curve(self, name):
        for c in self.curves:
            if c.name == name:
                return c
        raise KeyError(name)

    def distance(self, beta, R, branch):
        """Distance from ``(beta, R)`` to the nearest boundary of ``branch``."""
        if isinstance(branch, Boundary):
            return 0.0
        own = [c for c in self.curves if branch in c.between]
        if not own:
            own = list(self.curves)
        span = 2.0 * max(beta, R, self.triple_point[1], self.triple_point[0]) + 1.0
        best = math.inf
        for c in own:
            pts = c.polyline(span, span * span + span, n=2001)
            if len(pts) == 0:
                continue
            best = min(best, _polyline_distance(pts, beta, R))
        return best


def _polyline_distance(pts, x, y):
    if len(pts) == 1:
        return float(np.hypot(pts[0, 0] - x, pts[0, 1] - y))
    a, b = pts[:-1], pts[1:]
    d = b - a
    L2 = np.einsum("ij,ij->i", d, d)
    t = np.where(L2 > 0, ((x - a[:, 0]) * d[:, 0] + (y - a[:, 1]) * d[:, 1]) / np.where(L2 > 0, L2, 1), 0)
    t = np.clip(t, 0, 1)
    px, py = a[:, 0] + t * d[:, 0], a[:, 1] + t * d[:, 1]
    return float(np.min(np.hypot(px - x, py - y)))


def mismatch_transform(rho, params) -> PhaseDiagram:
    """Delay-only phase diagram for a correlator with normalized overlap ``rho``.

    ``rho = 1`` is the matched receiver. Inverse temperature scales by ``rho``
    and rate by ``rho**2``: the triple point moves to ``(rho^2 C, 2 rho/N0)``.
    """
    if not 0 < rho <= 1 or math.isnan(rho):
        raise DomainError("rho must lie in (0, 1]")
    P, N0, C = params.P, params.N0, params.C
    b3 = 2.0 * rho / N0
    curves = (
        PhaseCurve("ordered-glassy", frozenset({O, G}), (b3, math.inf),
                   lambda b: rho * rho * C + 0 * np.asarray(b)),
        PhaseCurve("ordered-paramagnetic", frozenset({O, PM}), (0.0, b3),
                   lambda b: P * (rho * np.asarray(b) - np.asarray(b) ** 2 * N0 / 4)),
        PhaseCurve("glassy-paramagnetic", frozenset({G, PM}), (b3, math.inf),
                   lambda b: C * (np.asarray(b) * N0 / 2) ** 2),
    )
    return PhaseDiagram(curves, (rho * rho * C, b3))


def phase_boundaries_single(params) -> PhaseDiagram:
    """The three boundary curves of the delay-only diagram and its triple point."""
    return mismatch_transform(1.0, params)


def epsilon_T(params):
    """Ground-state energy ``sqrt(N0 P R) T`` of the anomalous levels."""
    return math.sqrt(params.N0 * params.P * params.R) * params.T


def epsilon_star(beta, params):
    """Dominant anomalous energy ``min(sqrt(N0 P R) T, beta N0 P T / 2)``."""
    return min(epsilon_T(params), beta * params.N0 * params.P * params.T / 2.0)


# -- joint amplitude and delay --------------------------------------------

def psi_a_alpha_values(alpha, beta, R, params):
    """Vectorized per-amplitude anomalous free energy."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    R = np.asarray(R, dtype=float)
    P, N0 = params.P, params.N0
    para = R + beta * alpha ** 2 * P / 4.0 * (beta * N0 - 2.0)
    glassy = beta * (alpha * np.sqrt(N0 * P * R) - alpha ** 2 * P / 2.0)
    return np.where(beta * alpha < beta_c(R, params), para, glassy)


def psi_a_alpha(alpha, beta, R, params) -> PsiBreakdown:
    _check(beta, R)
    lo, hi = params.alpha_min, params.alpha_max
    if not lo - 1e-15 <= alpha <= hi + 1e-15:
        raise DomainError(f"alpha={alpha} outside [{lo}, {hi}]")
    bc = float(beta_c(R, params))
    value = float(psi_a_alpha_values(alpha, beta, R, params))
    label = PM if beta * alpha < bc else G
    if abs(beta * alpha - bc) <= BOUNDARY_TOL:
        label = Boundary(frozenset({PM, G}))
    return PsiBreakdown(value, label, abs(beta * alpha - bc), alpha)


def _joint_geometry(beta, R, p):
    """Crossover amplitude ``beta_c/beta`` and glassy optimum ``sqrt(R/C)``."""
    bc = float(beta_c(R, p))
    a_c = bc / beta if beta > 0 else math.inf
    a_star = math.sqrt(R / p.C)
    return a_c, a_star


def _joint_a_regions(beta, R, p, tol=BOUNDARY_TOL):
    """Closure membership of ``(beta, R)`` in the five anomalous regions."""
    lo, hi = p.alpha_min, p.alpha_max
    a_c, a_star = _joint_geometry(beta, R, p)
    b2 = 2.0 / p.N0
    below, above = beta <= b2 + tol, beta >= b2 - tol
    out = {}
    out[PS] = below and lo <= a_c + tol
    out[GW] = (below and a_c <= lo + tol) or (above and a_star <= lo + tol and a_c <= lo + tol)
    out[GC] = above and lo - tol <= a_star <= hi + tol
    out[GE] = above and a_star >= hi - tol and a_c <= hi + tol
    out[PN] = above and a_c >= hi - tol
    return out


def dominant_alpha(beta, R, params):
    """Amplitude maximizing the anomalous free energy (ties at the lower end)."""
    _check(beta, R)
    lo, hi = params.alpha_min, params.alpha_max
    a_c, a_star = _joint_geometry(beta, R, params)
    if beta < 2.0 / params.N0:
        return lo
    if a_c >= hi:
        return hi
    return min(max(a_star, lo), hi)


def _a_joint_value(beta, R, p):
    alpha = dominant_alpha(beta, R, p)
    if math.isinf(alpha):
        # only reachable with alpha_max = inf and the north phase, which cannot occur
        raise DomainError("unbounded amplitude maximizer")
    return float(psi_a_alpha_values(alpha, beta, R, p)), alpha


def _a_primary(beta, R, p):
    lo, hi = p.alpha_min, p.alpha_max
    a_c, a_star = _joint_geometry(beta, R, p)
    if beta < 2.0 / p.N0:
        return PS if lo < a_c else GW
    if a_c >= hi:
        return PN
    if a_star <= lo:
        return GW
    return GC if a_star < hi else GE


def _joint_labels(labels, p):
    if p.alpha_min == p.alpha_max:
        return {_COLLAPSE[l] for l in labels}
    return set(labels)


def psi_a_joint(beta, R, params) -> PsiBreakdown:
    """``max_alpha psi_a(alpha, beta, R)``: three glassy and two paramagnetic phases."""
    _check(beta, R)
    value, alpha = _a_joint_value(beta, R, params)
    regions = _joint_a_regions(beta, R, params)
    labels = _joint_labels([l for l, inside in regions.items() if inside], params)
    primary = _joint_labels([_a_primary(beta, R, params)], params).pop()
    branch = _pick(labels, primary)
    diagram = phase_boundaries_joint(params, anomalous_only=True)
    return PsiBreakdown(value, branch, diagram.distance(beta, R, branch), alpha)


def r_beta(beta, params):
    """Ordered / south-paramagnetic boundary rate for ``beta <= 2/N0``."""
    a2 = params.alpha_min ** 2
    return params.P / 2.0 * (beta * (1 + a2) - beta * beta * params.N0 * a2 / 2.0)


def _psi_joint_parts(beta, R, p, tol=BOUNDARY_TOL):
    ordered = beta * p.P / 2.0
    value_a, alpha = _a_joint_value(beta, R, p)
    regions = _joint_a_regions(beta, R, p, tol)
    labels = set()
    if ordered >= value_a - tol:
        labels.add(O)
    for label, inside in regions.items():
        if inside and value_a >= ordered - tol:
            labels.add(label)
    labels = _joint_labels(labels, p)
    if ordered >= value_a:
        primary, alpha = O, 1.0
    else:
        primary = _joint_labels([_a_primary(beta, R, p)], p).pop()
    return max(ordered, value_a), labels, primary, alpha


def psi_joint(beta, R, params) -> PsiBreakdown:
    """Free energy of joint amplitude+delay estimation, ``max(beta P/2, psi_a)``.

    ``alpha`` of the result is 1 (the true amplitude) in the ordered phase and
    the dominant anomalous amplitude elsewhere.
    """
    _check(beta, R)
    value, labels, primary, alpha = _psi_joint_parts(beta, R, params)
    branch = _pick(labels, primary)
    diagram = phase_boundaries_joint(params)
    return PsiBreakdown(value, branch, diagram.distance(beta, R, branch), alpha)


def psi_joint_values(beta, R, params):
    """Vectorized joint free energy (no labels)."""
    beta, R = np.broadcast_arrays(np.asarray(beta, float), np.asarray(R, float))
    out = np.empty(beta.shape)
    for idx in np.ndindex(beta.shape):
        out[idx] = max(beta[idx] * params.P / 2.0, _a_joint_value(beta[idx], R[idx], params)[0])
    return out


def classify_phase_joint(beta, R, params):
    _check(beta, R)
    _, labels, primary, _ = _psi_joint_parts(beta, R, params)
    return _pick(labels, primary)


def phase_boundaries_joint(params, anomalous_only=False) -> PhaseDiagram:
    """Boundary curves of the joint diagram (or of its anomalous part alone).

    Curves whose region is empty for the given amplitude range (for example
    the eastern phases when ``alpha_max`` is infinite) are omitted.
    """
    P, N0, C = params.P, params.N0, params.C
    lo, hi = params.alpha_min, params.alpha_max
    b2 = 2.0 / N0
    if lo == hi:
        # delay-only: same geometry as the single-parameter diagram, shifted values
        diagram = phase_boundaries_single(params)
        if anomalous_only:
            return PhaseDiagram((PhaseCurve("glassy-paramagnetic", frozenset({G, PM}),
                                            (0.0, math.inf),
                                            lambda b: C * (np.asarray(b) * N0 / 2) ** 2),),
                                diagram.triple_point)
        return diagram

    curves = []
    if anomalous_only:
        hi_rate = hi * hi * C
        curves.append(PhaseCurve("south-west", frozenset({PS, GW}), (0.0, b2),
                                 lambda b: C * (lo * np.asarray(b) * N0 / 2) ** 2))
        curves.append(PhaseCurve("west-central", frozenset({GW, GC}), (b2, math.inf),
                                 lambda b: lo * lo * C + 0 * np.asarray(b)))
        curves.append(PhaseCurve("south-central", frozenset({PS, GC}), (b2, b2), vertical=True,
                                 rate_range=(lo * lo * C, hi_rate)))
        if math.isfinite(hi):
            curves.append(PhaseCurve("central-east", frozenset({GC, GE}), (b2, math.inf),
                                     lambda b: hi_rate + 0 * np.asarray(b)))
            curves.append(PhaseCurve("north-east", frozenset({PN, GE}), (b2, math.inf),
                                     lambda b: C * (hi * np.asarray(b) * N0 / 2) ** 2))
            curves.append(PhaseCurve("south-north", frozenset({PS, PN}), (b2, b2), vertical=True,
                                     rate_range=(hi_rate, math.inf)))
        return PhaseDiagram(tuple(curves), (lo * lo * C, b2))

    hi_rate = hi * hi * C
    curves.append(PhaseCurve("ordered-central", frozenset({O, GC}), (b2, math.inf),
                             lambda b: C + 0 * np.asarray(b)))
    curves.append(PhaseCurve("ordered-south", frozenset({O, PS}), (0.0, b2),
                             lambda b: r_beta(np.asarray(b), params)))
    curves.append(PhaseCurve("south-central", frozenset({PS, GC}), (b2, b2), vertical=True,
                             rate_range=(C, hi_rate)))
    if math.isfinite(hi):
        curves.append(PhaseCurve("central-east", frozenset({GC, GE}), (b2, math.inf),
                                 lambda b: hi_rate + 0 * np.asarray(b)))
        curves.append(PhaseCurve("north-east", frozenset({PN, GE}), (b2, math.inf),
                                 lambda b: C * (hi * np.asarray(b) * N0 / 2) ** 2))
        curves.append(PhaseCurve("south-north", frozenset({PS, PN}), (b2, b2), vertical=True,
                                 rate_range=(hi_rate, math.inf)))
    return PhaseDiagram(tuple(curves), (C, b2))
