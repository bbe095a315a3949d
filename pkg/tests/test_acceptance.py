"""
Acceptance gate: one test per criterion, each printing a single PASS/FAIL
line (also collected into the terminal summary). Tolerances are the stated
ones; a criterion that the implementation cannot meet fails here.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from threshold_rem import analytic as an
from threshold_rem.bounds import error_exponent, log_wwb
from threshold_rem.experiments import SweepSpec, sweep_psi, sweep_threshold, validate_slepian
from threshold_rem.model import GridSpec, PhaseLabel as L, validate
from threshold_rem.simulate import mc_run
from threshold_rem.slepian import slepian_cdf, slepian_pdf

from conftest import ACCEPTANCE_LINES

P, N0 = 2.0, 2.0


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _params(**kw):
    raw = dict(P=P, N0=N0, T=10.0, Delta0=1.0, R=0.5, M=0.4)
    raw.update(kw)
    return validate(strict_alpha=False, **raw)


def _branch_values_single(b, R, p):
    return {L.ORDERED: b * p.P, L.PARAMAGNETIC: R + b * b * p.N0 * p.P / 4,
            L.GLASSY: b * math.sqrt(p.N0 * p.P * R)}


def _branch_values_joint(b, R, p):
    def para(a):
        return R + b * a * a * p.P / 4 * (b * p.N0 - 2)

    def glassy(a):
        return b * (a * math.sqrt(p.N0 * p.P * R) - a * a * p.P / 2)

    return {L.ORDERED: b * p.P / 2, L.PARAMAGNETIC_SOUTH: para(p.alpha_min),
            L.PARAMAGNETIC_NORTH: para(p.alpha_max), L.GLASSY_WEST: glassy(p.alpha_min),
            L.GLASSY_EAST: glassy(p.alpha_max), L.GLASSY_CENTRAL: b * p.N0 * R / 2}


def _curve_points(curve, rng, n=100, top=5.0):
    if curve.vertical:
        R = rng.uniform(curve.rate_range[0], min(curve.rate_range[1], top), n)
        return [(curve.beta_range[0], r) for r in R]
    b = rng.uniform(curve.beta_range[0], min(curve.beta_range[1], top), n)
    return list(zip(b, curve.rate(b) * np.ones_like(b)))


def test_criterion_1_analytic_identities():
    t0 = time.perf_counter()
    single = _params()
    joint = _params(alpha_min=0.5, alpha_max=2.0)
    C = single.C
    worst = {}
    # triple point
    vals = _branch_values_single(2 / N0, C, single).values()
    worst["triple"] = max(abs(v - 2 * C) for v in vals)
    # branch agreement and continuity across every declared curve
    rng = np.random.default_rng(0)
    cont = 0.0
    for p, diagram, values, fn in [
        (single, an.phase_boundaries_single(single), _branch_values_single, an.psi_single),
        (single, an.phase_boundaries_joint(single, anomalous_only=True), _branch_values_single,
         lambda b, R, q: an.psi_a_single(b, R, q)),
        (joint, an.phase_boundaries_joint(joint), _branch_values_joint, an.psi_joint),
        (joint, an.phase_boundaries_joint(joint, anomalous_only=True), _branch_values_joint,
         an.psi_a_joint),
    ]:
        for curve in diagram.curves:
            labels = list(curve.between)
            for b, R in _curve_points(curve, rng):
                v = values(b, R, p)
                cont = max(cont, abs(v[labels[0]] - v[labels[1]]))
                lo = fn(b * (1 - 1e-12), R * (1 - 1e-12), p).value
                hi = fn(b * (1 + 1e-12), R * (1 + 1e-12), p).value
                cont = max(cont, abs(hi - lo))
    worst["continuity"] = cont
    # error exponent
    worst["E(C/4)"] = abs(error_exponent(C / 4 * (1 - 1e-12), C) - error_exponent(C / 4, C))
    worst["E(C/6)"] = max(abs(error_exponent(C / 6, C) - C / 3), abs(error_exponent(C / 6, C) - 2 * C / 6))
    # joint reduction at unit amplitude
    red = 0.0
    for b, R in zip(rng.uniform(0, 4, 500), rng.uniform(0, 3, 500)):
        red = max(red, abs(an.psi_joint(b, R, single).value - (an.psi_single(b, R, single).value - b * P / 2)))
    worst["reduction"] = red
    # alpha_min = 0 limit
    zero = _params(alpha_min=0.0, alpha_max=3.0)
    lim = 0.0
    for b in (0.1, 0.5, 0.9):
        lim = max(lim, abs(an.r_beta(b, zero) - b * P / 2))
        R = b * P / 2 + 0.25
        lim = max(lim, abs(an.psi_joint(b, R, zero).value - R))
    worst["alpha_min=0"] = lim
    elapsed = time.perf_counter() - t0
    ok = (worst["triple"] < 1e-12 and worst["continuity"] < 1e-9 and worst["E(C/4)"] < 1e-9
          and worst["E(C/6)"] <= 4 * math.ulp(C / 3) and worst["reduction"] < 1e-12 and worst["alpha_min=0"] < 1e-12
          and elapsed < 1.0)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(1, ok, f"{detail}; {elapsed:.2f} s")


def test_criterion_2_alpha_grid_oracle():
    t0 = time.perf_counter()
    p = _params(alpha_min=0.5, alpha_max=2.0)
    alpha = np.linspace(p.alpha_min, p.alpha_max, 10_000)
    rng = np.random.default_rng(1)
    gap = 0.0
    for b, R in zip(rng.uniform(0.01, 4, 1000), rng.uniform(0, 6, 1000)):
        grid = float(np.max(an.psi_a_alpha_values(alpha, b, R, p)))
        gap = max(gap, abs(an.psi_a_joint(b, R, p).value - grid))
    elapsed = time.perf_counter() - t0
    report(2, gap < 1e-6 and elapsed < 5.0, f"max gap {gap:.2e}; {elapsed:.2f} s")


def test_criterion_3_slepian():
    norm = abs(quad(slepian_pdf, -np.inf, np.inf, epsabs=1e-13, limit=200)[0] - 1)
    a = np.linspace(-5, 8, 1301)
    h = 1e-5
    deriv = float(np.max(np.abs((slepian_cdf(a + h) - slepian_cdf(a - h)) / (2 * h) - slepian_pdf(a))))
    mc = validate_slepian(n_paths=200_000, G=512, seed=0)
    ok = norm < 1e-6 and deriv < 1e-6 and mc["ks"] < 0.02
    report(3, ok, f"normalization {norm:.1e}, derivative {deriv:.1e}, KS {mc['ks']:.4f} < 0.02")


@pytest.mark.slow
def test_criterion_4_empirical_psi():
    spec = SweepSpec(base=dict(P=P, N0=N0, Delta0=1.0, M=0.4), betas=(0.5, 1.0, 2.0),
                     rates=(0.5, 1.5), durations=(6.0, 8.0, 10.0), trials=20, master_seed=4,
                     k_max=5e7)
    rep = sweep_psi(spec)
    interior = [c for c in rep.cells if c["T"] == 10.0 and not c["boundary"]]
    gaps_ok = all(c["status"] == "ok" and c["gap"] < 0.15 for c in interior)
    trend_ok = all(v["trend_ok"] for v in rep.verdicts.values())
    worst = max(c["gap"] for c in interior)
    gaps = " ".join(f"[b={c['beta']:g},R={c['R']:g}]{c['gap']:.2f}" for c in interior)
    report(4, gaps_ok and trend_ok,
           f"gaps at T=10: {gaps}; worst {worst:.3f} vs 0.15; trend nonincreasing: {trend_ok}")


@pytest.mark.slow
def test_criterion_5_threshold_effect():
    rates = (0.3, 0.6, 0.9, 1.2, 1.5)
    spec = SweepSpec(base=dict(P=P, N0=N0, Delta0=1.0, M=0.4), rates=rates, durations=(10.0,),
                     trials=200, master_seed=7)
    rep = sweep_threshold(spec)
    v = rep.verdicts["T=10"]
    an_rates = v["anomaly"]
    ok = (an_rates[0] < 0.1 and an_rates[-1] > 0.9 and v["monotone"]
          and 0.6 <= v["R_star"] <= 1.4)
    curve = ", ".join(f"{r:g}:{a:.3f}" for r, a in zip(rates, an_rates))
    report(5, ok, f"anomaly rates {curve}; monotone {v['monotone']}; R* {v['R_star']:.3f}")


@pytest.mark.slow
def test_criterion_6_small_error_exponent():
    R = 0.1
    spec = SweepSpec(base=dict(P=P, N0=N0, Delta0=1.0, M=0.3), rates=(R,),
                     durations=tuple(float(t) for t in range(4, 13)), trials=2000,
                     mode="exact", master_seed=6, grid=GridSpec(16))
    rep = sweep_threshold(spec)
    s = rep.verdicts[f"slope R={R:g}"]
    ok = s["rel_error"] < 0.3
    report(6, ok, f"slope {s['slope']:.3f} vs {-2 * R:.3f}, relative error {s['rel_error']:.2f} (limit 0.30)")


def test_criterion_7_wwb():
    res = {}
    for R, target in ((0.1, 0.2), (2.0, 0.5)):
        p = validate(P=P, N0=N0, T=40.0, Delta0=1.0, R=R, M=0.4)
        rate = -log_wwb(p)[0] / p.T
        res[R] = (rate, abs(rate - target) / target)
    ok = all(err < 0.2 for _, err in res.values())
    detail = "; ".join(f"R={R:g}: rate {r:.3f}, rel err {e:.2f}" for R, (r, e) in res.items())
    report(7, ok, detail)


@pytest.mark.slow
def test_criterion_8_joint_concentration():
    p = validate(P=P, N0=N0, T=20.0, Delta0=1.0, R=2.25, M=0.4, alpha_min=0.5, alpha_max=2.0,
                 strict_alpha=False)
    res = mc_run(p, n_trials=200, mode="surrogate", master_seed=8)
    med = res.alpha_median
    report(8, abs(med - 1.5) <= 0.1, f"median alpha_hat {med:.3f} at T=20, target 1.5 +/- 0.1")


def test_criterion_9_determinism():
    base = dict(P=P, N0=N0, Delta0=1.0, M=0.3)
    psi = SweepSpec(base=base, betas=(0.5, 2.0), rates=(0.5, 1.5), durations=(4.0, 6.0),
                    trials=5, master_seed=9)
    thr = SweepSpec(base=base, rates=(0.3, 1.5), durations=(6.0,), trials=50, master_seed=9,
                    mode="exact", grid=GridSpec(8))
    same = (sweep_psi(psi).to_json() == sweep_psi(psi).to_json()
            and sweep_threshold(thr).to_json() == sweep_threshold(thr).to_json())
    report(9, same, "repeated sweep_psi and sweep_threshold report bodies byte-identical")
