"""The `validate` suite: every closed form and solver step against its oracle.

Each check yields one row (check, scenario, measured, reference, tolerance,
passed).  Sizes are reduced relative to the acceptance tests so the suite
runs in about a minute; all randomness derives from the given seed.
"""
from __future__ import annotations

import math

import numpy as np

from ..beamforming import beamform, lift
from ..channel import (NOISE_POWER_W, LinkLosses, PhaseShiftVector, composite, dbm_to_watt,
                       make_rng, sample_realization)
from ..detection import (PathLossRatios, avg_min_dep_downlink, avg_min_dep_uplink,
                         dep_downlink_components, dep_uplink_components,
                         optimal_threshold_downlink, optimal_threshold_uplink)
from ..optimizer import OptimizerConfig, alternate
from ..power import (ConstraintSet, DownlinkBudget, UplinkBudget, covert_cap, optimal_power)
from ..rates import covert_rate
from . import oracles
from .radiometer import MODES, empirical_min_dep, radiometer_trial
from .statistics import gaussian_cascade_test, phase_uniformity_test

VALIDATE_STREAM = 41


def _row(check, scenario, measured, reference, tolerance, passed):
    return {"check": check, "scenario": scenario, "measured": float(measured),
            "reference": float(reference), "tolerance": float(tolerance), "passed": bool(passed)}


def _avg(direction):
    return avg_min_dep_downlink if direction == "downlink" else avg_min_dep_uplink


def check_quadrature(seed, count=20):
    ratios = PathLossRatios.from_losses(LinkLosses.from_geometry())
    rows = []
    for d in ("downlink", "uplink"):
        rng = make_rng(seed, VALIDATE_STREAM, 1, d == "uplink")
        worst = 0.0
        for _ in range(count):
            p_r, p_b = dbm_to_watt(rng.uniform(0.0, 40.0, size=2))
            n = int(rng.choice([8, 16, 32, 64]))
            worst = max(worst, abs(float(_avg(d)(p_r, p_b, n, ratios))
                                   - oracles.quad_avg_min_dep(d, p_r, p_b, n, ratios)))
        rows.append(_row("closed-form-vs-quadrature", d, worst, 0.0, 1e-6, worst <= 1e-6))
    return rows


def check_monte_carlo(seed, trials):
    ratios = PathLossRatios.from_losses(LinkLosses.from_geometry())
    p_r, p_b = dbm_to_watt(30.0), dbm_to_watt(10.0)
    rows = []
    for d in ("downlink", "uplink"):
        ref = float(_avg(d)(p_r, p_b, 32, ratios))
        est = empirical_min_dep(d, p_r, p_b, 32, trials, seed)
        rows.append(_row("closed-form-vs-monte-carlo", d, est.mean, ref, est.half_width,
                         est.ci_low <= ref <= est.ci_high))
    return rows


def check_thresholds(seed, count=100, points=10_000):
    losses = LinkLosses.from_geometry()
    rows = []
    for d in ("downlink", "uplink"):
        rng = make_rng(seed, VALIDATE_STREAM, 2, d == "uplink")
        worst = -math.inf
        for _ in range(count):
            p_r, p_b = dbm_to_watt(rng.uniform(0.0, 40.0, size=2))
            n = int(rng.choice([8, 16, 32, 64]))
            if d == "downlink":
                g = float(rng.exponential())
                tau = optimal_threshold_downlink(p_r, p_b, g, n, losses, NOISE_POWER_W)
                fa, md, _ = dep_downlink_components(tau, p_r, p_b, g, n, losses, NOISE_POWER_W)
            else:
                g = tuple(float(x) for x in rng.exponential(size=2))
                tau = optimal_threshold_uplink(p_r, p_b, g[0], g[1], n, losses, NOISE_POWER_W)
                fa, md, _ = dep_uplink_components(tau, p_r, p_b, g[0], g[1], n, losses,
                                                  NOISE_POWER_W)
            best, _ = oracles.grid_min_dep(d, p_r, p_b, g, n, losses, NOISE_POWER_W, points, tau)
            worst = max(worst, float(fa + md) - best)
        rows.append(_row("optimal-threshold-vs-grid", d, worst, 0.0, 1e-6, worst <= 1e-6))
    return rows


def _power_instances(seed, direction, count, n=32):
    eps_rmin = ConstraintSet(0.3, 1.0)
    budget = DownlinkBudget(dbm_to_watt(25.0)) if direction == "downlink" else \
        UplinkBudget(dbm_to_watt(20.0), dbm_to_watt(20.0))
    ratios = PathLossRatios.from_losses(LinkLosses.from_geometry())
    cap = covert_cap(budget, eps_rmin, n, ratios)
    for k in range(count):
        real = sample_realization(None, n, seed, stream=(VALIDATE_STREAM, 3, k))
        phases = PhaseShiftVector.random(n, make_rng(seed, VALIDATE_STREAM, 4, k))
        yield budget, eps_rmin, ratios, cap, composite(real, phases, direction)


def check_power(seed, count=20):
    rows = []
    for d in ("downlink", "uplink"):
        worst = -math.inf
        for budget, cons, ratios, cap, gains in _power_instances(seed, d, count):
            sol = optimal_power(budget, cons, gains, NOISE_POWER_W, cap)
            closed = covert_rate(sol.p_b, gains.bob_sq, NOISE_POWER_W) if sol.feasible else 0.0
            if d == "downlink":
                best, _, step = oracles.grid_power_downlink(
                    budget.p_a_max, cons.epsilon, cons.r_min, gains.bob_sq, gains.roy_sq,
                    NOISE_POWER_W, 32, ratios)
            else:
                best, _, step = oracles.grid_power_uplink(
                    budget.p_r_max, budget.p_b_max, cons.epsilon, cons.r_min, gains.roy_sq,
                    gains.bob_sq, NOISE_POWER_W, 32, ratios)
            # allowance: the rate change of one grid step at the closed-form point
            allow = covert_rate(sol.p_b + step, gains.bob_sq, NOISE_POWER_W) - closed
            worst = max(worst, best - closed - allow)
        rows.append(_row("power-allocation-vs-grid", d, worst, 0.0, 1e-12, worst <= 1e-12))
    return rows


def check_sdr(seed, count=5):
    rows = []
    p_r, p_b = dbm_to_watt(20.0), dbm_to_watt(5.0)
    for d in ("downlink", "uplink"):
        pb = p_b if d == "downlink" else dbm_to_watt(15.0)
        ratio, bound_ok, used = math.inf, True, 0
        for k in range(count * 4):
            if used == count:
                break
            lf = lift(sample_realization(None, 3, seed, stream=(VALIDATE_STREAM, 5, k)), d)
            ref, _ = oracles.exhaustive_beamforming(lf, p_r, pb, 1.0, NOISE_POWER_W)
            if not math.isfinite(ref) or ref <= 0.0:
                continue
            used += 1
            res = beamform(lf, p_r, pb, 1.0, NOISE_POWER_W, q=100, seed=(seed, k))
            if res.phases is None:
                ratio = 0.0
                continue
            bound_ok &= res.sdr_value >= ref * (1.0 - 1e-6)
            ratio = min(ratio, res.value / ref)
        rows.append(_row("sdr-bound-vs-exhaustive", d, float(bound_ok), 1.0, 0.0, bound_ok))
        rows.append(_row("rank-one-vs-exhaustive", d, ratio, 1.0, 0.05, ratio >= 0.95))
    return rows


def check_convergence(seed, count=5):
    rows = []
    for d in ("downlink", "uplink"):
        budget = DownlinkBudget(dbm_to_watt(25.0)) if d == "downlink" else \
            UplinkBudget(dbm_to_watt(20.0), dbm_to_watt(20.0))
        worst_drop, iters = 0.0, 0
        for k in range(count):
            real = sample_realization(None, 32, seed, stream=(VALIDATE_STREAM, 6, k))
            res = alternate(real, budget, ConstraintSet(0.3, 1.0),
                            OptimizerConfig(seed=seed, stream=(k,)))
            traj = np.asarray(res.trajectory)
            if traj.size > 1:
                worst_drop = max(worst_drop, float(np.max(traj[:-1] - traj[1:])))
            iters = max(iters, res.iterations)
        rows.append(_row("trajectory-monotone", d, worst_drop, 0.0, 1e-9, worst_drop <= 1e-9))
        rows.append(_row("iterations-bounded", d, iters, 50, 0.0, iters <= 50))
    return rows


def check_statistics(seed):
    rows = []
    for d in ("downlink", "uplink"):
        rep = phase_uniformity_test(32, 100_000 // 32, "coherent", seed, d)
        rows.append(_row("phase-uniformity-ks", d, rep.ks_pvalue, 0.01, 0.0, rep.passed))
    for n in (8, 32, 128):
        rep = gaussian_cascade_test(n, 20_000, seed)
        rows.append(_row(f"cascade-power-N{n}", "downlink", rep.mean_abs_sq, n, 0.03 * n,
                         rep.passed))
    return rows


def check_radiometer(seed, k=200_000):
    rows = []
    real = sample_realization(None, 32, seed, stream=(VALIDATE_STREAM, 7))
    phases = PhaseShiftVector.random(32, make_rng(seed, VALIDATE_STREAM, 8))
    powers = (dbm_to_watt(30.0), dbm_to_watt(10.0))
    for d in ("downlink", "uplink"):
        ref = radiometer_trial(real, phases, powers, "H1", MODES[1], direction=d).power
        got = radiometer_trial(real, phases, powers, "H1", MODES[2], k=k, seed=seed,
                               direction=d).power
        rel = abs(got / ref - 1.0)
        rows.append(_row("finite-K-vs-limit", d, rel, 0.0, 0.01, rel <= 0.01))
    return rows


def run_validation(seed=0, trials=10_000) -> list[dict]:
    rows = []
    rows += check_quadrature(seed)
    rows += check_monte_carlo(seed, trials)
    rows += check_thresholds(seed)
    rows += check_power(seed)
    rows += check_sdr(seed)
    rows += check_convergence(seed)
    rows += check_statistics(seed)
    rows += check_radiometer(seed)
    return rows
