"""Brute-force and quadrature reference computations.

These routines avoid the closed forms they are used to check: averages come
from adaptive quadrature, thresholds and powers from dense grids, phases from
exhaustive search over quantised values.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate

from ..beamforming import lift as lift_channels
from ..detection import (PathLossRatios, avg_min_dep_downlink, avg_min_dep_uplink,
                         dep_downlink_components, dep_uplink_components, min_dep_downlink,
                         min_dep_uplink)
from ..power import DownlinkBudget
from ..rates import gamma_threshold


def quad_avg_min_dep(direction, p_r, p_b, n, ratios: PathLossRatios) -> float:
    """E[min DEP(x)] for x ~ Exp(1) by adaptive quadrature.

    Above the branch point x0 the integrand decays like exp(-a x) with a of
    order 1e4 in the evaluation geometry, so the tail is integrated piecewise
    on a mesh of width 1/a before handing the remainder to an infinite rule.
    """
    if direction == "downlink":
        def f(x):
            return float(min_dep_downlink(p_r, p_b, x, n, ratios)) * math.exp(-x)
        a = p_b * ratios.phi1 / (p_r * n)
        x0 = p_r * n / (p_b * ratios.phi1) * math.log1p(p_b / p_r)
    else:
        def f(x):
            return float(min_dep_uplink(p_r, p_b, x, n, ratios)) * math.exp(-x)
        a = p_b * ratios.phi3 / (p_r * n)
        x0 = p_r * n / (p_b * ratios.phi3) * math.log1p(p_b / (p_r * ratios.phi2))
    opts = dict(epsabs=1e-15, epsrel=1e-12, limit=200)
    edges = list(np.linspace(0.0, x0, 9)) + [x0 + j / a for j in range(1, 61)]
    total = sum(integrate.quad(f, lo, hi, **opts)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    return total + integrate.quad(f, edges[-1], math.inf, **opts)[0]


def grid_min_dep(direction, p_r, p_b, gains, n, losses, noise, points=10_000, tau_hint=None):
    """(min DEP, argmin tau) over a uniform tau grid on [sigma0^2, hi_edge].

    ``gains`` is |h_aw|^2 (downlink) or (|h_rw|^2, |h_bw|^2) (uplink).  The grid
    reaches ten times the hint (or the upper break point) so all three
    regions of the piecewise DEP are sampled.
    """
    if direction == "downlink":
        hi = noise + (p_r + p_b) * gains / losses.aw
    else:
        hi = noise + p_r * gains[0] / losses.rw + p_b * gains[1] / losses.bw
    top = 10.0 * max(hi, tau_hint or 0.0)
    tau = np.linspace(noise, top, points)
    if direction == "downlink":
        fa, md, _ = dep_downlink_components(tau, p_r, p_b, gains, n, losses, noise)
    else:
        fa, md, _ = dep_uplink_components(tau, p_r, p_b, gains[0], gains[1], n, losses, noise)
    dep = fa + md
    k = int(np.argmin(dep))
    return float(dep[k]), float(tau[k])


# ----------------------------------------------------------------------------
# power allocation
# ----------------------------------------------------------------------------

def _dep_ok(avg_fn, p_r, p_b, n, ratios, eps):
    return np.asarray(avg_fn(p_r, p_b, n, ratios)) >= 1.0 - eps


def grid_power_downlink(p_a_max, eps, r_min, g_ab_sq, g_ar_sq, noise, n, ratios, points=10_000):
    """(best rate, P_b at best, grid step) on a uniform P_b grid with P_r = P_a^max - P_b."""
    gamma = gamma_threshold(r_min)
    p_b = np.linspace(p_a_max / points, p_a_max * (1.0 - 1e-9), points)
    p_r = p_a_max - p_b
    ok = (p_r >= p_b) & ((p_r - gamma * p_b) * g_ar_sq >= gamma * noise) & (g_ar_sq <= g_ab_sq)
    ok &= _dep_ok(avg_min_dep_downlink, p_r, p_b, n, ratios, eps)
    if not ok.any():
        return 0.0, 0.0, p_a_max / points
    rate = np.log2(1.0 + p_b * g_ab_sq / noise)
    k = int(np.argmax(np.where(ok, rate, -np.inf)))
    return float(rate[k]), float(p_b[k]), p_a_max / points


def grid_power_uplink(p_r_max, p_b_max, eps, r_min, g_ra_sq, g_ba_sq, noise, n, ratios, points=300):
    """(best rate, (P_r, P_b) at best, P_b grid step) on a points x points grid."""
    gamma = gamma_threshold(r_min)
    pr = np.linspace(p_r_max / points, p_r_max, points)
    pb = np.linspace(p_b_max / points, p_b_max, points)
    PR, PB = np.meshgrid(pr, pb, indexing="ij")
    ok = (PR * g_ra_sq >= gamma * (PB * g_ba_sq + noise)) & (g_ra_sq >= g_ba_sq)
    ok &= _dep_ok(avg_min_dep_uplink, PR, PB, n, ratios, eps)
    if not ok.any():
        return 0.0, (0.0, 0.0), p_b_max / points
    rate = np.log2(1.0 + PB * g_ba_sq / noise)
    k = np.unravel_index(int(np.argmax(np.where(ok, rate, -np.inf))), rate.shape)
    return float(rate[k]), (float(PR[k]), float(PB[k])), p_b_max / points


# ----------------------------------------------------------------------------
# phases
# ----------------------------------------------------------------------------

def phase_grid(n, levels=64) -> np.ndarray:
    """All quantised phase vectors, shape (levels**n, n)."""
    if levels ** n > 5_000_000:
        raise ValueError("exhaustive grid too large")
    base = np.arange(levels) * (2.0 * np.pi / levels)
    return np.array(list(itertools.product(base, repeat=n)))


def exhaustive_beamforming(lift, p_r, p_b, gamma, noise, levels=64):
    """Best Bob gain above the direct part, |g_b|^2 - |v_b|^2, over quantised phases.

    Constraint checks mirror the original (unlifted) problem.  Returns
    (value, phases) or (nan, None) when no grid point is feasible.
    """
    T = phase_grid(lift.n, levels)
    E = np.exp(1j * T)
    gb = np.abs(E @ lift.lam_b + lift.v_b) ** 2
    gr = np.abs(E @ lift.lam_r + lift.v_r) ** 2
    tol = 1e-9
    if lift.direction == "downlink":
        ok = gr <= gb * (1.0 + tol)
        if gamma > 0.0:
            ok &= (p_r - gamma * p_b) * gr >= gamma * noise * (1.0 - tol)
    else:
        ok = (gr >= gb * (1.0 - tol)) & (p_r * gr >= gamma * (p_b * gb + noise) * (1.0 - tol))
    if not ok.any():
        return math.nan, None
    k = int(np.argmax(np.where(ok, gb, -np.inf)))
    return float(gb[k] - abs(lift.v_b) ** 2), T[k]


def joint_exhaustive(real, budget, eps, r_min, noise, levels=32, power_points=2000):
    """Joint quantised-phase x power-grid search of the covert-rate problem (small N).

    The P_b grid is geometric from 1e-12 of the budget upward, since the
    covertness bound usually sits many decades below the budget.  P_r takes
    the rest of the budget (downlink) or its maximum (uplink): a larger P_r
    never hurts the objective, the QoS constraint or the covertness constraint.
    """
    ratios = PathLossRatios.from_losses(real.losses)
    gamma = gamma_threshold(r_min)
    n = real.n
    lf = lift_channels(real, "downlink" if isinstance(budget, DownlinkBudget) else "uplink")
    E = np.exp(1j * phase_grid(n, levels))
    gb = np.abs(E @ lf.lam_b + lf.v_b) ** 2
    gr = np.abs(E @ lf.lam_r + lf.v_r) ** 2
    best = 0.0
    if isinstance(budget, DownlinkBudget):
        pa = budget.p_a_max
        p_b = np.geomspace(1e-12 * pa, pa / 2.0, power_points)
        p_r = pa - p_b
        cov = _dep_ok(avg_min_dep_downlink, p_r, p_b, n, ratios, eps)
        for j in np.nonzero(cov)[0]:
            ok = (gr <= gb) & ((p_r[j] - gamma * p_b[j]) * gr >= gamma * noise)
            if ok.any():
                best = max(best, float(np.log2(1.0 + p_b[j] * gb[ok].max() / noise)))
        return best
    p_r = budget.p_r_max
    p_b = np.geomspace(1e-12 * budget.p_b_max, budget.p_b_max, power_points)
    cov = _dep_ok(avg_min_dep_uplink, p_r, p_b, n, ratios, eps)
    for j in np.nonzero(cov)[0]:
        ok = (gr >= gb) & (p_r * gr >= gamma * (p_b[j] * gb + noise))
        if ok.any():
            best = max(best, float(np.log2(1.0 + p_b[j] * gb[ok].max() / noise)))
    return best
