"""Closed-form transmit power allocation for fixed IRS phases.

Downlink: P_b* = min(P_a^max / 2, Xi, cap), P_r* = P_a^max - P_b*.
Uplink: P_r* = P_r^max, P_b* = min(cap, QoS bound, P_b^max).
``cap`` is the covertness bound from ``detection.invert_covertness``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .detection import PathLossRatios, avg_min_dep_downlink, avg_min_dep_uplink, invert_covertness
from .rates import gamma_threshold

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class DownlinkBudget:
    p_a_max: float

    def __post_init__(self):
        if not self.p_a_max > 0.0:
            raise ValueError("P_a^max must be strictly positive")


@dataclass(frozen=True)
class UplinkBudget:
    p_r_max: float
    p_b_max: float

    def __post_init__(self):
        if not (self.p_r_max > 0.0 and self.p_b_max > 0.0):
            raise ValueError("P_r^max and P_b^max must be strictly positive")


@dataclass(frozen=True)
class ConstraintSet:
    epsilon: float
    r_min: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in the open interval (0, 1)")
        if self.r_min < 0.0:
            raise ValueError("R_min must be non-negative")

    @property
    def gamma_th(self) -> float:
        return gamma_threshold(self.r_min)


@dataclass(frozen=True)
class PowerSolution:
    p_r: float
    p_b: float
    xi_cap: float         # downlink: Xi; uplink: the QoS bound on P_b
    binding: str
    feasible: bool


def covert_cap(budget, constraints: ConstraintSet, n, ratios: PathLossRatios) -> float:
    """Covertness bound on P_b under the coupling fixed by the budget type."""
    if isinstance(budget, DownlinkBudget):
        return invert_covertness(constraints.epsilon, "downlink", n, ratios, p_a_max=budget.p_a_max)
    return invert_covertness(constraints.epsilon, "uplink", n, ratios,
                             p_r_max=budget.p_r_max, cap=budget.p_b_max)


def xi_downlink(p_a_max, gamma, g_ar_sq, noise) -> float:
    """Xi = (P_a^max |g_ar|^2 - gamma sigma0^2) / ((1 + gamma) |g_ar|^2)."""
    return (p_a_max * g_ar_sq - gamma * noise) / ((1.0 + gamma) * g_ar_sq)


def optimal_power_downlink(budget: DownlinkBudget, constraints: ConstraintSet, g_ar_sq,
                           noise, cap) -> PowerSolution:
    if not g_ar_sq > 0.0:
        raise ValueError("|g_ar|^2 must be strictly positive")
    xi = xi_downlink(budget.p_a_max, constraints.gamma_th, g_ar_sq, noise)
    if xi <= 0.0:
        return PowerSolution(0.0, 0.0, xi, "qos", False)
    if cap <= 0.0:
        return PowerSolution(0.0, 0.0, xi, "covertness", False)
    candidates = [(budget.p_a_max / 2.0, "power-order"), (xi, "qos"), (cap, "covertness")]
    p_b, label = min(candidates, key=lambda c: c[0])
    return PowerSolution(budget.p_a_max - p_b, p_b, xi, label, True)


def qos_bound_uplink(p_r_max, gamma, g_ra_sq, g_ba_sq, noise) -> float:
    """Largest P_b meeting P_r |g_ra|^2 >= gamma (P_b |g_ba|^2 + sigma0^2); inf if gamma = 0."""
    if gamma == 0.0:
        return math.inf
    return (p_r_max * g_ra_sq - gamma * noise) / (gamma * g_ba_sq)


def optimal_power_uplink(budget: UplinkBudget, constraints: ConstraintSet, g_ra_sq, g_ba_sq,
                         noise, cap) -> PowerSolution:
    if not (g_ra_sq > 0.0 and g_ba_sq > 0.0):
        raise ValueError("uplink gains must be strictly positive")
    qos = qos_bound_uplink(budget.p_r_max, constraints.gamma_th, g_ra_sq, g_ba_sq, noise)
    if qos <= 0.0:
        return PowerSolution(0.0, 0.0, qos, "qos", False)
    if cap <= 0.0:
        return PowerSolution(0.0, 0.0, qos, "covertness", False)
    candidates = [(cap, "covertness"), (qos, "qos"), (budget.p_b_max, "budget")]
    p_b, label = min(candidates, key=lambda c: c[0])
    return PowerSolution(budget.p_r_max, p_b, qos, label, True)


def optimal_power(budget, constraints, gains, noise, cap) -> PowerSolution:
    """Dispatch on the budget type; ``gains`` is a CompositeChannels."""
    if isinstance(budget, DownlinkBudget):
        return optimal_power_downlink(budget, constraints, gains.roy_sq, noise, cap)
    return optimal_power_uplink(budget, constraints, gains.roy_sq, gains.bob_sq, noise, cap)


# ----------------------------------------------------------------------------
# constraint checks on the original problems
# ----------------------------------------------------------------------------

def downlink_violations(p_r, p_b, g_ab_sq, g_ar_sq, budget: DownlinkBudget,
                        constraints: ConstraintSet, noise, n, ratios, tol=FEAS_TOL) -> list[str]:
    """Names of the downlink constraints violated at the given point (relative slack tol)."""
    bad = []
    pmax = budget.p_a_max
    if p_r < -tol * pmax or p_b < -tol * pmax or p_r + p_b > pmax * (1.0 + tol):
        bad.append("power-budget")
    if p_r < p_b * (1.0 - tol):
        bad.append("power-order")
    if g_ar_sq > g_ab_sq * (1.0 + tol):
        bad.append("sic-order")
    gamma = constraints.gamma_th
    if (p_r - gamma * p_b) * g_ar_sq < gamma * noise * (1.0 - tol):
        bad.append("qos")
    if p_b > 0.0 and p_r > 0.0:
        if avg_min_dep_downlink(p_r, p_b, n, ratios) < 1.0 - constraints.epsilon - tol:
            bad.append("covertness")
    elif p_b > 0.0:
        bad.append("covertness")
    return bad


def uplink_violations(p_r, p_b, g_ra_sq, g_ba_sq, budget: UplinkBudget,
                      constraints: ConstraintSet, noise, n, ratios, tol=FEAS_TOL) -> list[str]:
    """Names of the uplink constraints violated at the given point."""
    bad = []
    if p_r > budget.p_r_max * (1.0 + tol) or p_b > budget.p_b_max * (1.0 + tol) or p_r < 0 or p_b < 0:
        bad.append("power-budget")
    if g_ra_sq < g_ba_sq * (1.0 - tol):
        bad.append("sic-order")
    gamma = constraints.gamma_th
    if p_r * g_ra_sq < gamma * (p_b * g_ba_sq + noise) * (1.0 - tol):
        bad.append("qos")
    if p_b > 0.0 and p_r > 0.0:
        if avg_min_dep_uplink(p_r, p_b, n, ratios) < 1.0 - constraints.epsilon - tol:
            bad.append("covertness")
    elif p_b > 0.0:
        bad.append("covertness")
    return bad


def violations(p_r, p_b, gains, budget, constraints, noise, n, ratios, tol=FEAS_TOL) -> list[str]:
    if isinstance(budget, DownlinkBudget):
        return downlink_violations(p_r, p_b, gains.bob_sq, gains.roy_sq, budget, constraints,
                                   noise, n, ratios, tol)
    return uplink_violations(p_r, p_b, gains.roy_sq, gains.bob_sq, budget, constraints,
                             noise, n, ratios, tol)
