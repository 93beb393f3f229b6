"""Alternating power / phase optimisation and the benchmark schemes.

Each outer iteration runs the IRS beamforming step at the current powers,
extracts a feasible rank-one phase vector and then re-solves the powers in
closed form.  The objective is always evaluated on realised quantities and
after a full check of the original constraints, so a reported rate is
achievable.  A step is kept only if it does not lower the incumbent value,
which makes the recorded trajectory non-decreasing by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .beamforming import beamform, lift, phase_feasibility
from .channel import NOISE_POWER_W, ChannelRealization, PhaseShiftVector, composite, make_rng
from .detection import PathLossRatios
from .power import (ConstraintSet, DownlinkBudget, PowerSolution, UplinkBudget, covert_cap,
                    optimal_power, violations)
from .rates import covert_rate

INIT_STREAM = 1         # RNG stream for Theta(1)
BF_STREAM = 2           # RNG stream for the Gaussian randomization, keyed by iteration
MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class OptimizerConfig:
    rho: float = 1e-4
    max_iter: int = 50
    q: int = 100
    seed: int = 0
    stream: tuple = ()          # extra RNG keys, e.g. a trial index
    noise: float = NOISE_POWER_W

    def __post_init__(self):
        if not self.rho > 0.0:
            raise ValueError("stopping threshold rho must be positive")
        if self.max_iter < 1 or self.q < 1:
            raise ValueError("max_iter and q must be >= 1")


@dataclass
class OptResult:
    phases: PhaseShiftVector | None
    power: PowerSolution
    covert_rate: float
    trajectory: list
    iterations: int
    feasible: bool
    scheme: str
    violations: list = field(default_factory=list)
    note: str = ""


def _direction(budget) -> str:
    if isinstance(budget, DownlinkBudget):
        return "downlink"
    if isinstance(budget, UplinkBudget):
        return "uplink"
    raise TypeError(f"unknown budget type {type(budget).__name__}")


class _Problem:
    """Everything about one instance that does not change across iterations."""

    def __init__(self, real: ChannelRealization, budget, constraints: ConstraintSet,
                 config: OptimizerConfig):
        self.real, self.budget, self.constraints, self.config = real, budget, constraints, config
        self.direction = _direction(budget)
        self.n = real.n
        self.ratios = PathLossRatios.from_losses(real.losses)
        self.cap = covert_cap(budget, constraints, self.n, self.ratios)
        self.lift = lift(real, self.direction)

    def initial_phases(self) -> PhaseShiftVector:
        rng = make_rng(self.config.seed, *self.config.stream, INIT_STREAM)
        return PhaseShiftVector.random(self.n, rng)

    def initial_power(self) -> PowerSolution:
        """Equal split clipped to the covertness bound (downlink); full P_r^max (uplink)."""
        if self.direction == "downlink":
            p_b = min(self.budget.p_a_max / 2.0, self.cap)
            return PowerSolution(self.budget.p_a_max - p_b, p_b, math.nan, "initial", False)
        p_b = min(self.budget.p_b_max, self.cap)
        return PowerSolution(self.budget.p_r_max, p_b, math.nan, "initial", False)

    def power_step(self, phases) -> PowerSolution:
        gains = composite(self.real, phases, self.direction)
        return optimal_power(self.budget, self.constraints, gains, self.config.noise, self.cap)

    def check(self, phases, power: PowerSolution) -> list[str]:
        gains = composite(self.real, phases, self.direction)
        return violations(power.p_r, power.p_b, gains, self.budget, self.constraints,
                          self.config.noise, self.n, self.ratios)

    def value(self, phases, power: PowerSolution) -> float:
        """Covert rate if every original constraint holds, else 0."""
        if power.p_b <= 0.0 or self.check(phases, power):
            return 0.0
        gains = composite(self.real, phases, self.direction)
        return covert_rate(power.p_b, gains.bob_sq, self.config.noise)

    def beam_step(self, phases, power: PowerSolution, iteration: int) -> PhaseShiftVector:
        """Beamforming at fixed powers; the incumbent is kept unless beaten."""
        gamma = self.constraints.gamma_th
        keys = (self.config.seed, *self.config.stream, BF_STREAM, iteration)
        res = beamform(self.lift, power.p_r, power.p_b, gamma, self.config.noise,
                       q=self.config.q, seed=keys)
        if res.phases is None:
            return phases
        feasible = phase_feasibility(self.lift, power.p_r, power.p_b, gamma, self.config.noise)
        if feasible(phases) and self.lift.gain(phases, "b") > self.lift.gain(res.phases, "b"):
            return phases
        return res.phases


def _finish(prob: _Problem, phases, power, trajectory, iterations, scheme, note=""):
    bad = prob.check(phases, power) if power.p_b > 0.0 else ["no-power"]
    ok = not bad
    rate = prob.value(phases, power) if ok else 0.0
    return OptResult(phases, power, rate, trajectory, iterations, ok, scheme, bad, note)


def _alternate(real, budget, constraints, config, scheme) -> OptResult:
    prob = _Problem(real, budget, constraints, config)
    phases = prob.initial_phases()
    power = prob.power_step(phases)
    if not power.feasible:
        power = prob.initial_power()
    best = prob.value(phases, power)
    trajectory = [best]
    it = 0
    for it in range(1, config.max_iter + 1):
        new_phases = prob.beam_step(phases, power, it)
        new_power = prob.power_step(new_phases)
        if not new_power.feasible:
            new_power = power
        val = prob.value(new_phases, new_power)
        if val >= best:
            phases, power, best = new_phases, new_power, val
        trajectory.append(best)
        if trajectory[-1] - trajectory[-2] < config.rho:
            break
    return _finish(prob, phases, power, trajectory, it, scheme)


def alternate_downlink(real: ChannelRealization, budget: DownlinkBudget,
                       constraints: ConstraintSet, config: OptimizerConfig = OptimizerConfig()
                       ) -> OptResult:
    """Alternating optimisation of (P_r, P_b, Theta) for the downlink."""
    if not isinstance(budget, DownlinkBudget):
        raise TypeError("alternate_downlink needs a DownlinkBudget")
    return _alternate(real, budget, constraints, config, "proposed")


def alternate_uplink(real: ChannelRealization, budget: UplinkBudget,
                     constraints: ConstraintSet, config: OptimizerConfig = OptimizerConfig()
                     ) -> OptResult:
    """Uplink analogue with the reversed SIC ordering."""
    if not isinstance(budget, UplinkBudget):
        raise TypeError("alternate_uplink needs an UplinkBudget")
    return _alternate(real, budget, constraints, config, "proposed")


def alternate(real, budget, constraints, config: OptimizerConfig = OptimizerConfig()) -> OptResult:
    return _alternate(real, budget, constraints, config, "proposed")


def baseline_random_phase(real, budget, constraints, config: OptimizerConfig = OptimizerConfig()
                          ) -> OptResult:
    """Theta(1) of the proposed scheme with the optimal powers and no beamforming."""
    prob = _Problem(real, budget, constraints, config)
    phases = prob.initial_phases()
    power = prob.power_step(phases)
    return _finish(prob, phases, power, [prob.value(phases, power)], 0, "random-phase")


def fixed_powers(budget, alpha1: float) -> tuple[float, float]:
    """(P_r, P_b) of the fixed-allocation benchmark."""
    if not 0.0 < alpha1 < 1.0:
        raise ValueError("alpha1 must lie in (0, 1)")
    if isinstance(budget, DownlinkBudget):
        return (1.0 - alpha1) * budget.p_a_max, alpha1 * budget.p_a_max
    return budget.p_r_max, alpha1 * budget.p_b_max


def baseline_fixed_power(real, budget, constraints, alpha1: float,
                         config: OptimizerConfig = OptimizerConfig()) -> OptResult:
    """Powers fixed by alpha1; beamforming iterated until the gain stops improving."""
    prob = _Problem(real, budget, constraints, config)
    p_r, p_b = fixed_powers(budget, alpha1)
    power = PowerSolution(p_r, p_b, math.nan, "fixed", True)
    phases = prob.initial_phases()
    best = prob.lift.gain(phases, "b")
    feasible = phase_feasibility(prob.lift, p_r, p_b, constraints.gamma_th, config.noise)
    trajectory = [prob.value(phases, power)]
    it = 0
    for it in range(1, config.max_iter + 1):
        new = prob.beam_step(phases, power, it)
        gain = prob.lift.gain(new, "b")
        improved = feasible(new) and (not feasible(phases) or gain >= best)
        if improved:
            phases, best = new, gain
        trajectory.append(max(prob.value(phases, power), trajectory[-1]))
        if not improved or trajectory[-1] - trajectory[-2] < config.rho:
            break
    return _finish(prob, phases, power, trajectory, it, f"fixed-power({alpha1:g})")


def baseline_oma(real, budget, constraints) -> OptResult:
    """Orthogonal access: Willie sees a noise-only slot, so covertness is impossible."""
    return OptResult(None, PowerSolution(0.0, 0.0, math.nan, "covertness", False), 0.0, [0.0], 0,
                     False, "oma", ["covertness"],
                     "orthogonal slots leave no public signal to hide the covert power under")


def baseline_no_irs(real, budget, constraints) -> OptResult:
    """NOMA without an IRS: no phase uncertainty at Willie, covert power is detectable."""
    return OptResult(None, PowerSolution(0.0, 0.0, math.nan, "covertness", False), 0.0, [0.0], 0,
                     False, "no-irs", ["covertness"],
                     "without the IRS Willie's received power has no uncertainty")


SCHEMES = ("proposed", "random-phase", "fixed-power", "oma", "no-irs")


def run_scheme(scheme: str, real, budget, constraints, config: OptimizerConfig = OptimizerConfig(),
               alpha1: float = 0.2) -> OptResult:
    if scheme == "proposed":
        return alternate(real, budget, constraints, config)
    if scheme == "random-phase":
        return baseline_random_phase(real, budget, constraints, config)
    if scheme == "fixed-power":
        return baseline_fixed_power(real, budget, constraints, alpha1, config)
    if scheme == "oma":
        return baseline_oma(real, budget, constraints)
    if scheme == "no-irs":
        return baseline_no_irs(real, budget, constraints)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
