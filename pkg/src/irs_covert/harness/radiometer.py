"""Monte-Carlo model of Willie's radiometer.

Three power models are available for one realisation:

analytic-limit   the K -> infinity average power with direct and reflected
                 powers added (the expression the detection analysis uses)
coherent-limit   the K -> infinity limit of the per-sample signal model,
                 |g_w|^2 P + sigma0^2 with the composite channel g_w
finite-K         the empirical average of |y_w(k)|^2 over K samples

``empirical_min_dep`` estimates the minimum average DEP: Willie sets his
threshold from the instantaneous direct gains and decides on freshly drawn
cascades under each hypothesis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..channel import (NOISE_POWER_W, ChannelRealization, LinkLosses, SystemGeometry,
                       cascade_scalar, complex_normal, make_rng)
from ..detection import optimal_threshold_downlink, optimal_threshold_uplink

MODES = ("analytic-limit", "coherent-limit", "finite-K")
CASCADES = ("gaussian", "physical")
MC_STREAM = 11
TRIAL_STREAM = 12
Z95 = 1.959963984540054


@dataclass(frozen=True)
class RadiometerSample:
    hypothesis: str
    power: float                 # average received power P_w (watts)
    cascade: tuple               # realised cascade scalar(s) at Willie
    k: int | None                # sample count, None for the K -> infinity limit


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    ci_low: float
    ci_high: float
    trials: int
    p_false_alarm: float
    p_miss_detection: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


def _check_hypothesis(h):
    if h not in ("H0", "H1"):
        raise ValueError(f"hypothesis must be 'H0' or 'H1', got {h!r}")


def _willie_links(real: ChannelRealization, phases, direction):
    """[(direct coeff, cascade scalar, L_direct, L_irs_side)], one entry per transmitter."""
    L = real.losses
    if direction == "downlink":
        delta = cascade_scalar(real.h_a, real.h_w, phases)
        return [(real.h_aw, delta, L.aw, L.a)]
    z1 = cascade_scalar(real.h_r, real.h_w, phases)
    z2 = cascade_scalar(real.h_b, real.h_w, phases)
    return [(real.h_rw, z1, L.rw, L.r), (real.h_bw, z2, L.bw, L.b)]


def radiometer_trial(real: ChannelRealization, phases, powers, hypothesis, mode="analytic-limit",
                     k=None, seed=0, direction="downlink", noise=NOISE_POWER_W) -> RadiometerSample:
    """Willie's average received power for one realisation and hypothesis.

    ``powers`` is (P_r, P_b).  Downlink: both messages leave Alice through one
    composite channel.  Uplink: Roy and Bob transmit through their own links.
    """
    _check_hypothesis(hypothesis)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    p_r, p_b = powers
    if p_r < 0.0 or p_b < 0.0:
        raise ValueError("powers must be non-negative")
    h1 = hypothesis == "H1"
    Lw = real.losses.w
    links = _willie_links(real, phases, direction)
    cascades = tuple(c for (_, c, _, _) in links)
    if direction == "downlink":
        tx = [p_r + (p_b if h1 else 0.0)]
    else:
        tx = [p_r, p_b if h1 else 0.0]

    if mode == "analytic-limit":
        pw = noise + sum(p * (abs(hd) ** 2 / Ld + abs(c) ** 2 / (Li * Lw))
                         for p, (hd, c, Ld, Li) in zip(tx, links))
        return RadiometerSample(hypothesis, float(pw), cascades, None)
    gains = [hd / math.sqrt(Ld) + c / math.sqrt(Li * Lw) for (hd, c, Ld, Li) in links]
    if mode == "coherent-limit":
        pw = noise + sum(p * abs(g) ** 2 for p, g in zip(tx, gains))
        return RadiometerSample(hypothesis, float(pw), cascades, None)

    if k is None or int(k) < 1:
        raise ValueError("finite-K mode needs K >= 1")
    k = int(k)
    rng = make_rng(seed, TRIAL_STREAM)
    s_r = complex_normal(rng, k)
    s_b = complex_normal(rng, k)
    z = math.sqrt(noise) * complex_normal(rng, k)
    if direction == "downlink":
        y = gains[0] * (math.sqrt(p_r) * s_r + (math.sqrt(p_b) * s_b if h1 else 0.0)) + z
    else:
        y = gains[0] * math.sqrt(p_r) * s_r + (gains[1] * math.sqrt(p_b) * s_b if h1 else 0.0) + z
    return RadiometerSample(hypothesis, float(np.mean(np.abs(y) ** 2)), cascades, k)


# ----------------------------------------------------------------------------
# empirical minimum average DEP
# ----------------------------------------------------------------------------

def _cascade_draws(rng, size, n, direction, cascade):
    """Cascade scalars for `size` independent trials (one tuple entry per transmitter).

    gaussian: CN(0, N) draws; in the uplink one draw is shared by Roy and Bob,
    which is the pooled model behind the closed-form miss-detection term.
    physical: fresh IRS fading with the phases co-phased for Bob.
    """
    if cascade == "gaussian":
        d = math.sqrt(n) * complex_normal(rng, size)
        return (d,) if direction == "downlink" else (d, d)
    h_a = complex_normal(rng, (size, n))
    h_b = complex_normal(rng, (size, n))
    h_w = complex_normal(rng, (size, n))
    h_ab = complex_normal(rng, size)
    if direction == "downlink":
        theta = np.angle(h_ab)[:, None] - np.angle(np.conj(h_a) * h_b)
        return (np.sum(np.conj(h_a) * np.exp(1j * theta) * h_w, axis=1),)
    h_r = complex_normal(rng, (size, n))
    theta = np.angle(h_ab)[:, None] - np.angle(np.conj(h_b) * h_a)
    e = np.exp(1j * theta) * h_w
    return (np.sum(np.conj(h_r) * e, axis=1), np.sum(np.conj(h_b) * e, axis=1))


def _chunk_errors(direction, p_r, p_b, n, losses: LinkLosses, noise, size, rng, cascade):
    """(false alarms, missed detections) as 0/1 arrays for one chunk of trials."""
    Lw = losses.w
    if direction == "downlink":
        haw_sq = np.abs(complex_normal(rng, size)) ** 2
        tau = optimal_threshold_downlink(p_r, p_b, haw_sq, n, losses, noise)
        (d0,) = _cascade_draws(rng, size, n, direction, cascade)
        (d1,) = _cascade_draws(rng, size, n, direction, cascade)
        g0 = haw_sq / losses.aw + np.abs(d0) ** 2 / (losses.a * Lw)
        g1 = haw_sq / losses.aw + np.abs(d1) ** 2 / (losses.a * Lw)
        pw0 = p_r * g0 + noise
        pw1 = (p_r + p_b) * g1 + noise
    else:
        hrw_sq = np.abs(complex_normal(rng, size)) ** 2
        hbw_sq = np.abs(complex_normal(rng, size)) ** 2
        tau = optimal_threshold_uplink(p_r, p_b, hrw_sq, hbw_sq, n, losses, noise)
        z0, _ = _cascade_draws(rng, size, n, direction, cascade)
        z1, z2 = _cascade_draws(rng, size, n, direction, cascade)
        pw0 = p_r * (hrw_sq / losses.rw + np.abs(z0) ** 2 / (losses.r * Lw)) + noise
        pw1 = (p_r * (hrw_sq / losses.rw + np.abs(z1) ** 2 / (losses.r * Lw))
               + p_b * (hbw_sq / losses.bw + np.abs(z2) ** 2 / (losses.b * Lw)) + noise)
    return (pw0 > tau).astype(float), (pw1 < tau).astype(float)


def empirical_min_dep(direction, p_r, p_b, n, trials=1000, seed=0, cascade="gaussian",
                      geometry: SystemGeometry | None = None, losses: LinkLosses | None = None,
                      noise=NOISE_POWER_W, chunk=2000) -> MonteCarloEstimate:
    """Monte-Carlo minimum average DEP with a normal-approximation 95% CI.

    Trials are generated in chunks keyed by (seed, stream, chunk index), so the
    estimate does not depend on how chunks are scheduled.
    """
    if direction not in ("downlink", "uplink"):
        raise ValueError(f"unknown direction {direction!r}")
    if cascade not in CASCADES:
        raise ValueError(f"cascade must be one of {CASCADES}")
    if int(trials) < 2:
        raise ValueError("need at least 2 trials for a confidence interval")
    if not (p_r > 0.0 and p_b > 0.0):
        raise ValueError("powers must be strictly positive")
    trials = int(trials)
    losses = LinkLosses.from_geometry(geometry) if losses is None else losses
    fa, md = [], []
    for c, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        f, m = _chunk_errors(direction, p_r, p_b, n, losses, noise, size,
                             make_rng(seed, MC_STREAM, c), cascade)
        fa.append(f)
        md.append(m)
    fa, md = np.concatenate(fa), np.concatenate(md)
    err = fa + md
    mean = float(err.mean())
    half = Z95 * float(err.std(ddof=1)) / math.sqrt(trials)
    return MonteCarloEstimate(mean, mean - half, mean + half, trials,
                              float(fa.mean()), float(md.mean()))
