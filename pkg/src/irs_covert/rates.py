"""NOMA achievable rates (bits/s/Hz, base-2 logarithm throughout)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DownlinkRates:
    r_b_sr: float   # Bob decoding Roy's public signal (SIC first stage)
    r_b_sb: float   # Bob decoding his covert signal after SIC
    r_r_sr: float   # Roy decoding his signal, covert signal as noise


@dataclass(frozen=True)
class UplinkRates:
    r_a_sr: float   # Alice decoding Roy first, Bob as noise
    r_a_sb: float   # Alice decoding Bob after SIC


def _check(noise, **kw):
    if not noise > 0.0:
        raise ValueError("noise power must be strictly positive")
    for k, v in kw.items():
        if np.any(np.asarray(v) < 0.0):
            raise ValueError(f"{k} must be non-negative")


def downlink_rates(p_r, p_b, g_ab_sq, g_ar_sq, noise) -> DownlinkRates:
    _check(noise, p_r=p_r, p_b=p_b, g_ab_sq=g_ab_sq, g_ar_sq=g_ar_sq)
    return DownlinkRates(
        r_b_sr=float(np.log2(1.0 + p_r * g_ab_sq / (p_b * g_ab_sq + noise))),
        r_b_sb=float(np.log2(1.0 + p_b * g_ab_sq / noise)),
        r_r_sr=float(np.log2(1.0 + p_r * g_ar_sq / (p_b * g_ar_sq + noise))),
    )


def uplink_rates(p_r, p_b, g_ra_sq, g_ba_sq, noise) -> UplinkRates:
    _check(noise, p_r=p_r, p_b=p_b, g_ra_sq=g_ra_sq, g_ba_sq=g_ba_sq)
    return UplinkRates(
        r_a_sr=float(np.log2(1.0 + p_r * g_ra_sq / (p_b * g_ba_sq + noise))),
        r_a_sb=float(np.log2(1.0 + p_b * g_ba_sq / noise)),
    )


def covert_rate(p_b, g_bob_sq, noise) -> float:
    """log2(1 + P_b |g|^2 / sigma0^2), the objective in both directions."""
    _check(noise, p_b=p_b, g_bob_sq=g_bob_sq)
    return float(np.log2(1.0 + p_b * g_bob_sq / noise))


def gamma_threshold(r_min) -> float:
    """SINR threshold 2^R_min - 1 for the public user's QoS floor."""
    if r_min < 0.0:
        raise ValueError("R_min must be non-negative")
    return float(2.0 ** r_min - 1.0)
