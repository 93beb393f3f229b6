"""Willie's radiometer in the K -> infinity limit: closed-form detection metrics.

The cascaded scalars (delta_N downlink, zeta_N1 / zeta_N2 uplink) are treated
as CN(0, N), so their squared magnitudes are exponential with mean N.  Willie
knows the instantaneous direct-link gains and sets his threshold from them.

Every function accepts numpy arrays for the channel gains and broadcasts.
Probabilities are checked to lie in [-1e-12, 1 + 1e-12] before being clipped
to [0, 1]; anything further out raises ``ProbabilityRangeError``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import LinkLosses

PROB_SLACK = 1e-12
SINGULAR_TOL = 1e-9


class ProbabilityRangeError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PathLossRatios:
    """phi1 = L_a L_w / L_aw, phi2 = L_b / L_r, phi3 = L_r L_w / L_bw, phi4 = phi2 phi3."""
    phi1: float
    phi2: float
    phi3: float
    phi4: float

    def __post_init__(self):
        if not all(v > 0.0 for v in (self.phi1, self.phi2, self.phi3, self.phi4)):
            raise ValueError("path-loss ratios must be strictly positive")

    @classmethod
    def from_losses(cls, losses: LinkLosses) -> "PathLossRatios":
        phi2 = losses.b / losses.r
        phi3 = losses.r * losses.w / losses.bw
        # phi4 = L_b L_w / L_bw, formed as the product so phi4 == phi2*phi3 holds exactly
        return cls(losses.a * losses.w / losses.aw, phi2, phi3, phi2 * phi3)

    @classmethod
    def mirrored(cls, phi1: float) -> "PathLossRatios":
        """Uplink ratios that reproduce the downlink form (phi2 = 1, phi3 = phi4 = phi1)."""
        return cls(phi1, 1.0, phi1, phi1)


@dataclass(frozen=True)
class DetectionReport:
    """Detection metrics at one threshold and one channel state."""
    direction: str
    threshold: float
    p_false_alarm: float
    p_miss_detection: float
    dep: float
    branch: int           # 1: below first break point, 2: between, 3: above
    optimal_threshold: float
    min_dep: float
    min_dep_branch: str   # "boundary" or "interior"
    avg_min_dep: float
    nu: dict


def _prob(x, what="probability"):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < -PROB_SLACK) or np.any(x > 1.0 + PROB_SLACK):
        bad = x[np.isnan(x) | (x < -PROB_SLACK) | (x > 1.0 + PROB_SLACK)]
        raise ProbabilityRangeError(f"{what} outside [0,1]: {bad.ravel()[:4]}")
    out = np.clip(x, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _positive(**kw):
    for k, v in kw.items():
        if np.any(~(np.asarray(v, dtype=float) > 0.0)):
            raise ValueError(f"{k} must be strictly positive")


def _nonneg(**kw):
    for k, v in kw.items():
        if np.any(~(np.asarray(v, dtype=float) >= 0.0)):
            raise ValueError(f"{k} must be non-negative")


def _scalar(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


# ----------------------------------------------------------------------------
# false alarm / miss detection shared by both directions
# ----------------------------------------------------------------------------

def _fa_md(tau, lo, hi, s_fa, s_md):
    """P_FA = exp((lo - tau)/s_fa) above lo; P_MD = 1 - exp((hi - tau)/s_md) above hi."""
    tau, lo, hi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (tau, lo, hi)))
    fa = np.ones_like(tau)
    md = np.zeros_like(tau)
    above_lo = tau > lo
    fa[above_lo] = np.exp(((lo - tau) / s_fa)[above_lo])
    above_hi = tau > hi
    md[above_hi] = -np.expm1(((hi - tau) / s_md)[above_hi])
    branch = np.where(tau < lo, 1, np.where(tau <= hi, 2, 3))
    return fa, md, branch


def _dl_break_points(p_r, p_b, haw_sq, losses, noise):
    lo = noise + p_r * np.asarray(haw_sq, dtype=float) / losses.aw
    hi = noise + (p_r + p_b) * np.asarray(haw_sq, dtype=float) / losses.aw
    return lo, hi


def _ul_break_points(p_r, p_b, hrw_sq, hbw_sq, losses, noise):
    lo = noise + p_r * np.asarray(hrw_sq, dtype=float) / losses.rw
    hi = lo + p_b * np.asarray(hbw_sq, dtype=float) / losses.bw
    return lo, hi


def _check_ratios(ratios, losses):
    if ratios is None:
        return PathLossRatios.from_losses(losses)
    ref = PathLossRatios.from_losses(losses)
    for k in ("phi1", "phi2", "phi3", "phi4"):
        a, b = getattr(ratios, k), getattr(ref, k)
        if abs(a - b) > 1e-9 * abs(b):
            warnings.warn(f"{k}={a} disagrees with the link losses ({b}); "
                          "threshold branches will not join continuously", RuntimeWarning)
    return ratios


# ----------------------------------------------------------------------------
# downlink
# ----------------------------------------------------------------------------

def dep_downlink_components(tau, p_r, p_b, haw_sq, n, losses: LinkLosses, noise):
    """(P_FA, P_MD, branch) for the downlink radiometer. Vectorised in tau / haw_sq."""
    _positive(p_r=p_r, p_b=p_b, noise=noise, n=n)
    _nonneg(haw_sq=haw_sq)
    lo, hi = _dl_break_points(p_r, p_b, haw_sq, losses, noise)
    s1 = p_r * n / (losses.a * losses.w)
    s2 = (p_r + p_b) * n / (losses.a * losses.w)
    return _fa_md(tau, lo, hi, s1, s2)


def _dl_x0(p_r, p_b, n, phi1):
    """Case split of the threshold: |h_aw|^2 >= (P_r N / (P_b phi1)) ln((P_r+P_b)/P_r)."""
    return p_r * n / (p_b * phi1) * math.log1p(p_b / p_r)


def optimal_threshold_downlink(p_r, p_b, haw_sq, n, losses: LinkLosses, noise, ratios=None):
    _positive(p_r=p_r, p_b=p_b, noise=noise, n=n)
    _nonneg(haw_sq=haw_sq)
    ratios = _check_ratios(ratios, losses)
    haw_sq = np.asarray(haw_sq, dtype=float)
    x0 = _dl_x0(p_r, p_b, n, ratios.phi1)
    boundary = noise + (p_r + p_b) * haw_sq / losses.aw
    interior = noise + p_r * (p_r + p_b) * n / (p_b * losses.a * losses.w) * math.log1p(p_b / p_r)
    return _scalar(np.where(haw_sq >= x0, boundary, interior))


def min_dep_downlink(p_r, p_b, haw_sq, n, ratios: PathLossRatios):
    """Minimum DEP over tau for given |h_aw|^2."""
    _positive(p_r=p_r, p_b=p_b, n=n)
    _nonneg(haw_sq=haw_sq)
    x = np.asarray(haw_sq, dtype=float)
    phi1 = ratios.phi1
    x0 = _dl_x0(p_r, p_b, n, phi1)
    lr = math.log1p(p_b / p_r)
    log_c = math.log(p_b / p_r) - (p_r + p_b) / p_b * lr
    out = np.empty_like(x)
    hi = x >= x0
    out[hi] = np.exp(-p_b * phi1 * x[hi] / (p_r * n))
    out[~hi] = 1.0 - np.exp(log_c + phi1 * x[~hi] / n)
    return _prob(out, "min DEP")


def _third_term(log_c, z, b_minus_1, x0):
    """c * (exp((b-1) x0) - 1) / (b - 1), with the small-(b-1) series limit."""
    if abs(b_minus_1) < SINGULAR_TOL:
        ratio = x0 * (1.0 + z / 2.0 + z * z / 6.0)
    else:
        ratio = math.expm1(z) / b_minus_1
    return math.exp(log_c) * ratio


def _avg_min_dep_scalar(a, lr, log_c, b_minus_1, z):
    """Expectation of the two-branch minimum DEP over x ~ Exp(1).

    a     : decay rate in the boundary branch exp(-a x)
    lr    : log of the power ratio, so that x0 = lr / a
    log_c : log of the interior-branch prefactor
    """
    x0 = lr / a
    term1 = math.exp(-(1.0 + 1.0 / a) * lr) / (a + 1.0)
    term2 = -math.expm1(-lr / a)
    term3 = _third_term(log_c, z, b_minus_1, x0)
    return term1 + term2 - term3


def avg_min_dep_downlink(p_r, p_b, n, ratios: PathLossRatios):
    """Minimum average DEP with |h_aw|^2 ~ Exp(1). Broadcasts over p_r, p_b, n."""
    _positive(p_r=p_r, p_b=p_b, n=n)
    phi1 = ratios.phi1

    def one(pr, pb, nn):
        a = pb * phi1 / (pr * nn)
        lr = math.log1p(pb / pr)
        log_c = math.log(pb / pr) - (pr + pb) / pb * lr
        b1 = phi1 / nn - 1.0
        z = (pr / pb) * (1.0 - nn / phi1) * lr
        return _avg_min_dep_scalar(a, lr, log_c, b1, z)

    vals = np.vectorize(one, otypes=[float])(p_r, p_b, n)
    return _prob(vals, "average min DEP")


def dep_downlink(tau, p_r, p_b, haw_sq, n, losses: LinkLosses, noise) -> DetectionReport:
    """Full downlink report at a scalar threshold and channel gain."""
    ratios = PathLossRatios.from_losses(losses)
    fa, md, branch = dep_downlink_components(tau, p_r, p_b, haw_sq, n, losses, noise)
    fa, md = float(fa), float(md)
    tau_star = optimal_threshold_downlink(p_r, p_b, haw_sq, n, losses, noise, ratios)
    lo, hi = _dl_break_points(p_r, p_b, haw_sq, losses, noise)
    nu1 = math.exp((float(lo) - tau) / (p_r * n / (losses.a * losses.w)))
    nu2 = math.exp((float(hi) - tau) / ((p_r + p_b) * n / (losses.a * losses.w)))
    return DetectionReport(
        direction="downlink", threshold=float(tau),
        p_false_alarm=_prob(fa), p_miss_detection=_prob(md),
        dep=_prob(fa + md, "DEP"),
        branch=int(branch),
        optimal_threshold=float(tau_star),
        min_dep=float(min_dep_downlink(p_r, p_b, haw_sq, n, ratios)),
        min_dep_branch="boundary" if haw_sq >= _dl_x0(p_r, p_b, n, ratios.phi1) else "interior",
        avg_min_dep=float(avg_min_dep_downlink(p_r, p_b, n, ratios)),
        nu={"nu1": nu1, "nu2": nu2},
    )


# ----------------------------------------------------------------------------
# uplink
# ----------------------------------------------------------------------------

def dep_uplink_components(tau, p_r, p_b, hrw_sq, hbw_sq, n, losses: LinkLosses, noise):
    """(P_FA, P_MD, branch) for the uplink radiometer.

    The miss-detection exponent uses the pooled scale (P_r/L_r + P_b/L_b) N / L_w.
    """
    _positive(p_r=p_r, p_b=p_b, noise=noise, n=n)
    _nonneg(hrw_sq=hrw_sq, hbw_sq=hbw_sq)
    lo, hi = _ul_break_points(p_r, p_b, hrw_sq, hbw_sq, losses, noise)
    s3 = p_r * n / (losses.r * losses.w)
    s4 = (p_r / losses.r + p_b / losses.b) * n / losses.w
    return _fa_md(tau, lo, hi, s3, s4)


def _ul_x0(p_r, p_b, n, ratios):
    return p_r * n / (p_b * ratios.phi3) * math.log1p(p_b / (p_r * ratios.phi2))


def optimal_threshold_uplink(p_r, p_b, hrw_sq, hbw_sq, n, losses: LinkLosses, noise, ratios=None):
    _positive(p_r=p_r, p_b=p_b, noise=noise, n=n)
    _nonneg(hrw_sq=hrw_sq, hbw_sq=hbw_sq)
    ratios = _check_ratios(ratios, losses)
    hrw_sq = np.asarray(hrw_sq, dtype=float)
    hbw_sq = np.asarray(hbw_sq, dtype=float)
    phi2 = ratios.phi2
    lr = math.log1p(p_b / (p_r * phi2))
    x0 = _ul_x0(p_r, p_b, n, ratios)
    direct_r = p_r * hrw_sq / losses.rw
    boundary = noise + direct_r + p_b * hbw_sq / losses.bw
    interior = (direct_r - p_r * phi2 * hbw_sq / losses.bw + noise
                + p_r * (p_r * phi2 + p_b) * n / (p_b * losses.r * losses.w) * lr)
    return _scalar(np.where(hbw_sq >= x0, boundary, interior))


def min_dep_uplink(p_r, p_b, hbw_sq, n, ratios: PathLossRatios):
    _positive(p_r=p_r, p_b=p_b, n=n)
    _nonneg(hbw_sq=hbw_sq)
    x = np.asarray(hbw_sq, dtype=float)
    q = p_r * ratios.phi2
    x0 = _ul_x0(p_r, p_b, n, ratios)
    lr = math.log1p(p_b / q)
    log_c = math.log(p_b / q) - (q + p_b) / p_b * lr
    out = np.empty_like(x)
    hi = x >= x0
    out[hi] = np.exp(-p_b * ratios.phi3 * x[hi] / (p_r * n))
    out[~hi] = 1.0 - np.exp(log_c + ratios.phi4 * x[~hi] / n)
    return _prob(out, "min DEP")


def avg_min_dep_uplink(p_r, p_b, n, ratios: PathLossRatios):
    """Minimum average DEP with |h_bw|^2 ~ Exp(1). Broadcasts over p_r, p_b, n."""
    _positive(p_r=p_r, p_b=p_b, n=n)
    phi2, phi3, phi4 = ratios.phi2, ratios.phi3, ratios.phi4

    def one(pr, pb, nn):
        q = pr * phi2
        a = pb * phi3 / (pr * nn)
        lr = math.log1p(pb / q)
        log_c = math.log(pb / q) - (q + pb) / pb * lr
        b1 = phi4 / nn - 1.0
        z = (pr / pb) * (phi2 - nn / phi3) * lr
        return _avg_min_dep_scalar(a, lr, log_c, b1, z)

    vals = np.vectorize(one, otypes=[float])(p_r, p_b, n)
    return _prob(vals, "average min DEP")


def dep_uplink(tau, p_r, p_b, hrw_sq, hbw_sq, n, losses: LinkLosses, noise) -> DetectionReport:
    ratios = PathLossRatios.from_losses(losses)
    fa, md, branch = dep_uplink_components(tau, p_r, p_b, hrw_sq, hbw_sq, n, losses, noise)
    fa, md = float(fa), float(md)
    lo, hi = _ul_break_points(p_r, p_b, hrw_sq, hbw_sq, losses, noise)
    nu3 = math.exp((float(lo) - tau) / (p_r * n / (losses.r * losses.w)))
    nu4 = math.exp((float(hi) - tau) / ((p_r / losses.r + p_b / losses.b) * n / losses.w))
    return DetectionReport(
        direction="uplink", threshold=float(tau),
        p_false_alarm=_prob(fa), p_miss_detection=_prob(md),
        dep=_prob(fa + md, "DEP"), branch=int(branch),
        optimal_threshold=float(optimal_threshold_uplink(p_r, p_b, hrw_sq, hbw_sq, n,
                                                         losses, noise, ratios)),
        min_dep=float(min_dep_uplink(p_r, p_b, hbw_sq, n, ratios)),
        min_dep_branch="boundary" if hbw_sq >= _ul_x0(p_r, p_b, n, ratios) else "interior",
        avg_min_dep=float(avg_min_dep_uplink(p_r, p_b, n, ratios)),
        nu={"nu3": nu3, "nu4": nu4},
    )


# ----------------------------------------------------------------------------
# covertness inversion
# ----------------------------------------------------------------------------

def largest_feasible(func, target, cap, rtol=1e-10, max_iter=200, floor=1e-30):
    """Largest x in (0, cap] with func(x) >= target for decreasing func.

    Geometric bisection; the returned point is always on the feasible side.
    Returns cap if func(cap) >= target, and 0.0 if func(floor * cap) < target.
    """
    if not cap > 0.0:
        raise ValueError("search cap must be positive")
    if func(cap) >= target:
        return cap
    hi = cap
    lo = cap * 1e-3
    while func(lo) < target:
        hi = lo
        lo *= 1e-3
        if lo < floor * cap:
            return 0.0
    for _ in range(max_iter):
        if hi / lo - 1.0 <= rtol:
            break
        mid = math.sqrt(lo * hi)
        if func(mid) >= target:
            lo = mid
        else:
            hi = mid
    return lo


def invert_covertness(eps, direction, n, ratios: PathLossRatios, *, p_a_max=None,
                      p_r_max=None, cap=None, rtol=1e-10, max_iter=200):
    """Largest P_b with avg min DEP >= 1 - eps.

    downlink: P_r = p_a_max - P_b inside the DEP; cap defaults to p_a_max.
    uplink:   P_r = p_r_max fixed; cap is Bob's budget P_b^max (required).
    The DEP is strictly decreasing in P_b, so bisection is valid.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    target = 1.0 - eps
    if direction == "downlink":
        if p_a_max is None or not p_a_max > 0.0:
            raise ValueError("downlink inversion needs p_a_max > 0")
        cap = p_a_max if cap is None else min(cap, p_a_max)
        # keep P_r strictly positive at the top of the bracket
        cap = min(cap, p_a_max * (1.0 - 1e-12))

        def f(pb):
            return float(avg_min_dep_downlink(p_a_max - pb, pb, n, ratios))
    elif direction == "uplink":
        if p_r_max is None or not p_r_max > 0.0 or cap is None:
            raise ValueError("uplink inversion needs p_r_max > 0 and cap = P_b^max")

        def f(pb):
            return float(avg_min_dep_uplink(p_r_max, pb, n, ratios))
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return largest_feasible(f, target, cap, rtol=rtol, max_iter=max_iter)
