import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from irs_covert.channel import complex_normal, dbm_to_watt, make_rng
from irs_covert.detection import (PathLossRatios, avg_min_dep_downlink, avg_min_dep_uplink,
                                  dep_downlink, dep_downlink_components, dep_uplink,
                                  dep_uplink_components, invert_covertness, min_dep_downlink,
                                  largest_feasible, min_dep_uplink,
                                  optimal_threshold_downlink,
                                  optimal_threshold_uplink)

dbm = st.floats(0.0, 40.0)
ns = st.sampled_from([8, 16, 32, 64])
gain = st.floats(0.0, 20.0)

P_R, P_B = dbm_to_watt(30.0), dbm_to_watt(10.0)
# frozen values of the closed forms at (30 dBm, 10 dBm, N = 32); independently
# reproduced below by quadrature and in the harness by Monte-Carlo
AVG_DL_REF = 0.020704176665205815
AVG_UL_REF = 0.030857780977891814
# largest covert power at eps = 0.3, downlink P_a^max = 25 dBm, N = 32
CAP_DL_25DBM = 2.8650607720115796e-05


def _x0_dl(p_r, p_b, n, ratios):
    return p_r * n / (p_b * ratios.phi1) * math.log((p_r + p_b) / p_r)


def _x0_ul(p_r, p_b, n, ratios):
    return p_r * n / (p_b * ratios.phi3) * math.log((p_r * ratios.phi2 + p_b) / (p_r * ratios.phi2))


def _quad(fn, a):
    """Integral of fn(x) e^{-x} on [0, inf), split at the branch point a."""
    f = lambda x: float(fn(x)) * math.exp(-x)
    lo = integrate.quad(f, 0.0, a, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    hi = integrate.quad(f, a, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return lo + hi


# ----------------------------------------------------------------------------
# path-loss ratios
# ----------------------------------------------------------------------------

def test_ratios_definition(losses, ratios):
    assert ratios.phi1 == pytest.approx(losses.a * losses.w / losses.aw, rel=1e-14)
    assert ratios.phi2 == pytest.approx(losses.b / losses.r, rel=1e-14)
    assert ratios.phi3 == pytest.approx(losses.r * losses.w / losses.bw, rel=1e-14)
    assert ratios.phi4 == pytest.approx(losses.b * losses.w / losses.bw, rel=1e-12)
    assert ratios.phi4 == ratios.phi2 * ratios.phi3


def test_ratios_positive():
    with pytest.raises(ValueError):
        PathLossRatios(1.0, 0.0, 1.0, 1.0)


# ----------------------------------------------------------------------------
# downlink DEP
# ----------------------------------------------------------------------------

def test_dep_downlink_below_lower_boundary(losses, noise):
    g = 0.8
    lo = noise + P_R * g / losses.aw
    rep = dep_downlink(lo * 0.999, P_R, P_B, g, 32, losses, noise)
    assert rep.dep == 1.0 and rep.branch == 1
    at = dep_downlink(lo, P_R, P_B, g, 32, losses, noise)
    assert at.p_false_alarm == 1.0 and at.p_miss_detection == 0.0 and at.dep == 1.0
    assert at.nu["nu1"] == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(dbm, dbm, gain, ns)
def test_dep_downlink_continuous_at_breaks(pr_dbm, pb_dbm, g, n):
    from irs_covert.channel import LinkLosses, NOISE_POWER_W
    losses = LinkLosses.from_geometry()
    p_r, p_b = dbm_to_watt(pr_dbm), dbm_to_watt(pb_dbm)
    lo = NOISE_POWER_W + p_r * g / losses.aw
    hi = NOISE_POWER_W + (p_r + p_b) * g / losses.aw
    h = 1e-10 * p_r * n / (losses.a * losses.w)     # far below the exponential scale
    for t in (lo, hi):
        d = np.array([t - h, t, t + h])
        fa, md, _ = dep_downlink_components(d, p_r, p_b, g, n, losses, NOISE_POWER_W)
        assert np.ptp(fa + md) <= 1e-9


def test_dep_downlink_monte_carlo(losses, noise):
    p = dbm_to_watt(20.0)
    g, n, trials = 0.7, 32, 1_000_000
    tau = noise + 2 * p * g / losses.aw + 1e-12
    rep = dep_downlink(tau, p, p, g, n, losses, noise)
    rng = make_rng(99)
    d0 = np.abs(complex_normal(rng, trials)) ** 2 * n
    d1 = np.abs(complex_normal(rng, trials)) ** 2 * n
    p0 = noise + p * (g / losses.aw + d0 / (losses.a * losses.w))
    p1 = noise + 2 * p * (g / losses.aw + d1 / (losses.a * losses.w))
    fa, md = np.mean(p0 > tau), np.mean(p1 < tau)
    assert abs(rep.p_false_alarm - fa) < 5 * math.sqrt(fa * (1 - fa) / trials) + 1e-4
    assert abs(rep.p_miss_detection - md) < 5 * math.sqrt(md * (1 - md) / trials) + 1e-4
    assert rep.dep == pytest.approx(rep.p_false_alarm + rep.p_miss_detection, abs=1e-15)


def test_threshold_downlink_case_split(losses, ratios, noise):
    n = 32
    x0 = _x0_dl(P_R, P_B, n, ratios)
    boundary = noise + (P_R + P_B) * x0 / losses.aw
    interior = noise + P_R * (P_R + P_B) * n / (P_B * losses.a * losses.w) * math.log((P_R + P_B) / P_R)
    assert boundary == pytest.approx(interior, rel=1e-9)
    assert optimal_threshold_downlink(P_R, P_B, x0, n, losses, noise) == pytest.approx(boundary, rel=1e-9)
    assert optimal_threshold_downlink(P_R, P_B, x0 * (1 - 1e-9), n, losses, noise) == \
        pytest.approx(interior, rel=1e-9)


def test_threshold_downlink_zero_channel(losses, noise):
    n = 32
    ref = noise + P_R * (P_R + P_B) * n / (P_B * losses.a * losses.w) * math.log((P_R + P_B) / P_R)
    assert optimal_threshold_downlink(P_R, P_B, 0.0, n, losses, noise) == pytest.approx(ref, rel=1e-13)


def test_threshold_requires_covert_power(losses, noise):
    with pytest.raises(ValueError):
        optimal_threshold_downlink(P_R, 0.0, 1.0, 32, losses, noise)
    with pytest.raises(ValueError):
        optimal_threshold_uplink(P_R, 0.0, 1.0, 1.0, 32, losses, noise)
    with pytest.raises(ValueError):
        dep_downlink(1e-9, P_R, P_B, 1.0, 32, losses, 0.0)


def test_threshold_ratio_mismatch_warns(losses, noise):
    bad = PathLossRatios(1.0, 1.0, 1.0, 1.0)
    with pytest.warns(RuntimeWarning):
        optimal_threshold_downlink(P_R, P_B, 1.0, 32, losses, noise, bad)


@settings(max_examples=60, deadline=None)
@given(dbm, dbm, gain, ns)
def test_threshold_downlink_grid_optimal(pr_dbm, pb_dbm, g, n):
    from irs_covert.channel import LinkLosses, NOISE_POWER_W
    losses = LinkLosses.from_geometry()
    p_r, p_b = dbm_to_watt(pr_dbm), dbm_to_watt(pb_dbm)
    tau = optimal_threshold_downlink(p_r, p_b, g, n, losses, NOISE_POWER_W)
    fa, md, _ = dep_downlink_components(tau, p_r, p_b, g, n, losses, NOISE_POWER_W)
    grid = np.linspace(NOISE_POWER_W, 10 * tau, 10_000)
    gfa, gmd, _ = dep_downlink_components(grid, p_r, p_b, g, n, losses, NOISE_POWER_W)
    assert fa + md <= np.min(gfa + gmd) + 1e-12


def test_min_dep_downlink_zero_channel(ratios):
    ref = 1 - (P_B / P_R) * ((P_R + P_B) / P_R) ** (-(P_R + P_B) / P_B)
    assert float(min_dep_downlink(P_R, P_B, 0.0, 32, ratios)) == pytest.approx(ref, rel=1e-13)


def test_min_dep_downlink_continuous(ratios):
    x0 = _x0_dl(P_R, P_B, 32, ratios)
    v = min_dep_downlink(P_R, P_B, np.array([x0 * (1 - 1e-12), x0]), 32, ratios)
    assert np.ptp(v) < 1e-10


@settings(max_examples=60, deadline=None)
@given(dbm, dbm, gain, ns)
def test_min_dep_equals_dep_at_threshold(pr_dbm, pb_dbm, g, n):
    from irs_covert.channel import LinkLosses, NOISE_POWER_W
    losses = LinkLosses.from_geometry()
    ratios = PathLossRatios.from_losses(losses)
    p_r, p_b = dbm_to_watt(pr_dbm), dbm_to_watt(pb_dbm)
    tau = optimal_threshold_downlink(p_r, p_b, g, n, losses, NOISE_POWER_W)
    fa, md, _ = dep_downlink_components(tau, p_r, p_b, g, n, losses, NOISE_POWER_W)
    assert float(fa + md) == pytest.approx(float(min_dep_downlink(p_r, p_b, g, n, ratios)), abs=1e-12)
    hrw, hbw = 0.5, g
    tau = optimal_threshold_uplink(p_r, p_b, hrw, hbw, n, losses, NOISE_POWER_W)
    fa, md, _ = dep_uplink_components(tau, p_r, p_b, hrw, hbw, n, losses, NOISE_POWER_W)
    assert float(fa + md) == pytest.approx(float(min_dep_uplink(p_r, p_b, hbw, n, ratios)), abs=1e-12)


def test_avg_min_dep_frozen_and_quadrature(ratios):
    assert float(avg_min_dep_downlink(P_R, P_B, 32, ratios)) == pytest.approx(AVG_DL_REF, abs=1e-15)
    assert float(avg_min_dep_uplink(P_R, P_B, 32, ratios)) == pytest.approx(AVG_UL_REF, abs=1e-15)
    q_dl = _quad(lambda x: min_dep_downlink(P_R, P_B, x, 32, ratios), _x0_dl(P_R, P_B, 32, ratios))
    q_ul = _quad(lambda x: min_dep_uplink(P_R, P_B, x, 32, ratios), _x0_ul(P_R, P_B, 32, ratios))
    assert abs(q_dl - AVG_DL_REF) < 1e-6
    assert abs(q_ul - AVG_UL_REF) < 1e-6


def test_avg_min_dep_limits(ratios):
    assert float(avg_min_dep_downlink(1.0, 1e6, 32, ratios)) < 1e-6
    assert float(avg_min_dep_uplink(1.0, 1e6, 32, ratios)) < 1e-6
    assert float(avg_min_dep_downlink(1e9, 0.01, 32, ratios)) > 1 - 1e-6
    assert float(avg_min_dep_uplink(1e9, 0.01, 32, ratios)) > 1 - 1e-6


def test_avg_min_dep_monotone(ratios):
    p = dbm_to_watt(np.arange(0.0, 61.0, 2.0))
    for fn in (avg_min_dep_downlink, avg_min_dep_uplink):
        assert np.all(np.diff(fn(p, P_B, 32, ratios)) > 0)
        assert np.all(np.diff(fn(P_R, p, 32, ratios)) < 0)
        assert np.all(np.diff(fn(P_R, P_B, np.arange(1, 257), ratios)) > 0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-30.0, 70.0), st.floats(-30.0, 70.0), st.integers(1, 512))
def test_probabilities_in_unit_interval(pr_dbm, pb_dbm, n):
    from irs_covert.channel import LinkLosses
    ratios = PathLossRatios.from_losses(LinkLosses.from_geometry())
    p_r, p_b = dbm_to_watt(pr_dbm), dbm_to_watt(pb_dbm)
    for v in (avg_min_dep_downlink(p_r, p_b, n, ratios), avg_min_dep_uplink(p_r, p_b, n, ratios),
              min_dep_downlink(p_r, p_b, 1.3, n, ratios), min_dep_uplink(p_r, p_b, 1.3, n, ratios)):
        assert 0.0 <= float(v) <= 1.0


def test_uplink_mirrors_downlink():
    r = PathLossRatios.mirrored(5000.0)
    p_r, p_b = dbm_to_watt(np.array([10.0, 25.0, 40.0])), dbm_to_watt(np.array([5.0, 20.0, 0.0]))
    for n in (8, 32, 128):
        assert np.allclose(avg_min_dep_uplink(p_r, p_b, n, r), avg_min_dep_downlink(p_r, p_b, n, r),
                           rtol=0, atol=1e-13)


def test_removable_singularity_continuous():
    vals = []
    for d in (1e-7, 1.001e-9, 0.999e-9, 1e-11, 0.0):
        r = PathLossRatios(32 * (1 + d), 1.0, 32 * (1 + d), 32 * (1 + d))
        vals.append((float(avg_min_dep_downlink(1.0, 0.01, 32, r)),
                     float(avg_min_dep_uplink(1.0, 0.01, 32, r))))
    vals = np.array(vals)
    assert np.all(np.isfinite(vals))
    assert np.ptp(vals[1:3, 0]) < 1e-10 and np.ptp(vals[1:3, 1]) < 1e-10
    assert np.ptp(vals[:, 0]) < 1e-7


# ----------------------------------------------------------------------------
# uplink DEP
# ----------------------------------------------------------------------------

def test_dep_uplink_branches(losses, noise):
    hrw, hbw = 0.4, 1.2
    lo = noise + P_R * hrw / losses.rw
    hi = lo + P_B * hbw / losses.bw
    assert dep_uplink(lo * 0.99, P_R, P_B, hrw, hbw, 32, losses, noise).dep == 1.0
    h = 1e-10 * P_R * 32 / (losses.r * losses.w)
    for t in (lo, hi):
        d = np.array([t - h, t, t + h])
        fa, md, _ = dep_uplink_components(d, P_R, P_B, hrw, hbw, 32, losses, noise)
        assert np.ptp(fa + md) < 1e-9


def test_dep_uplink_monte_carlo(losses, noise):
    p_r, p_b = dbm_to_watt(20.0), dbm_to_watt(20.0)
    hrw, hbw, n, trials = 0.6, 0.9, 32, 1_000_000
    lo = noise + p_r * hrw / losses.rw
    tau = lo + p_b * hbw / losses.bw + 1e-12
    rep = dep_uplink(tau, p_r, p_b, hrw, hbw, n, losses, noise)
    rng = make_rng(98)
    z1, z2, z1b = complex_normal(rng, (3, trials)) * math.sqrt(n)
    p0 = lo + p_r * np.abs(z1) ** 2 / (losses.r * losses.w)
    # independent CN(0, N) cascades: the combined reflected term is exactly
    # CN(0, (P_r/L_r + P_b/L_b) N / L_w), the pooled miss-detection scale
    refl = math.sqrt(p_r / losses.r) * z1b + math.sqrt(p_b / losses.b) * z2
    p1 = tau - 1e-12 + np.abs(refl) ** 2 / losses.w
    fa, md = np.mean(p0 > tau), np.mean(p1 < tau)
    assert abs(rep.p_false_alarm - fa) < 5 * math.sqrt(fa * (1 - fa) / trials) + 1e-4
    assert abs(rep.p_miss_detection - md) < 5 * math.sqrt(md * (1 - md) / trials) + 1e-4


def test_threshold_uplink_case_split_and_zero(losses, ratios, noise):
    n, hrw = 32, 0.7
    x0 = _x0_ul(P_R, P_B, n, ratios)
    lr = math.log((P_R * ratios.phi2 + P_B) / (P_R * ratios.phi2))
    at = optimal_threshold_uplink(P_R, P_B, hrw, x0, n, losses, noise)
    below = optimal_threshold_uplink(P_R, P_B, hrw, x0 * (1 - 1e-10), n, losses, noise)
    assert at == pytest.approx(below, rel=1e-8)
    zero = optimal_threshold_uplink(P_R, P_B, hrw, 0.0, n, losses, noise)
    ref = (P_R * hrw / losses.rw + noise
           + P_R * (P_R * ratios.phi2 + P_B) * n / (P_B * losses.r * losses.w) * lr)
    assert zero == pytest.approx(ref, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(dbm, dbm, gain, gain, ns)
def test_threshold_uplink_grid_optimal(pr_dbm, pb_dbm, hrw, hbw, n):
    from irs_covert.channel import LinkLosses, NOISE_POWER_W
    losses = LinkLosses.from_geometry()
    p_r, p_b = dbm_to_watt(pr_dbm), dbm_to_watt(pb_dbm)
    tau = optimal_threshold_uplink(p_r, p_b, hrw, hbw, n, losses, NOISE_POWER_W)
    fa, md, _ = dep_uplink_components(tau, p_r, p_b, hrw, hbw, n, losses, NOISE_POWER_W)
    grid = np.linspace(NOISE_POWER_W, 10 * tau, 10_000)
    gfa, gmd, _ = dep_uplink_components(grid, p_r, p_b, hrw, hbw, n, losses, NOISE_POWER_W)
    assert fa + md <= np.min(gfa + gmd) + 1e-12


def test_min_dep_uplink_zero_and_boundary(ratios):
    q = P_R * ratios.phi2
    ref = 1 - (P_B / q) * ((q + P_B) / q) ** (-(q + P_B) / P_B)
    assert float(min_dep_uplink(P_R, P_B, 0.0, 32, ratios)) == pytest.approx(ref, rel=1e-12)
    x0 = _x0_ul(P_R, P_B, 32, ratios)
    v = min_dep_uplink(P_R, P_B, np.array([x0 * (1 - 1e-12), x0]), 32, ratios)
    assert np.ptp(v) < 1e-10


# ----------------------------------------------------------------------------
# covertness inversion
# ----------------------------------------------------------------------------

def test_invert_covertness_frozen(ratios):
    pa = dbm_to_watt(25.0)
    cap = invert_covertness(0.3, "downlink", 32, ratios, p_a_max=pa)
    assert cap == pytest.approx(CAP_DL_25DBM, rel=1e-9)
    assert abs(float(avg_min_dep_downlink(pa - cap, cap, 32, ratios)) - 0.7) <= 1e-8
    cap = invert_covertness(0.3, "uplink", 32, ratios, p_r_max=0.1, cap=0.1)
    assert abs(float(avg_min_dep_uplink(0.1, cap, 32, ratios)) - 0.7) <= 1e-8


def test_invert_covertness_infeasible_and_vacuous(ratios):
    # the average DEP tends to 1 as P_b -> 0+, so a zero return needs the DEP to
    # stay below 1 - eps down to the bisection floor
    assert largest_feasible(lambda x: 0.5, 0.7, 1.0) == 0.0
    tiny = invert_covertness(1e-6, "uplink", 1, ratios, p_r_max=1e-9, cap=1.0)
    assert 0.0 < tiny < 1e-19
    pa = dbm_to_watt(0.0)
    # downlink: P_r = P_a^max - P_b -> 0 drives the DEP to 0, so the bound only
    # approaches the cap
    assert invert_covertness(1 - 1e-12, "downlink", 32, ratios, p_a_max=pa) > 0.99 * pa
    assert invert_covertness(1 - 1e-12, "uplink", 32, ratios, p_r_max=1.0, cap=0.5) == 0.5


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
def test_invert_covertness_domain(ratios, eps):
    with pytest.raises(ValueError):
        invert_covertness(eps, "downlink", 32, ratios, p_a_max=1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 40.0), ns)
def test_invert_covertness_is_largest_feasible(eps, pa_dbm, n):
    from irs_covert.channel import LinkLosses
    ratios = PathLossRatios.from_losses(LinkLosses.from_geometry())
    pa = dbm_to_watt(pa_dbm)
    cap = invert_covertness(eps, "downlink", n, ratios, p_a_max=pa)
    if 0.0 < cap < pa * (1 - 1e-9):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert float(avg_min_dep_downlink(pa - cap, cap, n, ratios)) >= 1 - eps
            above = cap * (1 + 1e-8)
            assert float(avg_min_dep_downlink(pa - above, above, n, ratios)) < 1 - eps + 1e-9
