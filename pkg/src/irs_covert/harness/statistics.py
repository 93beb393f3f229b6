"""Statistical checks of phase uniformity at Willie and of the CN(0, N) cascade model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..channel import TWO_PI, complex_normal, make_rng

PHASE_RULES = ("coherent", "uniform", "constant")
UNIFORMITY_STREAM = 21
CASCADE_STREAM = 22


@dataclass(frozen=True)
class UniformityReport:
    ks_statistic: float
    ks_pvalue: float
    corr_statistic: float        # largest |z| over the tested adjacent-element pairs
    corr_pvalue: float           # Bonferroni-adjusted
    samples: int
    alpha: float

    @property
    def passed(self) -> bool:
        return self.ks_pvalue >= self.alpha and self.corr_pvalue >= self.alpha


@dataclass(frozen=True)
class CascadeMomentReport:
    n: int
    trials: int
    mean: complex
    mean_bound: float            # 3 sigma bound on each component of the sample mean
    mean_abs_sq: float

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean.real) <= self.mean_bound and abs(self.mean.imag) <= self.mean_bound

    @property
    def power_ok(self) -> bool:
        return abs(self.mean_abs_sq - self.n) <= 0.03 * self.n

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.power_ok


def _irs_phases(rule, h_left, h_right, h_direct, rng):
    """IRS phase matrix (trials, N): co-phased for Bob, uniform, or all zero."""
    if rule == "coherent":
        return np.angle(h_direct)[:, None] - np.angle(np.conj(h_left) * h_right)
    if rule == "uniform":
        return rng.uniform(0.0, TWO_PI, size=h_left.shape)
    if rule == "constant":
        return np.zeros(h_left.shape)
    raise ValueError(f"phase rule must be one of {PHASE_RULES}")


def _effective_phases(h_tx, theta, h_w):
    """psi_n with conj(h_tx_n) e^{j theta_n} h_w_n = |h_tx_n||h_w_n| e^{-j psi_n}."""
    return np.mod(-np.angle(np.conj(h_tx) * np.exp(1j * theta) * h_w), TWO_PI)


def circular_correlation(a, b) -> tuple[float, float]:
    """Circular-circular correlation of two angle samples and its asymptotic z statistic."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sa = np.sin(a - stats.circmean(a))
    sb = np.sin(b - stats.circmean(b))
    den = math.sqrt(np.sum(sa * sa) * np.sum(sb * sb))
    if den <= 1e-12 * a.size:       # a degenerate (constant) sample
        return math.nan, math.inf
    r = float(np.sum(sa * sb) / den)
    l20, l02, l22 = np.mean(sa * sa), np.mean(sb * sb), np.mean(sa * sa * sb * sb)
    if l22 == 0.0:
        return r, math.inf
    return r, float(r * math.sqrt(a.size * l20 * l02 / l22))


def _sample_phases(n, trials, rule, seed, direction):
    """Phase families to test; "uniform" and "constant" are reference samples of psi itself."""
    rng = make_rng(seed, UNIFORMITY_STREAM)
    count = 1 if direction == "downlink" else 2
    if rule == "uniform":
        return [rng.uniform(0.0, TWO_PI, size=(trials, n)) for _ in range(count)]
    if rule == "constant":
        return [np.full((trials, n), 1.0) for _ in range(count)]
    if rule != "coherent":
        raise ValueError(f"phase rule must be one of {PHASE_RULES}")
    h_a = complex_normal(rng, (trials, n))
    h_b = complex_normal(rng, (trials, n))
    h_w = complex_normal(rng, (trials, n))
    h_ab = complex_normal(rng, trials)
    if direction == "downlink":
        theta = _irs_phases(rule, h_a, h_b, h_ab, rng)
        return [_effective_phases(h_a, theta, h_w)]
    h_r = complex_normal(rng, (trials, n))
    theta = _irs_phases(rule, h_b, h_a, h_ab, rng)
    return [_effective_phases(h_r, theta, h_w), _effective_phases(h_b, theta, h_w)]


def phase_uniformity_test(n, trials, phase_rule="coherent", seed=0, direction="downlink",
                          alpha=0.01, max_pairs=8) -> UniformityReport:
    """KS test of psi_n (downlink) or chi_n, chi_n' (uplink) against U[0, 2 pi).

    ``phase_rule``: "coherent" derives the phases from realisations with the
    IRS co-phased for Bob; "uniform" and "constant" feed directly drawn or
    degenerate phase samples (null and alternative references).  The pooled sample holds trials * N phases.  Independence across elements
    is checked with the circular correlation of adjacent elements over trials.
    In the uplink both phase families must pass; the report keeps the worse one.
    """
    if n < 2 or trials < 10:
        raise ValueError("need N >= 2 and at least 10 trials")
    families = _sample_phases(n, trials, phase_rule, seed, direction)
    ks_stat, ks_p, z_max, corr_p = 0.0, 1.0, 0.0, 1.0
    pairs = min(n - 1, max_pairs)
    for psi in families:
        res = stats.kstest(psi.ravel(), stats.uniform(loc=0.0, scale=TWO_PI).cdf)
        ks_stat = max(ks_stat, float(res.statistic))
        ks_p = min(ks_p, float(res.pvalue))
        for j in range(pairs):
            _, z = circular_correlation(psi[:, j], psi[:, j + 1])
            m = pairs * len(families)
            p = 0.0 if not math.isfinite(z) else min(1.0, m * 2.0 * float(stats.norm.sf(abs(z))))
            z_max = max(z_max, abs(z))
            corr_p = min(corr_p, p)
    return UniformityReport(ks_stat, ks_p, z_max, corr_p, families[0].size, alpha)


def gaussian_cascade_test(n, trials, seed=0, phase_rule="coherent", chunk=10000) -> CascadeMomentReport:
    """Sample mean of delta_N and of |delta_N|^2 under the downlink phase rule."""
    if n < 1 or trials < 2:
        raise ValueError("need N >= 1 and at least 2 trials")
    total, total_sq = 0.0 + 0.0j, 0.0
    for c, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        rng = make_rng(seed, CASCADE_STREAM, c)
        h_a = complex_normal(rng, (size, n))
        h_b = complex_normal(rng, (size, n))
        h_w = complex_normal(rng, (size, n))
        h_ab = complex_normal(rng, size)
        theta = _irs_phases(phase_rule, h_a, h_b, h_ab, rng)
        delta = np.sum(np.conj(h_a) * np.exp(1j * theta) * h_w, axis=1)
        total += complex(np.sum(delta))
        total_sq += float(np.sum(np.abs(delta) ** 2))
    bound = 3.0 * math.sqrt(n / 2.0 / trials)
    return CascadeMomentReport(n, trials, total / trials, bound, total_sq / trials)
