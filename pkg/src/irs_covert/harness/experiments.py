"""Parameter sweeps: closed-form and Monte-Carlo detection curves, covert-rate campaigns.

Figure presets use the printed figure numbering (fig2 ... fig10).  Values the
text does not state (sweep ranges, power cases, constraint variants, trial
counts for the optimisation campaigns) are chosen here and listed in each
preset's description.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..channel import LinkLosses, dbm_to_watt, sample_realization
from ..detection import PathLossRatios, avg_min_dep_downlink, avg_min_dep_uplink
from ..optimizer import OptimizerConfig, run_scheme
from ..power import ConstraintSet, DownlinkBudget, UplinkBudget
from .config import ExperimentConfig, build_config
from .radiometer import Z95, empirical_min_dep

REALIZATION_STREAM = 31
COLUMNS = ("scheme", "scenario", "swept_param", "value", "covert_rate", "avg_min_dep",
           "iterations", "feasible", "trials", "ci_low", "ci_high")


def _losses(cfg: ExperimentConfig) -> LinkLosses:
    return LinkLosses.from_geometry(cfg.geometry(), cfg.path_loss())


def _scenario_label(cfg: ExperimentConfig) -> str:
    return f"{cfg.scenario}/{cfg.label}" if cfg.label else cfg.scenario


def _avg_min_dep(direction, p_r, p_b, n, ratios) -> float:
    f = avg_min_dep_downlink if direction == "downlink" else avg_min_dep_uplink
    return float(f(p_r, p_b, n, ratios))


def _row(cfg, value, scheme, **kw) -> dict:
    row = dict.fromkeys(COLUMNS, math.nan)
    row.update(scheme=scheme, scenario=_scenario_label(cfg), swept_param=cfg.sweep, value=value)
    row.update(kw)
    return row


# ----------------------------------------------------------------------------
# detection sweeps
# ----------------------------------------------------------------------------

def _detection_rows(cfg: ExperimentConfig, value) -> list[dict]:
    c = cfg.with_value(cfg.sweep, value)
    losses = _losses(c)
    ratios = PathLossRatios.from_losses(losses)
    p_r, p_b = dbm_to_watt(c.p_r_dbm), dbm_to_watt(c.p_b_dbm)
    noise = dbm_to_watt(c.noise_dbm)
    rows = [_row(cfg, value, "analytic", avg_min_dep=_avg_min_dep(c.scenario, p_r, p_b, c.n, ratios),
                 iterations=0, feasible=1.0, trials=0)]
    if c.mc:
        est = empirical_min_dep(c.scenario, p_r, p_b, c.n, c.trials, c.seed, c.cascade,
                                losses=losses, noise=noise)
        rows.append(_row(cfg, value, "monte-carlo", avg_min_dep=est.mean, iterations=0,
                         feasible=1.0, trials=est.trials, ci_low=est.ci_low, ci_high=est.ci_high))
    return rows


# ----------------------------------------------------------------------------
# covert-rate campaigns
# ----------------------------------------------------------------------------

def _budget(c: ExperimentConfig):
    if c.scenario == "downlink":
        return DownlinkBudget(dbm_to_watt(c.p_a_max_dbm))
    return UplinkBudget(dbm_to_watt(c.p_r_max_dbm), dbm_to_watt(c.p_b_max_dbm))


def _scheme_list(cfg: ExperimentConfig):
    out = []
    for s in cfg.schemes:
        if s == "fixed-power":
            out.extend(("fixed-power", a) for a in cfg.alpha1)
        else:
            out.append((s, None))
    return out


def _rate_trial(args):
    """All schemes on one channel realisation; returns [(label, rate, feasible, iters, dep)]."""
    c, trial = args
    losses = _losses(c)
    ratios = PathLossRatios.from_losses(losses)
    real = sample_realization(c.geometry(), c.n, c.seed, c.path_loss(),
                              stream=(REALIZATION_STREAM, trial))
    budget = _budget(c)
    cons = ConstraintSet(c.epsilon, c.r_min)
    opt = OptimizerConfig(rho=c.rho, max_iter=c.max_iter, q=c.q, seed=c.seed, stream=(trial,),
                          noise=dbm_to_watt(c.noise_dbm))
    out = []
    for scheme, alpha in _scheme_list(c):
        res = run_scheme(scheme, real, budget, cons, opt, alpha1=alpha if alpha else 0.2)
        dep = (_avg_min_dep(c.scenario, res.power.p_r, res.power.p_b, c.n, ratios)
               if res.feasible else math.nan)
        out.append((res.scheme, res.covert_rate, float(res.feasible), res.iterations, dep))
    return out


def _rate_rows(cfg: ExperimentConfig, value, results) -> list[dict]:
    rows = []
    for j, (label, *_rest) in enumerate(results[0]):
        rates = np.array([r[j][1] for r in results])
        feas = np.array([r[j][2] for r in results])
        iters = np.array([r[j][3] for r in results], dtype=float)
        deps = np.array([r[j][4] for r in results])
        t = rates.size
        mean = float(rates.mean())
        half = Z95 * float(rates.std(ddof=1)) / math.sqrt(t) if t > 1 else math.nan
        dep = float(np.mean(deps[np.isfinite(deps)])) if np.any(np.isfinite(deps)) else math.nan
        rows.append(_row(cfg, value, label, covert_rate=mean, avg_min_dep=dep,
                         iterations=float(iters.mean()), feasible=float(feas.mean()), trials=t,
                         ci_low=mean - half, ci_high=mean + half))
    return rows


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """One row per (scheme, grid point); deterministic for a given config and seed."""
    rows = []
    if cfg.kind == "detection":
        for v in cfg.grid:
            rows.extend(_detection_rows(cfg, v))
        return rows
    tasks = [(cfg.with_value(cfg.sweep, v), t) for v in cfg.grid for t in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_rate_trial, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        results = [_rate_trial(t) for t in tasks]
    for i, v in enumerate(cfg.grid):
        rows.extend(_rate_rows(cfg, v, results[i * cfg.trials:(i + 1) * cfg.trials]))
    return rows


# ----------------------------------------------------------------------------
# figure presets
# ----------------------------------------------------------------------------

_P_SWEEP = tuple(float(x) for x in range(0, 65, 5))
_N_SWEEP = (8.0, 16.0, 32.0, 48.0, 64.0, 96.0, 128.0)
# Case-3 has the Case-2 total power (30 dBm + 0 dBm) with P_b = 10 dBm
_CASE3_PR = float(10.0 * np.log10(1000.0 + 1.0 - 10.0))
_DEP_CASES = (("case-1", 20.0, 0.0), ("case-2", 30.0, 0.0), ("case-3", _CASE3_PR, 10.0))
_RATE_TRIALS = 100
_RATE_TRIALS_N = 20


def _dep_power(scenario):
    return [dict(kind="detection", scenario=scenario, sweep="p_r_dbm", grid=_P_SWEEP,
                 p_b_dbm=10.0, n=32, label="vs-p_r"),
            dict(kind="detection", scenario=scenario, sweep="p_b_dbm", grid=_P_SWEEP,
                 p_r_dbm=30.0, n=32, label="vs-p_b")]


def _dep_n(scenario):
    return [dict(kind="detection", scenario=scenario, sweep="n", grid=_N_SWEEP,
                 p_r_dbm=pr, p_b_dbm=pb, label=lab) for lab, pr, pb in _DEP_CASES]


PRESETS = {
    "fig2": ("downlink min. average DEP vs P_r (P_b = 10 dBm) and vs P_b (P_r = 30 dBm), N = 32",
             _dep_power("downlink")),
    "fig3": ("downlink min. average DEP vs N; Case-1 (20, 0) dBm, Case-2 (30, 0) dBm, "
             "Case-3 same total as Case-2 with P_b = 10 dBm", _dep_n("downlink")),
    "fig4": ("downlink covert rate vs P_a^max, N = 32; (eps, R_min) in {(0.3, 1), (0.1, 1), (0.3, 2)}; "
             f"{_RATE_TRIALS} channel draws per point",
             [dict(kind="rate", scenario="downlink", sweep="p_a_max_dbm",
                   grid=tuple(float(x) for x in range(10, 45, 5)), n=32, epsilon=e, r_min=r,
                   trials=_RATE_TRIALS, label=f"eps{e:g}-rmin{r:g}")
              for e, r in ((0.3, 1.0), (0.1, 1.0), (0.3, 2.0))]),
    "fig5": (f"downlink covert rate vs N, P_a^max = 25 dBm; {_RATE_TRIALS_N} channel draws per point",
             [dict(kind="rate", scenario="downlink", sweep="n", grid=(8.0, 16.0, 32.0, 64.0, 96.0, 128.0),
                   p_a_max_dbm=25.0, trials=_RATE_TRIALS_N, label="pa25")]),
    "fig6": ("uplink min. average DEP vs P_r (P_b = 10 dBm) and vs P_b (P_r = 30 dBm), N = 32",
             _dep_power("uplink")),
    "fig7": ("uplink min. average DEP vs N; same three power cases as fig3", _dep_n("uplink")),
    "fig8": ("uplink covert rate vs P0^max = P_r^max = P_b^max, N = 32, eps = 0.3, R_min in {1, 2}; "
             f"{_RATE_TRIALS} channel draws per point",
             [dict(kind="rate", scenario="uplink", sweep="p0_max_dbm",
                   grid=tuple(float(x) for x in range(0, 45, 5)), n=32, epsilon=0.3, r_min=r,
                   trials=_RATE_TRIALS, label=f"rmin{r:g}") for r in (1.0, 2.0)]),
    "fig9": (f"uplink covert rate vs N, P_r^max = P_b^max = 20 dBm; {_RATE_TRIALS_N} channel draws per point",
             [dict(kind="rate", scenario="uplink", sweep="n", grid=(8.0, 16.0, 32.0, 64.0, 96.0, 120.0),
                   p_r_max_dbm=20.0, p_b_max_dbm=20.0, trials=_RATE_TRIALS_N, label="p20")]),
    "fig10": ("uplink covert rate vs individual budgets, N = 32: (a) P_b^max = -10 dBm, P_r^max swept "
              "(plateau); (b) P_r^max = 20 dBm, P_b^max swept",
              [dict(kind="rate", scenario="uplink", sweep="p_r_max_dbm",
                    grid=tuple(float(x) for x in range(10, 55, 5)), p_b_max_dbm=-10.0, n=32,
                    trials=_RATE_TRIALS, label="a-fixed-p_b"),
               dict(kind="rate", scenario="uplink", sweep="p_b_max_dbm",
                    grid=tuple(float(x) for x in range(-20, 35, 5)), p_r_max_dbm=20.0, n=32,
                    trials=_RATE_TRIALS, label="b-fixed-p_r")]),
}

ALIASES = {
    "dl-dep-power": "fig2", "dl-dep-n": "fig3", "dl-rate-power": "fig4", "dl-rate-n": "fig5",
    "ul-dep-power": "fig6", "ul-dep-n": "fig7", "ul-rate-power": "fig8", "ul-rate-n": "fig9",
    "ul-rate-budgets": "fig10", "ul-plateau": "fig10",
}


def resolve_figure(figure_id: str) -> str:
    key = ALIASES.get(figure_id, figure_id)
    if key not in PRESETS:
        known = sorted(PRESETS) + sorted(ALIASES)
        raise KeyError(f"unknown figure id {figure_id!r}; known: {', '.join(known)}")
    return key


def preset_configs(figure_id: str, **overrides) -> list[ExperimentConfig]:
    """Validated configs for a figure preset; overrides (seed, trials, ...) apply to each."""
    _, parts = PRESETS[resolve_figure(figure_id)]
    return [build_config(p, **overrides) for p in parts]


def reproduce(figure_id: str, jobs: int = 1, **overrides) -> list[dict]:
    rows = []
    for cfg in preset_configs(figure_id, **overrides):
        rows.extend(run_experiment(cfg, jobs=jobs))
    return rows
