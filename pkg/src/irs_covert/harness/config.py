"""Flat key-value experiment configuration (YAML mapping, one level deep).

Powers are given in dBm and converted to watts once, by the consumers.
Unknown keys, wrong types and empty sweep grids are reported together in a
single ``ConfigError`` listing every offending key.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import yaml

from ..channel import PathLossModel, SystemGeometry

KINDS = ("detection", "rate")
SCENARIOS = ("downlink", "uplink")
SWEEPABLE = ("p_r_dbm", "p_b_dbm", "n", "p_a_max_dbm", "p0_max_dbm", "p_r_max_dbm",
             "p_b_max_dbm", "epsilon", "r_min")
ALL_SCHEMES = ("proposed", "random-phase", "fixed-power", "oma", "no-irs")


class ConfigError(ValueError):
    def __init__(self, message, keys):
        self.keys = sorted(set(keys))
        super().__init__(f"{message}: {', '.join(self.keys)}")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "detection"
    scenario: str = "downlink"
    sweep: str = "p_r_dbm"
    grid: tuple = (0.0, 10.0, 20.0, 30.0, 40.0)
    label: str = ""
    n: int = 32
    # detection operating point
    p_r_dbm: float = 30.0
    p_b_dbm: float = 10.0
    # budgets for the rate experiments
    p_a_max_dbm: float = 25.0
    p_r_max_dbm: float = 20.0
    p_b_max_dbm: float = 20.0
    epsilon: float = 0.3
    r_min: float = 1.0
    alpha1: tuple = (0.2, 0.4)
    schemes: tuple = ALL_SCHEMES
    q: int = 100
    rho: float = 1e-4
    max_iter: int = 50
    trials: int = 1000
    seed: int = 0
    mc: bool = True
    cascade: str = "gaussian"
    noise_dbm: float = -80.0
    # geometry (meters) and path-loss constants
    alice_x: float = 0.0
    alice_y: float = 0.0
    bob_x: float = 100.0
    bob_y: float = 0.0
    roy_x: float = 100.0
    roy_y: float = 5.0
    willie_x: float = 90.0
    willie_y: float = -5.0
    irs_x: float = 90.0
    irs_y: float = 5.0
    intercept_db: float = 35.1
    slope_db: float = 36.7
    tx_gain_dbi: float = 10.0
    rx_gain_dbi: float = 10.0
    out: str | None = None
    format: str = "csv"

    def geometry(self) -> SystemGeometry:
        return SystemGeometry((self.alice_x, self.alice_y), (self.bob_x, self.bob_y),
                              (self.roy_x, self.roy_y), (self.willie_x, self.willie_y),
                              (self.irs_x, self.irs_y))

    def path_loss(self) -> PathLossModel:
        return PathLossModel(self.intercept_db, self.slope_db, self.tx_gain_dbi, self.rx_gain_dbi)

    def with_value(self, key, value) -> "ExperimentConfig":
        """Copy with the swept parameter set; p0_max_dbm sets both uplink budgets."""
        if key == "p0_max_dbm":
            return dataclasses.replace(self, p_r_max_dbm=float(value), p_b_max_dbm=float(value))
        if key == "n":
            return dataclasses.replace(self, n=int(value))
        return dataclasses.replace(self, **{key: float(value)})


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT_KEYS = {"n", "q", "max_iter", "trials", "seed"}
_FLOAT_KEYS = {k for k, f in _FIELDS.items() if f.type == "float"}
_SEQ_KEYS = {"grid", "alpha1", "schemes"}


def _as_number(v, integer):
    if isinstance(v, bool):
        raise TypeError
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise TypeError
        return int(v)
    return float(v)


def build_config(mapping: dict | None = None, **overrides) -> ExperimentConfig:
    """Validate a flat mapping (plus keyword overrides) into an ExperimentConfig."""
    raw = dict(mapping or {})
    raw.update({k: v for k, v in overrides.items() if v is not None})
    unknown = [k for k in raw if k not in _FIELDS]
    if unknown:
        raise ConfigError("unknown configuration keys", unknown)
    bad = []
    clean = {}
    for k, v in raw.items():
        try:
            if k in _SEQ_KEYS:
                seq = v if isinstance(v, (list, tuple)) else [v]
                if k == "schemes":
                    clean[k] = tuple(str(s) for s in seq)
                elif k == "grid":
                    clean[k] = tuple(float(_as_number(x, False)) for x in seq)
                else:
                    clean[k] = tuple(_as_number(x, False) for x in seq)
            elif k in _INT_KEYS:
                clean[k] = _as_number(v, True)
            elif k in _FLOAT_KEYS:
                clean[k] = _as_number(v, False)
            elif k == "mc":
                if not isinstance(v, bool):
                    raise TypeError
                clean[k] = v
            else:
                clean[k] = None if v is None else str(v)
        except (TypeError, ValueError):
            bad.append(k)
    if bad:
        raise ConfigError("malformed values for keys", bad)
    cfg = ExperimentConfig(**clean)
    bad = _semantic_errors(cfg)
    if bad:
        raise ConfigError("invalid values for keys", bad)
    return cfg


def _semantic_errors(cfg: ExperimentConfig) -> list[str]:
    bad = []
    if cfg.kind not in KINDS:
        bad.append("kind")
    if cfg.scenario not in SCENARIOS:
        bad.append("scenario")
    if cfg.sweep not in SWEEPABLE:
        bad.append("sweep")
    if len(cfg.grid) == 0 or (cfg.sweep == "n" and any(g < 1 or g != int(g) for g in cfg.grid)):
        bad.append("grid")
    if cfg.n < 1:
        bad.append("n")
    if not 0.0 < cfg.epsilon < 1.0:
        bad.append("epsilon")
    if cfg.sweep == "epsilon" and any(not 0.0 < g < 1.0 for g in cfg.grid):
        bad.append("grid")
    if cfg.r_min < 0.0:
        bad.append("r_min")
    if any(not 0.0 < a < 1.0 for a in cfg.alpha1):
        bad.append("alpha1")
    if any(s not in ALL_SCHEMES for s in cfg.schemes):
        bad.append("schemes")
    if cfg.trials < 1:
        bad.append("trials")
    if cfg.q < 1:
        bad.append("q")
    if cfg.max_iter < 1:
        bad.append("max_iter")
    if not cfg.rho > 0.0:
        bad.append("rho")
    if cfg.seed < 0:
        bad.append("seed")
    if cfg.cascade not in ("gaussian", "physical"):
        bad.append("cascade")
    if cfg.format not in ("csv", "json"):
        bad.append("format")
    try:
        cfg.geometry()
    except ValueError:
        bad.append("geometry")
    return bad


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a flat YAML mapping from ``path`` and validate it."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a flat mapping", ["<root>"])
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError("nested values are not allowed", nested)
    return build_config(data, **overrides)
