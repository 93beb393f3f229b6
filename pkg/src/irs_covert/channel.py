"""Geometry, path loss and Rayleigh fading for the IRS-assisted NOMA links.

Conventions
-----------
All channel coefficients are CN(0, 1).  Path losses are linear attenuation
factors (>= 1 for the default model) and channels are divided by sqrt(L) at
the point of use.  Phase vectors hold angles in [0, 2*pi); the reflection
matrix is diag(exp(1j * theta)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

Point = tuple[float, float]

TWO_PI = 2.0 * np.pi


def dbm_to_watt(p_dbm):
    """P_watt = 10^((P_dBm - 30)/10). Works on scalars and arrays."""
    out = 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)
    return float(out) if out.ndim == 0 else out


def watt_to_dbm(p_watt):
    return 10.0 * np.log10(p_watt) + 30.0


NOISE_POWER_W = dbm_to_watt(-80.0)


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, *keys).

    Distinct key tuples give statistically independent streams, so trials
    can be evaluated in any order (or in parallel) with identical results.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError("seed and stream keys must be non-negative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """CN(0, 1) samples: independent real/imag parts of variance 1/2."""
    z = rng.standard_normal(size=(2,) + tuple(np.atleast_1d(size)))
    return (z[0] + 1j * z[1]) / math.sqrt(2.0)


# ----------------------------------------------------------------------------
# geometry and path loss
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemGeometry:
    """Node coordinates in meters; defaults are the evaluation layout."""
    alice: Point = (0.0, 0.0)
    bob: Point = (100.0, 0.0)
    roy: Point = (100.0, 5.0)
    willie: Point = (90.0, -5.0)
    irs: Point = (90.0, 5.0)

    def __post_init__(self):
        for name, d in self.distances().items():
            if not d > 0.0:
                raise ValueError(f"distance {name} must be strictly positive (got {d})")

    @staticmethod
    def _dist(p: Point, q: Point) -> float:
        return math.hypot(p[0] - q[0], p[1] - q[1])

    def distances(self) -> dict[str, float]:
        a, b, r, w, s = self.alice, self.bob, self.roy, self.willie, self.irs
        return {
            "d_a": self._dist(a, s), "d_b": self._dist(b, s),
            "d_r": self._dist(r, s), "d_w": self._dist(w, s),
            "d_ab": self._dist(a, b), "d_ar": self._dist(a, r),
            "d_aw": self._dist(a, w), "d_bw": self._dist(b, w),
            "d_rw": self._dist(r, w),
        }


@dataclass(frozen=True)
class PathLossModel:
    """L(d) [dB] = intercept + slope * log10(d) - G_t - G_r."""
    intercept_db: float = 35.1
    slope_db_per_decade: float = 36.7
    tx_gain_dbi: float = 10.0
    rx_gain_dbi: float = 10.0

    def db(self, d):
        d = np.asarray(d, dtype=float)
        if np.any(~(d > 0.0)):
            raise ValueError("path loss needs d > 0")
        return (self.intercept_db + self.slope_db_per_decade * np.log10(d)
                - self.tx_gain_dbi - self.rx_gain_dbi)


def path_loss_linear(d, model: PathLossModel | None = None):
    """Linear attenuation factor 10^(L_dB(d)/10); scalar in, float out."""
    model = PathLossModel() if model is None else model
    val = 10.0 ** (model.db(d) / 10.0)
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class LinkLosses:
    """Linear path losses for every link, converted once from dB."""
    a: float
    b: float
    r: float
    w: float
    ab: float
    ar: float
    aw: float
    bw: float
    rw: float

    @classmethod
    def from_geometry(cls, geometry: SystemGeometry | None = None,
                      model: PathLossModel | None = None) -> "LinkLosses":
        geometry = SystemGeometry() if geometry is None else geometry
        model = PathLossModel() if model is None else model
        d = geometry.distances()
        return cls(**{k[2:]: path_loss_linear(v, model) for k, v in d.items()})


# ----------------------------------------------------------------------------
# fading and phases
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseShiftVector:
    """Reflection angles theta_n in [0, 2*pi)."""
    angles: np.ndarray

    def __post_init__(self):
        ang = np.mod(np.asarray(self.angles, dtype=float).ravel(), TWO_PI)
        # mod can return exactly 2*pi for tiny negative inputs
        ang[ang >= TWO_PI] = 0.0
        ang.setflags(write=False)
        object.__setattr__(self, "angles", ang)

    @property
    def n(self) -> int:
        return self.angles.size

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "PhaseShiftVector":
        return cls(rng.uniform(0.0, TWO_PI, size=n))

    @classmethod
    def zeros(cls, n: int) -> "PhaseShiftVector":
        return cls(np.zeros(n))


def _frozen(x):
    x = np.array(x, dtype=complex)
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of every small-scale fading coefficient plus the link losses."""
    h_a: np.ndarray
    h_b: np.ndarray
    h_r: np.ndarray
    h_w: np.ndarray
    h_ab: complex
    h_ar: complex
    h_aw: complex
    h_bw: complex
    h_rw: complex
    losses: LinkLosses = field(default_factory=LinkLosses.from_geometry)

    def __post_init__(self):
        vecs = [_frozen(getattr(self, k)).ravel() for k in ("h_a", "h_b", "h_r", "h_w")]
        n = vecs[0].size
        if n < 1 or any(v.size != n for v in vecs):
            raise ValueError("IRS channel vectors must share a common length N >= 1")
        for k, v in zip(("h_a", "h_b", "h_r", "h_w"), vecs):
            object.__setattr__(self, k, v)
        for k in ("h_ab", "h_ar", "h_aw", "h_bw", "h_rw"):
            object.__setattr__(self, k, complex(getattr(self, k)))

    @property
    def n(self) -> int:
        return self.h_a.size

    def without_irs(self) -> "ChannelRealization":
        """Same direct links with every IRS path zeroed."""
        z = np.zeros(self.n, dtype=complex)
        return ChannelRealization(z, z, z, z, self.h_ab, self.h_ar, self.h_aw,
                                  self.h_bw, self.h_rw, self.losses)


def sample_realization(geometry: SystemGeometry | None, n: int, seed: int,
                       model: PathLossModel | None = None,
                       stream: tuple[int, ...] = ()) -> ChannelRealization:
    """Draw all fading coefficients i.i.d. CN(0,1) from the stream (seed, *stream)."""
    if int(n) < 1:
        raise ValueError("N must be >= 1")
    n = int(n)
    rng = make_rng(seed, *stream)
    z = complex_normal(rng, 4 * n + 5)
    losses = LinkLosses.from_geometry(geometry, model)
    return ChannelRealization(z[:n], z[n:2 * n], z[2 * n:3 * n], z[3 * n:4 * n],
                              *z[4 * n:], losses=losses)


# ----------------------------------------------------------------------------
# composite channels
# ----------------------------------------------------------------------------

def _angles(phases) -> np.ndarray:
    if isinstance(phases, PhaseShiftVector):
        return phases.angles
    return np.asarray(phases, dtype=float)


def cascade_scalar(h_left, h_right, phases) -> complex:
    """h_left^H diag(exp(j*theta)) h_right."""
    h_left = np.asarray(h_left)
    h_right = np.asarray(h_right)
    theta = _angles(phases)
    if not (h_left.shape == h_right.shape == theta.shape):
        raise ValueError(f"length mismatch: {h_left.shape}, {h_right.shape}, {theta.shape}")
    return complex(np.sum(np.conj(h_left) * np.exp(1j * theta) * h_right))


@dataclass(frozen=True)
class CompositeChannels:
    """Composite (direct + reflected) channels of Bob and Roy.

    Downlink: bob = g_ab, roy = g_ar.  Uplink: bob = g_ba, roy = g_ra.
    """
    bob: complex
    roy: complex
    direction: str

    @property
    def bob_sq(self) -> float:
        return abs(self.bob) ** 2

    @property
    def roy_sq(self) -> float:
        return abs(self.roy) ** 2


def _check_len(real: ChannelRealization, phases):
    if _angles(phases).size != real.n:
        raise ValueError(f"phase vector has length {_angles(phases).size}, expected N={real.n}")


def composite_downlink(real: ChannelRealization, phases) -> CompositeChannels:
    """g_ab = h_ab/sqrt(L_ab) + h_a^H Theta h_b / sqrt(L_a L_b); g_ar likewise."""
    _check_len(real, phases)
    L = real.losses
    g_ab = real.h_ab / math.sqrt(L.ab) + cascade_scalar(real.h_a, real.h_b, phases) / math.sqrt(L.a * L.b)
    g_ar = real.h_ar / math.sqrt(L.ar) + cascade_scalar(real.h_a, real.h_r, phases) / math.sqrt(L.a * L.r)
    return CompositeChannels(g_ab, g_ar, "downlink")


def composite_uplink(real: ChannelRealization, phases) -> CompositeChannels:
    """g_ra = h_ar/sqrt(L_ar) + h_r^H Phi h_a / sqrt(L_a L_r); g_ba likewise.

    Reciprocal links: the uplink direct coefficients reuse h_ar and h_ab.
    """
    _check_len(real, phases)
    L = real.losses
    g_ra = real.h_ar / math.sqrt(L.ar) + cascade_scalar(real.h_r, real.h_a, phases) / math.sqrt(L.a * L.r)
    g_ba = real.h_ab / math.sqrt(L.ab) + cascade_scalar(real.h_b, real.h_a, phases) / math.sqrt(L.a * L.b)
    return CompositeChannels(g_ba, g_ra, "uplink")


def composite(real: ChannelRealization, phases, direction: str) -> CompositeChannels:
    if direction == "downlink":
        return composite_downlink(real, phases)
    if direction == "uplink":
        return composite_uplink(real, phases)
    raise ValueError(f"unknown direction {direction!r}")


def coherent_phases(h_left, h_right, direct) -> PhaseShiftVector:
    """Angles that co-phase every term of h_left^H Theta h_right with `direct`.

    theta_n = arg(direct) - arg(conj(h_left_n) h_right_n).
    """
    prod = np.conj(np.asarray(h_left)) * np.asarray(h_right)
    return PhaseShiftVector(np.angle(direct) - np.angle(prod))


def coherent_for_bob(real: ChannelRealization, direction: str = "downlink") -> PhaseShiftVector:
    """Phases maximising Bob's composite gain (no other constraint)."""
    if direction == "downlink":
        return coherent_phases(real.h_a, real.h_b, real.h_ab)
    return coherent_phases(real.h_b, real.h_a, real.h_ab)
