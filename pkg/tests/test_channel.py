import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irs_covert.channel import (NOISE_POWER_W, ChannelRealization, LinkLosses, PathLossModel,
                                PhaseShiftVector, SystemGeometry, cascade_scalar,
                                coherent_for_bob, complex_normal, composite_downlink,
                                composite_uplink, dbm_to_watt, make_rng, path_loss_linear,
                                sample_realization, watt_to_dbm)

finite = st.floats(-10.0, 10.0, allow_nan=False)


def test_path_loss_examples():
    assert path_loss_linear(1.0) == pytest.approx(10 ** 1.51, rel=1e-12)
    assert path_loss_linear(1.0) == pytest.approx(32.359, abs=1e-3)
    assert path_loss_linear(10.0) == pytest.approx(10 ** 5.18, rel=1e-12)
    d = math.sqrt(90.0 ** 2 + 5.0 ** 2)
    assert d == pytest.approx(90.139, abs=1e-3)
    ref = 10 ** ((35.1 + 36.7 * math.log10(d) - 20.0) / 10.0)
    assert path_loss_linear(d) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_domain(d):
    with pytest.raises(ValueError):
        path_loss_linear(d)


def test_path_loss_monotone_log_grid():
    grid = np.logspace(-2, 4, 500)
    vals = path_loss_linear(grid)
    assert np.all(np.diff(vals) > 0.0)


def test_path_loss_custom_model():
    m = PathLossModel(30.0, 20.0, 0.0, 0.0)
    assert path_loss_linear(100.0, m) == pytest.approx(10 ** 7.0, rel=1e-12)


def test_geometry_distances_euclidean():
    g = SystemGeometry()
    d = g.distances()
    assert d["d_a"] == pytest.approx(math.hypot(90, 5))
    assert d["d_b"] == pytest.approx(math.hypot(10, 5))
    assert d["d_r"] == pytest.approx(10.0)
    assert d["d_w"] == pytest.approx(10.0)
    assert d["d_ab"] == pytest.approx(100.0)
    assert d["d_ar"] == pytest.approx(math.hypot(100, 5))
    assert d["d_aw"] == pytest.approx(math.hypot(90, 5))
    assert d["d_bw"] == pytest.approx(math.hypot(10, 5))
    assert d["d_rw"] == pytest.approx(math.hypot(10, 10))
    assert all(v > 0 for v in d.values())


def test_geometry_rejects_coincident_nodes():
    with pytest.raises(ValueError):
        SystemGeometry(irs=(0.0, 0.0))


def test_losses_from_geometry():
    L = LinkLosses.from_geometry()
    assert L.ab == pytest.approx(path_loss_linear(100.0))
    assert L.w == pytest.approx(path_loss_linear(10.0))


def test_dbm_conversion():
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert NOISE_POWER_W == pytest.approx(1e-11)
    assert watt_to_dbm(dbm_to_watt(17.3)) == pytest.approx(17.3)


def test_realization_deterministic():
    a = sample_realization(None, 32, 7)
    b = sample_realization(None, 32, 7)
    for k in ("h_a", "h_b", "h_r", "h_w"):
        assert np.array_equal(getattr(a, k), getattr(b, k))
    for k in ("h_ab", "h_ar", "h_aw", "h_bw", "h_rw"):
        assert getattr(a, k) == getattr(b, k)
    c = sample_realization(None, 32, 8)
    assert not np.array_equal(a.h_a, c.h_a)


def test_realization_immutable():
    r = sample_realization(None, 4, 0)
    with pytest.raises(ValueError):
        r.h_a[0] = 0.0


def test_realization_rejects_zero_n():
    with pytest.raises(ValueError):
        sample_realization(None, 0, 0)


def test_realization_length_mismatch():
    z = np.zeros(3)
    with pytest.raises(ValueError):
        ChannelRealization(z, z, z, np.zeros(2), 0, 0, 0, 0, 0)


def test_fading_moments():
    # 1e5 entries from 1000 independent realizations (same sampler as every link)
    reals = [sample_realization(None, 100, 5, stream=(k,)) for k in range(1000)]
    h = np.concatenate([r.h_a for r in reals])
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.01)
    assert np.var(h.real) == pytest.approx(0.5, rel=0.02)
    direct = np.array([[r.h_ab, r.h_ar, r.h_aw, r.h_bw, r.h_rw] for r in reals]).ravel()
    assert np.mean(np.abs(direct) ** 2) == pytest.approx(1.0, rel=0.05)


def test_complex_normal_moments():
    z = complex_normal(make_rng(3), 200_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.01)
    assert abs(np.mean(z)) < 0.01
    assert abs(np.mean(z * z)) < 0.01      # circular symmetry


def test_make_rng_rejects_negative():
    with pytest.raises(ValueError):
        make_rng(-1)


def test_phase_vector_range():
    p = PhaseShiftVector(np.array([-1e-18, -np.pi, 7.0, 2 * np.pi]))
    assert np.all((p.angles >= 0.0) & (p.angles < 2 * np.pi))
    assert np.allclose(np.abs(p.coefficients), 1.0)


def test_composite_direct_only():
    r = sample_realization(None, 8, 1).without_irs()
    L = r.losses
    g = composite_downlink(r, PhaseShiftVector.random(8, make_rng(2)))
    assert g.bob == pytest.approx(r.h_ab / math.sqrt(L.ab))
    assert g.roy == pytest.approx(r.h_ar / math.sqrt(L.ar))


def test_composite_coherent_single_element():
    r = sample_realization(None, 1, 11)
    L = r.losses
    theta = np.angle(r.h_ab) - np.angle(np.conj(r.h_a[0]) * r.h_b[0])
    g = composite_downlink(r, PhaseShiftVector([theta]))
    ref = abs(r.h_ab) / math.sqrt(L.ab) + abs(r.h_a[0]) * abs(r.h_b[0]) / math.sqrt(L.a * L.b)
    assert abs(g.bob) == pytest.approx(ref, rel=1e-12)
    assert np.allclose(coherent_for_bob(r).angles, PhaseShiftVector([theta]).angles)


def test_composite_summation_oracle():
    r = sample_realization(None, 4, 12)
    L = r.losses
    th = make_rng(13).uniform(0, 2 * np.pi, 4)
    casc_b = sum(np.conj(r.h_a[n]) * np.exp(1j * th[n]) * r.h_b[n] for n in range(4))
    casc_r = sum(np.conj(r.h_a[n]) * np.exp(1j * th[n]) * r.h_r[n] for n in range(4))
    g = composite_downlink(r, th)
    assert g.bob == pytest.approx(r.h_ab / math.sqrt(L.ab) + casc_b / math.sqrt(L.a * L.b), rel=1e-13)
    assert g.roy == pytest.approx(r.h_ar / math.sqrt(L.ar) + casc_r / math.sqrt(L.a * L.r), rel=1e-13)
    u = composite_uplink(r, th)
    casc = sum(np.conj(r.h_b[n]) * np.exp(1j * th[n]) * r.h_a[n] for n in range(4))
    assert u.bob == pytest.approx(r.h_ab / math.sqrt(L.ab) + casc / math.sqrt(L.a * L.b), rel=1e-13)


def test_composite_length_mismatch():
    r = sample_realization(None, 4, 0)
    with pytest.raises(ValueError):
        composite_downlink(r, np.zeros(3))


def test_cascade_scalar_examples():
    a, b = np.exp(1j * 0.3), np.exp(-1j * 1.1)
    assert cascade_scalar([a], [b], [0.0]) == pytest.approx(np.conj(a) * b)
    v = cascade_scalar(np.array([1.0, 2.0]), np.array([0.5, 3.0]), np.zeros(2))
    assert v.imag == 0.0 and v.real == pytest.approx(6.5)
    with pytest.raises(ValueError):
        cascade_scalar(np.ones(2), np.ones(3), np.zeros(2))


def test_cascade_power_matches_n():
    rng = make_rng(21)
    n, trials = 32, 100_000
    theta = PhaseShiftVector.random(n, rng)
    a = complex_normal(rng, (trials, n))
    w = complex_normal(rng, (trials, n))
    delta = np.array([cascade_scalar(a[k], w[k], theta) for k in range(trials)])
    assert np.mean(np.abs(delta) ** 2) == pytest.approx(n, rel=0.03)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32), finite, finite)
def test_cascade_linearity(seed, re, im):
    rng = make_rng(seed)
    n = 5
    x, y, z, t = complex_normal(rng, (4, n))
    th = rng.uniform(0, 2 * np.pi, n)
    c = complex(re, im)
    lhs = cascade_scalar(x, c * y + z, th)
    assert lhs == pytest.approx(c * cascade_scalar(x, y, th) + cascade_scalar(x, z, th), abs=1e-9)
    lhs = cascade_scalar(c * x + t, y, th)
    assert lhs == pytest.approx(np.conj(c) * cascade_scalar(x, y, th) + cascade_scalar(t, y, th),
                                abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 64))
def test_composite_triangle_bound(seed, n):
    r = sample_realization(None, n, seed)
    L = r.losses
    bound = abs(r.h_ab) / math.sqrt(L.ab) + np.sum(np.abs(r.h_a) * np.abs(r.h_b)) / math.sqrt(L.a * L.b)
    th = PhaseShiftVector.random(n, make_rng(seed, 1))
    assert abs(composite_downlink(r, th).bob) <= bound * (1 + 1e-12)
    assert abs(composite_downlink(r, coherent_for_bob(r)).bob) == pytest.approx(bound, rel=1e-10)
    assert abs(composite_uplink(r, coherent_for_bob(r, "uplink")).bob) == pytest.approx(bound, rel=1e-10)
