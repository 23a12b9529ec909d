import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ive

from rwdre import ctime
from rwdre.ctime import SrwOracle
from rwdre.environment import ContinuousEnvSpec, RateField
from rwdre.errors import ResourceError


def hom(d, r, **kw):
    return RateField(ContinuousEnvSpec("homogeneous", d, r, r, **kw))


@pytest.mark.parametrize("x", [0.0, 1e-3, 0.7, 5.0, 40.0, 600.0])
def test_miller_recurrence_matches_scipy(x):
    got = ctime.bessel_ive_range(80, x)
    want = ive(np.arange(81), x)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-300)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 300.0))
def test_scaled_bessel_sums_to_one(x):
    tab = ctime.bessel_ive_range(int(x + 40 * math.sqrt(x) + 60), x)
    assert tab[0] + 2 * tab[1:].sum() == pytest.approx(1.0, abs=1e-13)


def test_srw_kernel_examples():
    o = SrwOracle(1)
    assert ctime.srw_kernel(o, 1.0, (0,)) == pytest.approx(math.exp(-1) * 1.2660658777520082, rel=1e-14)
    # d=2 factorises over axes with rate 1/2 each
    o2 = SrwOracle(2)
    assert ctime.srw_kernel(o2, 2.0, (1, -2)) == pytest.approx(ive(1, 1.0) * ive(2, 1.0), rel=1e-13)
    with pytest.raises(ValueError):
        ctime.srw_kernel(o, 0.0, (0,))


@pytest.mark.parametrize("d,r", [(1, 0.5), (1, 0.8), (2, 0.25)])
@pytest.mark.parametrize("t", [0.5, 3.0, 20.0])
def test_uniformization_matches_bessel(d, r, t):
    f = hom(d, r)
    slab = ctime.uniformize(f, t)
    ref = ctime.srw_kernel_slab(SrwOracle(d, 2 * d * r), t, slab.radius)
    assert np.abs(slab.values - ref).max() <= 1e-12
    assert slab.mass + slab.deficit == pytest.approx(1.0, abs=1e-13)


def test_uniformization_with_short_pieces_is_unchanged():
    a = ctime.uniformize(hom(1, 0.5), 6.0, radius=40)
    b = ctime.uniformize(hom(1, 0.5, delta=0.37), 6.0, radius=40)
    assert np.abs(a.values - b.values).max() <= 1e-13


@pytest.mark.parametrize("model", ["iid-time-space", "spin-flip"])
def test_semigroup_property(model):
    spec = ContinuousEnvSpec(model, 1, 0.25, 0.75, seed=3)
    f = RateField(spec)
    R = 60
    whole = ctime.uniformize(f, 5.0, radius=R)
    first = ctime.uniformize(f, 2.0, radius=R)
    # chain the second leg from each start point through the shifted field
    combo = np.zeros_like(whole.values)
    for z in range(-R, R + 1):
        w = first.value((z,))
        if w < 1e-300:
            continue
        leg = ctime.uniformize(f.shift(2, (z,)), 3.0, radius=R)
        lo, hi = max(-R, z - R), min(R, z + R)
        combo[lo + R:hi + R + 1] += w * leg.values[lo - z + R:hi - z + R + 1]
    assert np.abs(combo - whole.values).max() <= 1e-13


@pytest.mark.parametrize("model", ["iid-time-space", "spin-flip"])
def test_mass_conservation(model):
    f = RateField(ContinuousEnvSpec(model, 2, 0.1, 0.4, seed=1, delta=0.5))
    slab, mids = ctime.uniformize(f, 8.0, record=[1.0, 4.0])
    assert abs(slab.mass + slab.deficit - 1.0) <= 1e-12
    assert slab.deficit <= 1e-12
    assert set(mids) == {1.0, 4.0, 8.0} or set(mids) >= {1.0, 4.0}
    for s in mids.values():
        assert abs(s.mass + s.deficit - 1.0) <= 1e-12


def test_small_box_grows_or_raises():
    f = hom(1, 1.0)
    grown = ctime.uniformize(f, 10.0, radius=5)
    assert grown.radius > 5 and grown.boundary_deficit <= 1e-12
    with pytest.raises(ResourceError, match="radius"):
        ctime.uniformize(f, 10.0, radius=5, auto_grow=False)
    with pytest.raises(ValueError):
        ctime.uniformize(f, 0.0)


def test_long_piece_raises_resource_error():
    f = RateField(ContinuousEnvSpec("homogeneous", 1, 1.0, 1.0, delta=1000.0))
    with pytest.raises(ResourceError):
        ctime.uniformize(f, 800.0, radius=2000)


def test_fk_unit_rate_weights_are_one():
    f = hom(2, 0.25)  # total rate 1: the weights are identically 1
    est = ctime.fk_estimate(f, 3.0, [(0, 0), (1, 0)], samples=20000, seed=1)
    for e in est:
        p = e.mean
        # the estimator is then a plain frequency: sample variance p(1-p) n/(n-1)
        n = e.samples
        assert e.stderr == pytest.approx(math.sqrt(p * (1 - p) / (n - 1)), rel=1e-9)
        assert abs(p - ctime.srw_kernel(SrwOracle(2), 3.0, e.y)) <= 4 * e.stderr
    assert est[0].mean_jumps == pytest.approx(3.0, abs=0.05)


def test_fk_agrees_with_bessel_on_five_targets():
    f = hom(1, 0.4)
    t = 3.0
    est = ctime.fk_estimate(f, t, [[-2], [-1], [0], [1], [3]], samples=100000, seed=4)
    for e in est:
        exact = ctime.srw_kernel(SrwOracle(1, 0.8), t, e.y)
        assert abs(e.mean - exact) <= 4 * e.stderr


def test_fk_is_reproducible_and_chunk_independent():
    f = RateField(ContinuousEnvSpec("iid-time-space", 1, 0.25, 0.75, seed=2))
    a = ctime.fk_estimate(f, 2.0, [[0], [1]], samples=10000, seed=7)
    b = ctime.fk_estimate(f, 2.0, [[0], [1]], samples=10000, seed=7)
    assert a == b
    c = ctime.fk_estimate(f, 2.0, [[0], [1]], samples=10000, seed=8)
    assert a[0].mean != c[0].mean


def test_positivity_floor_is_below_the_kernel():
    for model in ("iid-time-space", "spin-flip"):
        f = RateField(ContinuousEnvSpec(model, 2, 0.2, 0.6, seed=5))
        slab = ctime.uniformize(f, 3.0)
        for y in [(0, 0), (1, 2), (-3, 0), (4, 4)]:
            floor = ctime.positivity_floor(f, 0.0, 3.0, (0, 0), y)
            assert 0 < floor <= slab.value(y)
    with pytest.raises(ValueError):
        ctime.positivity_floor(f, 1.0, 1.0, (0, 0), (0, 0))


def test_j_rate_properties():
    assert ctime.j_rate(0.0) == 0.0
    y = np.linspace(-5, 5, 101)
    j = ctime.j_rate(y)
    assert np.all(j >= 0) and np.allclose(j, j[::-1])
    assert np.all(np.diff(j, 2) > 0)
    # J at the origin is 0 and large-deviation scaling of the Bessel kernel recovers J
    o = SrwOracle(1)
    assert ctime.srw_rate_J(o, [0.0]) == 0.0
    t = 4000.0
    x = 0.6
    got = -math.log(ctime.srw_kernel(o, t, (int(x * t),))) / t
    assert got == pytest.approx(ctime.srw_rate_J(o, [x]), abs=2e-3)


def test_j_rate_in_two_dimensions_adds_over_axes():
    o = SrwOracle(2, 2.0)
    assert ctime.srw_rate_J(o, [0.3, -0.2]) == pytest.approx(ctime.j_rate(0.3) + ctime.j_rate(0.2))


def test_kernel_comparison_on_unit_walk_is_exact():
    f = hom(1, 0.5)
    rep = ctime.kernel_comparison_check(f, [16.0, 32.0], eps=0.25)
    assert max(rep.fitted) <= 1e-10
    assert rep.min_ratio == pytest.approx(1.0) and rep.max_ratio == pytest.approx(1.0)


def test_kernel_comparison_constant_stays_bounded():
    f = RateField(ContinuousEnvSpec("iid-time-space", 1, 0.25, 0.75, seed=3))
    rep = ctime.kernel_comparison_check(f, [16.0, 32.0, 64.0], eps=0.125)
    assert all(np.isfinite(rep.fitted))
    assert rep.growth <= 0.5
    with pytest.raises(ValueError):
        ctime.kernel_comparison_check(f, [16.0], eps=1.5)


def test_slab_rows_and_passage():
    slab = ctime.uniformize(hom(1, 0.5), 1.0)
    rows = slab.rows()
    assert all(r[-1] > 0 for r in rows)
    assert slab.passage((0,)) == pytest.approx(-math.log(ive(0, 1.0)), rel=1e-12)
    assert slab.value((slab.radius + 1,)) == 0.0 and slab.passage((slab.radius + 1,)) == math.inf
