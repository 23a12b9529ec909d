import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwdre.environment import ContinuousEnvSpec, DiscreteEnvSpec, EnvironmentField, RateField
from rwdre.lattice import JumpRange

RANGES = [JumpRange.nearest_neighbor(1), JumpRange.nearest_neighbor(2), JumpRange.cube(2),
          JumpRange.lazy_cross(3)]


def _sites(d, r, n_sites=50, seed=0):
    return np.random.default_rng(seed).integers(-r, r + 1, size=(n_sites, d))


@pytest.mark.parametrize("model", ["homogeneous", "iid-time-space", "spin-flip"])
@pytest.mark.parametrize("rng", RANGES, ids=lambda r: r.spec())
def test_vectors_are_probabilities_above_kappa(model, rng):
    kappa = 0.5 / rng.size
    f = EnvironmentField(DiscreteEnvSpec(model, rng, kappa, seed=3))
    xs = _sites(rng.dim, 100)
    v = f.env_many(np.arange(len(xs)), xs)
    assert np.allclose(v.sum(axis=1), 1.0, atol=1e-12)
    assert v.min() >= kappa - 1e-15


@pytest.mark.parametrize("model", ["iid-time-space", "spin-flip"])
def test_field_is_deterministic_and_seed_dependent(model):
    rng = JumpRange.nearest_neighbor(2)
    xs = _sites(2, 1000)
    a = EnvironmentField(DiscreteEnvSpec(model, rng, 0.1, seed=7)).env_many(np.arange(50), xs)
    b = EnvironmentField(DiscreteEnvSpec(model, rng, 0.1, seed=7)).env_many(np.arange(50), xs)
    c = EnvironmentField(DiscreteEnvSpec(model, rng, 0.1, seed=8)).env_many(np.arange(50), xs)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_query_order_does_not_matter():
    f = EnvironmentField(DiscreteEnvSpec("iid-time-space", JumpRange.cube(2), 0.05, seed=1))
    xs = _sites(2, 30)
    ts = np.arange(len(xs)) % 7
    whole = f.env_many(ts, xs)
    single = np.array([f.env_at(t, x) for t, x in zip(ts[::-1], xs[::-1])])[::-1]
    assert np.array_equal(whole, single)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 40), st.integers(-20, 20), st.integers(-20, 20),
       st.integers(0, 10), st.integers(-5, 5), st.integers(-5, 5))
def test_shift_reads_the_shifted_cell(m, z1, z2, n, x1, x2):
    f = EnvironmentField(DiscreteEnvSpec("iid-time-space", JumpRange.nearest_neighbor(2), 0.1, seed=2))
    g = f.shift(m, (z1, z2))
    assert np.array_equal(g.env_at(n, (x1, x2)), f.env_at(n + m, (x1 + z1, x2 + z2)))


def test_iid_cells_look_uniform_on_the_simplex():
    # w = (v - kappa) / (1 - |R| kappa) should be Dirichlet(1,..,1): mean 1/k, var (k-1)/(k^2 (k+1))
    rng = JumpRange.nearest_neighbor(2)
    f = EnvironmentField(DiscreteEnvSpec("iid-time-space", rng, 0.05, seed=11))
    xs = _sites(2, 10 ** 6, n_sites=40000, seed=4)
    v = f.env_many(np.arange(len(xs)), xs)
    w = (v - 0.05) / (1 - 4 * 0.05)
    k = 4
    assert np.allclose(w.mean(axis=0), 1 / k, atol=0.01)
    assert np.allclose(w.var(axis=0), (k - 1) / (k * k * (k + 1)), rtol=0.05)


def test_spin_flip_vectors_follow_occupancy():
    spec = DiscreteEnvSpec("spin-flip", JumpRange.nearest_neighbor(1), 0.1, seed=5, rho=0.3, flip=0.2)
    f = EnvironmentField(spec)
    for n in range(0, 30, 3):
        for x in range(-6, 7):
            occ = f.occupancy_at(n, (x,))
            want = spec.v_occ if occ else spec.v_vac
            assert np.allclose(f.env_at(n, (x,)), want)


def test_spin_flip_occupancy_changes_over_time():
    spec = DiscreteEnvSpec("spin-flip", JumpRange.nearest_neighbor(1), 0.1, seed=9, rho=0.5, flip=0.3)
    f = EnvironmentField(spec)
    for x in range(-3, 4):
        seq = [f.occupancy_at(n, (x,)) for n in range(40)]
        changes = sum(a != b for a, b in zip(seq, seq[1:]))
        # a change needs a redraw (prob .3) landing on the other value (prob .5)
        assert 0 < changes < 30


@pytest.mark.parametrize("rho,q", [(0.5, 0.5), (0.3, 0.25), (0.8, 0.9)])
def test_spin_flip_density_is_stationary(rho, q):
    spec = DiscreteEnvSpec("spin-flip", JumpRange.nearest_neighbor(1), 0.1, seed=1, rho=rho, flip=q)
    f = EnvironmentField(spec)
    xs = np.arange(10 ** 5)[:, None]
    for n in (0, 7):
        occ = (f.env_many(np.full(len(xs), n), xs)[:, 1] == spec.v_occ[1]).mean()
        assert abs(occ - rho) < 0.01


@pytest.mark.parametrize("rho,want", [(1.0, 1), (0.0, 0)])
def test_frozen_spin_field(rho, want):
    spec = DiscreteEnvSpec("spin-flip", JumpRange.nearest_neighbor(1), 0.1, seed=1, rho=rho, flip=0.0)
    f = EnvironmentField(spec)
    assert all(f.occupancy_at(n, (x,)) == want for n in range(5) for x in range(-5, 6))


def test_spin_flip_time_correlation():
    # one step: P(bit unchanged) = 1 - q * (2 rho (1 - rho))
    rho, q = 0.3, 0.4
    spec = DiscreteEnvSpec("spin-flip", JumpRange.nearest_neighbor(1), 0.1, seed=3, rho=rho, flip=q)
    f = EnvironmentField(spec)
    a = np.array([f.occupancy_at(4, (x,)) for x in range(30000)])
    b = np.array([f.occupancy_at(5, (x,)) for x in range(30000)])
    assert abs((a == b).mean() - (1 - q * 2 * rho * (1 - rho))) < 0.01


def test_occupancy_rejected_for_other_models():
    f = EnvironmentField(DiscreteEnvSpec("homogeneous", JumpRange.nearest_neighbor(1), 0.1))
    with pytest.raises(ValueError):
        f.occupancy_at(0, (0,))


@pytest.mark.parametrize("kw", [
    dict(model="nope"),
    dict(kappa=0.6),
    dict(kappa=0.0),
    dict(model="homogeneous", probs=(0.5, 0.6)),
    dict(model="homogeneous", probs=(0.95, 0.05)),
    dict(model="spin-flip", rho=1.5),
    dict(model="spin-flip", flip=-0.1),
])
def test_spec_validation(kw):
    base = dict(model="iid-time-space", range=JumpRange.nearest_neighbor(1), kappa=0.1)
    base.update(kw)
    with pytest.raises(ValueError):
        DiscreteEnvSpec(**base)


@pytest.mark.parametrize("model", ["homogeneous", "iid-time-space", "spin-flip"])
def test_spec_dict_round_trip(model):
    s = DiscreteEnvSpec(model, JumpRange.cube(2), 0.05, seed=4)
    t = DiscreteEnvSpec.from_dict(s.to_dict())
    assert t == s and t.digest() == s.digest()
    c = ContinuousEnvSpec(model, 2, 0.25, 0.75, seed=4)
    assert ContinuousEnvSpec.from_dict(c.to_dict()) == c


def test_dump_rows():
    f = EnvironmentField(DiscreteEnvSpec("iid-time-space", JumpRange.nearest_neighbor(1), 0.1, seed=2))
    rows = f.dump([0, 1], 2)
    assert len(rows) == 2 * 5 * 2
    for n, x, j, p in rows:
        assert p == f.env_at(n, (x,))[j]


@pytest.mark.parametrize("model", ["homogeneous", "iid-time-space", "spin-flip"])
def test_rates_stay_in_band(model):
    spec = ContinuousEnvSpec(model, 2, 0.25, 0.75, seed=3, delta=0.5)
    f = RateField(spec)
    xs = _sites(2, 50, 200)
    for k in range(5):
        r = f.rates_piece(k, xs)
        assert r.shape == (200, 4)
        assert r.min() >= 0.25 - 1e-12 and r.max() <= 0.75 + 1e-12
    assert f.total_rate_bound == 3.0
    assert f.piece(1.2) == 2
    g = f.shift(3, (1, -1))
    assert np.array_equal(g.rates_at(0.1, (0, 0)), f.rates_at(1.6, (1, -1)))


def test_continuous_spec_validation():
    with pytest.raises(ValueError):
        ContinuousEnvSpec("homogeneous", 1, 0.5, 0.25)
    with pytest.raises(ValueError):
        ContinuousEnvSpec("homogeneous", 1, 0.25, 0.5, rates=(0.1, 0.3))
    with pytest.raises(ValueError):
        ContinuousEnvSpec("homogeneous", 1, 0.25, 0.5, delta=0)


def test_shift_composition_and_identity():
    f = EnvironmentField(DiscreteEnvSpec("spin-flip", JumpRange.nearest_neighbor(2), 0.1, seed=4))
    z = (2, -1)
    a = f.shift(1, z).shift(1, z)
    b = f.shift(2, (4, -2))
    c = f.shift(0, (0, 0))
    xs = _sites(2, 10, 30)
    ts = np.arange(30) % 5
    assert np.array_equal(a.env_many(ts, xs), b.env_many(ts, xs))
    assert np.array_equal(c.env_many(ts, xs), f.env_many(ts, xs))


def test_rates_are_piecewise_constant():
    f = RateField(ContinuousEnvSpec("spin-flip", 1, 0.2, 0.6, seed=2, delta=1.0))
    assert np.array_equal(f.rates_at(2.5, (3,)), f.rates_at(2.0, (3,)))
    h = RateField(ContinuousEnvSpec("homogeneous", 2, 0.3, 0.3))
    assert np.array_equal(h.rates_at(7.1, (1, 1)), np.full(4, 0.3))


def test_ellipticity_on_many_cells():
    for model in ("iid-time-space", "spin-flip"):
        f = EnvironmentField(DiscreteEnvSpec(model, JumpRange.cube(2), 0.02, seed=6))
        xs = _sites(2, 10 ** 6, 10 ** 5, seed=1)
        v = f.env_many(np.arange(len(xs)) % 97, xs)
        assert v.min() >= 0.02 - 1e-15
        assert np.abs(v.sum(axis=1) - 1).max() <= 1e-12
