import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from rwdre import dp
from rwdre.environment import DiscreteEnvSpec, EnvironmentField
from rwdre.errors import ResourceError
from rwdre.lattice import JumpRange, even_lattice_iso, reachable


def field(model, rng, kappa=None, seed=0, **kw):
    kappa = kappa if kappa is not None else 0.5 / rng.size
    return EnvironmentField(DiscreteEnvSpec(model, rng, kappa, seed=seed, **kw))


def enumerate_paths(f, n):
    """Exact law of X_n by summing the product of step probabilities over all paths."""
    steps = f.range.steps
    out = {}
    for path in itertools.product(range(len(steps)), repeat=n):
        x = np.zeros(f.dim, dtype=np.int64)
        p = 1.0
        for t, j in enumerate(path):
            p *= f.env_at(t, x)[j]
            x = x + steps[j]
        key = tuple(int(v) for v in x)
        out[key] = out.get(key, 0.0) + p
    return out


MODELS = ["homogeneous", "iid-time-space", "spin-flip"]


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("rng,n", [(JumpRange.nearest_neighbor(1), 9), (JumpRange.nearest_neighbor(2), 5),
                                   (JumpRange.cube(2), 4), (JumpRange.lazy_cross(2), 5)],
                         ids=["nn1", "nn2", "cube2", "cross2"])
def test_matches_path_enumeration(model, rng, n):
    f = field(model, rng, seed=4)
    tab = dp.forward_solve(f, n)
    law = enumerate_paths(f, n)
    for y, p in law.items():
        assert tab.log_pi(n, y) == pytest.approx(math.log(p), abs=1e-12)
    # every other cell is unreachable
    finite = {tuple(int(v) for v in r[1:-1]) for r in tab.rows([n])}
    assert finite == set(law)


def test_homogeneous_nn1_is_binomial():
    p = 0.3
    f = EnvironmentField(DiscreteEnvSpec("homogeneous", JumpRange.nearest_neighbor(1), 0.1,
                                         probs=(1 - p, p)))
    n = 400
    tab = dp.forward_solve(f, n, keep="last")
    for k in range(0, n + 1, 7):
        assert tab.log_pi(n, (2 * k - n,)) == pytest.approx(binom.logpmf(k, n, p), rel=1e-11, abs=1e-11)
    assert tab.log_pi(n, (1 - n,)) == -math.inf


def test_lazy_walk_is_trinomial():
    f = field("homogeneous", JumpRange.cube(1), kappa=1 / 3)
    n = 60
    tab = dp.forward_solve(f, n, keep="last")
    for y in range(-n, n + 1, 5):
        lp = math.log(sum(math.comb(n, k) * math.comb(n - k, k + y) for k in range(n + 1)
                          if 0 <= k + y <= n - k)) - n * math.log(3)
        assert tab.log_pi(n, (y,)) == pytest.approx(lp, rel=1e-12)


@pytest.mark.parametrize("model", MODELS)
def test_mass_is_conserved(model):
    f = field(model, JumpRange.nearest_neighbor(2), seed=1)
    tab = dp.forward_solve(f, 40, keep=[10, 40])
    for m in (10, 40):
        s = tab.slab(m)
        assert np.exp(s[np.isfinite(s)]).sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("model", ["iid-time-space", "spin-flip"])
def test_subadditivity_holds(model):
    f = field(model, JumpRange.nearest_neighbor(1), kappa=0.1, seed=2)
    rep = dp.check_subadditivity(f, 10, trials=300, seed=1)
    assert rep.max_violation <= 1e-9


def test_passage_between_uses_shifted_field():
    f = field("iid-time-space", JumpRange.nearest_neighbor(1), seed=3)
    a = dp.passage_between(f, 3, 8, (1,), (2,))
    law = enumerate_paths(f.shift(3, (1,)), 5)
    assert a == pytest.approx(-math.log(law[(1,)]), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from([(1, 0), (-1, 0), (0, 1), (0, -1)]), min_size=0, max_size=12),
       st.integers(0, 20))
def test_admissible_paths_respect_the_ellipticity_floor(steps, t0):
    f = field("iid-time-space", JumpRange.nearest_neighbor(2), kappa=0.1, seed=5)
    res = dp.is_admissible(dp.AdmissiblePath(t0, (0, 0), tuple(steps)), f)
    assert res.admissible
    assert res.log_prob >= res.log_bound - 1e-12
    # and the DP probability of the endpoint dominates any single path
    if steps and t0 == 0:
        tab = dp.forward_solve(f, len(steps), keep="last")
        assert tab.log_pi(len(steps), dp.AdmissiblePath(0, (0, 0), tuple(steps)).end) >= res.log_prob - 1e-12


def test_inadmissible_step_detected():
    f = field("homogeneous", JumpRange.nearest_neighbor(1))
    res = dp.is_admissible(dp.AdmissiblePath(0, (0,), ((1,), (2,))), f)
    assert not res.admissible and res.log_prob == -math.inf


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("rng", [JumpRange.nearest_neighbor(2), JumpRange.cube(2)], ids=["nn2", "cube2"])
def test_cone_solve_equals_full_solve(model, rng):
    f = field(model, rng, seed=6)
    n = 30
    full = dp.forward_solve(f, n, keep="all")
    gen = np.random.default_rng(0)
    times, pts = [], []
    while len(pts) < 12:
        m = int(gen.integers(n // 2, n + 1))
        y = tuple(int(v) for v in gen.integers(-m, m + 1, size=2))
        if reachable(rng, y, m):
            times.append(m)
            pts.append(y)
    got = dp.solve_points(f, times, pts)
    want = [full.log_pi(m, y) for m, y in zip(times, pts)]
    assert np.allclose(got, want, rtol=0, atol=1e-12)
    one = dp.solve_targets(f, n, pts[:3])
    assert np.allclose(one, [full.log_pi(n, y) for y in pts[:3]], atol=1e-12)


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("d", [1, 2])
def test_even_time_walk_matches_the_original(model, d):
    base = field(model, JumpRange.nearest_neighbor(d), seed=8)
    ev = dp.EvenTimeField(base)
    m = 10
    x_tab = dp.forward_solve(base, 2 * m, keep="last")
    y_tab = dp.forward_solve(ev, m, keep="last")
    iso = even_lattice_iso(d)
    for row in x_tab.rows([2 * m]):
        x = row[1:-1]
        assert y_tab.log_pi(m, iso.h(x)) == pytest.approx(row[-1], abs=1e-12)
    s = y_tab.slab(m)
    assert np.exp(s[np.isfinite(s)]).sum() == pytest.approx(1.0, abs=1e-12)


def test_even_time_field_rejects_odd_start_and_wrong_range():
    base = field("iid-time-space", JumpRange.nearest_neighbor(1))
    with pytest.raises(ValueError):
        dp.EvenTimeField(base.shift(1, (0,)))
    with pytest.raises(ValueError):
        dp.EvenTimeField(field("iid-time-space", JumpRange.cube(1)))


def test_table_save_load_round_trip(tmp_path):
    f = field("spin-flip", JumpRange.nearest_neighbor(2), seed=2)
    tab = dp.forward_solve(f, 12, keep=[0, 5, 12])
    path = tmp_path / "t.npz"
    tab.save(path)
    back = dp.PassageTable.load(path)
    assert back.horizon == 12 and back.range == tab.range
    for m in (0, 5, 12):
        assert np.array_equal(back.slab(m), tab.slab(m))


def test_kept_slabs_and_errors():
    f = field("homogeneous", JumpRange.nearest_neighbor(1))
    tab = dp.forward_solve(f, 6, keep="last")
    with pytest.raises(KeyError):
        tab.slab(3)
    with pytest.raises(ValueError):
        tab.log_pi(7, (0,))
    with pytest.raises(ValueError):
        dp.forward_solve(f, -1)
    assert dp.passage(tab, 6, (8,)) == math.inf
    assert dp.forward_solve(f, 0).log_pi(0, (0,)) == 0.0


def test_budget_exceeded_raises_resource_error():
    f = field("iid-time-space", JumpRange.cube(2))
    with pytest.raises(ResourceError, match="budget"):
        dp.forward_solve(f, 5000, keep="last", budget_mb=10)


def test_event_probability_and_nearest_reachable():
    from rwdre.regions import interval
    f = EnvironmentField(DiscreteEnvSpec("homogeneous", JumpRange.nearest_neighbor(1), 0.1,
                                         probs=(0.5, 0.5)))
    n = 100
    tab = dp.forward_solve(f, n, keep="last")
    want = binom.cdf(60, n, 0.5) - binom.cdf(49, n, 0.5)  # X_n/n in [0, 0.2] <=> k in [50, 60]
    assert dp.event_prob(tab, n, interval(0.0, 0.2)) == pytest.approx(want, rel=1e-10)
    rng = JumpRange.nearest_neighbor(1)
    assert dp.nearest_reachable(rng, 4, (3,)) == (2,)
    assert dp.nearest_reachable(rng, 4, (4,)) == (4,)
