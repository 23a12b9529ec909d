"""The fifteen acceptance criteria, each at its stated tolerance.

Every test records one line through the ``criterion`` fixture; the lines
are repeated in the terminal summary.
"""
import itertools
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from rwdre import ctime, dp, lattice, rates
from rwdre.config import default_config, serialize
from rwdre.environment import ContinuousEnvSpec, DiscreteEnvSpec, EnvironmentField, RateField
from rwdre.lattice import JumpRange
from rwdre.regions import interval
from rwdre.runner import cramer_nn1


def cramer(x):
    return cramer_nn1(np.atleast_1d(x), 0.5)


def nn1(model, kappa, seed=0, **kw):
    return EnvironmentField(DiscreteEnvSpec(model, JumpRange.nearest_neighbor(1), kappa, seed=seed, **kw))


def test_01_cramer_agreement(criterion):
    t0 = time.perf_counter()
    f = nn1("homogeneous", 0.5)
    xs = [[0.0], [0.25], [-0.25], [0.5], [-0.5]]
    curve = rates.extrapolate(rates.rate_curve(f, xs, [128, 256, 512, 1024]))
    want = cramer(np.array(xs)[:, 0])
    finite_n = float(np.max(np.abs(curve.values[:, -1] - want)))
    hat = float(np.max(np.abs(curve.i_hat - want)))
    elapsed = time.perf_counter() - t0
    ok = finite_n <= 0.02 and hat <= 5e-3 and elapsed < 10
    criterion(1, "Cramer, I_1024 (Legendre oracle)", finite_n, 0.02, passed=ok,
              note=f"extrapolated {hat:.3g} <= 5e-3, {elapsed:.2f} s")


def test_02_bessel_rate_vs_j(criterion):
    t0 = time.perf_counter()
    t, x = 200.0, 0.5
    o = ctime.SrwOracle(1, 1.0)
    p = ctime.srw_kernel(o, t, (int(x * t),))
    dev = abs(-math.log(p) / t - ctime.srw_rate_J(o, [x]))
    elapsed = time.perf_counter() - t0
    criterion(2, "Bessel kernel rate vs J at t=200, x=0.5", dev, 0.03,
              passed=dev <= 0.03 and elapsed < 1, note=f"{elapsed * 1e3:.1f} ms")


def test_03_uniformization_vs_bessel(criterion):
    t0 = time.perf_counter()
    f = RateField(ContinuousEnvSpec("homogeneous", 1, 0.5, 0.5))
    o = ctime.SrwOracle(1, 1.0)
    times = [0.25, 1.0, 2.5, 5.0, 10.0, 15.0, 20.0]
    slab, slabs = ctime.uniformize(f, 20.0, record=times)
    worst = 0.0
    for t in times:
        s = slabs[t]
        ys = np.arange(-30, 31)
        got = np.array([s.value((y,)) for y in ys])
        ref = np.array([ctime.srw_kernel(o, t, (y,)) for y in ys])
        worst = max(worst, float(np.max(np.abs(got - ref))))
    elapsed = time.perf_counter() - t0
    criterion(3, "uniformization vs Bessel, t<=20, |x|<=30", worst, 1e-10,
              passed=worst <= 1e-10 and elapsed < 5, note=f"{elapsed:.2f} s")


def test_04_feynman_kac_vs_uniformization(criterion):
    t0 = time.perf_counter()
    f = RateField(ContinuousEnvSpec("iid-time-space", 1, 0.25, 0.75, seed=0))
    targets = [[-2], [0], [2]]
    est = ctime.fk_estimate(f, 4.0, targets, samples=100_000, seed=0)
    slab = ctime.uniformize(f, 4.0)
    z = [abs(e.mean - slab.value(e.y)) / e.stderr for e in est]
    elapsed = time.perf_counter() - t0
    criterion(4, "Feynman-Kac vs uniformization, max |z|", max(z), 3.0,
              passed=max(z) <= 3.0 and elapsed < 30,
              note=f"z = {', '.join(f'{v:.2f}' for v in z)}, {elapsed:.1f} s")


def test_05_subadditivity(criterion):
    worst = -math.inf
    for model in ("iid-time-space", "spin-flip"):
        f = EnvironmentField(DiscreteEnvSpec(model, JumpRange.nearest_neighbor(2), 0.1, seed=5))
        rep = dp.check_subadditivity(f, 12, trials=10_000, seed=11)
        worst = max(worst, rep.max_violation)
    criterion(5, "subadditivity over 2 x 10^4 triples, horizon 12", worst, 1e-9)


def test_06_reach_identity(criterion):
    t0 = time.perf_counter()
    rng = JumpRange.cube(2)
    bad = sum(lattice.reach_set(rng, n) != rng.hull.lattice_points(n) for n in range(11))
    elapsed = time.perf_counter() - t0
    criterion(6, "R_n = nU cap Z^2 for n<=10, square range", bad, 0,
              passed=bad == 0 and elapsed < 1, note=f"{elapsed * 1e3:.0f} ms")


def test_07_gauge_sandwich(criterion):
    bad = 0
    cases = [JumpRange.cube(1), JumpRange.cube(2), JumpRange.lazy_cross(2)]
    for rng in cases:
        u = rng.hull
        for x in itertools.product(range(-20, 21), repeat=rng.dim):
            g, s = u.gauge(x), lattice.min_steps(rng, x)
            bad += not (g <= s <= g + 1)
    criterion(7, "gauge <= steps <= gauge + 1 on |x|<=20", bad, 0,
              note="square and cross ranges in d=2, segment in d=1")


def test_08_bridge_bounds(criterion):
    gen = np.random.default_rng(2024)
    bad = count = 0
    tr = lattice.truncate
    for rng in (JumpRange.cube(2), JumpRange.lazy_cross(2)):
        u = rng.hull
        got = 0
        while got < 100:
            n = int(gen.integers(1, 300))
            z, x = gen.uniform(-1, 1, 2), gen.uniform(-1, 1, 2)
            if u.gauge(list(z)) > 1 or u.gauge(list(x)) >= 0.95:
                continue
            got += 1
            b = lattice.bridge_bound(rng, n, z, x)
            n2 = lattice.bridge_time_up(rng, n, z, x)
            n1 = lattice.bridge_time_down(rng, n, z, x)
            up = n <= n2 <= n + b and lattice.min_steps(
                rng, np.subtract(tr(n2 * x), tr(n * z))) <= n2 - n
            dn = n - b <= n1 <= n and lattice.min_steps(
                rng, np.subtract(tr(n * z), tr(n1 * x))) <= n - n1
            bad += (not up) + (not dn)
        count += got
    criterion(8, f"bridging bounds over {count} triples", bad, 0)


def test_09_ellipticity(criterion):
    grid = [[v] for v in np.linspace(-0.8, 0.8, 9)]
    worst = -math.inf
    for model in ("homogeneous", "iid-time-space", "spin-flip"):
        for rng, kappa in ((JumpRange.nearest_neighbor(1), 0.1), (JumpRange.cube(1), 0.05)):
            f = EnvironmentField(DiscreteEnvSpec(model, rng, kappa, seed=3))
            c = rates.rate_curve(f, grid, [256, 512, 1024, 2048])
            worst = max(worst, float(np.max(c.values) - abs(math.log(kappa))))
    criterion(9, "max I_n - |log kappa|, 3 models x 2 ranges, n<=2048", worst, 1e-12)


def test_10_quenched_concentration(criterion):
    t0 = time.perf_counter()
    grid = [[v] for v in np.linspace(-0.8, 0.8, 9)]
    worst = 0.0
    for model in ("iid-time-space", "spin-flip"):
        spec = DiscreteEnvSpec(model, JumpRange.nearest_neighbor(1), 0.1)
        worst = max(worst, rates.quenched_concentration(spec, [1, 2], grid, 4096).measured)
    elapsed = time.perf_counter() - t0
    criterion(10, "seed-to-seed deviation of I_4096", worst, 0.05,
              passed=worst <= 0.05 and elapsed < 60, note=f"{elapsed:.1f} s")


def test_11_convexity(criterion):
    grid = [[v] for v in np.round(np.arange(-0.8, 0.81, 0.1), 10)]
    hs = [256, 512, 1024, 2048]
    worst = -math.inf
    for f in (nn1("homogeneous", 0.5), nn1("iid-time-space", 0.1, seed=1),
              nn1("iid-time-space", 0.1, seed=2)):
        res = rates.convexity_check(rates.extrapolate(rates.rate_curve(f, grid, hs)))
        worst = max(worst, res.details["raw"])
    criterion(11, "largest midpoint excess of I-hat", max(worst, 0.0), 0.02,
              note=f"raw {worst:.3g}")


def test_12_ldp_bounds(criterion):
    hs = [256, 512, 1024, 2048]
    grid = rates.ct_grid(1.0, 0.01, 1)
    closed, opened = interval(0.4, 0.6, closed=True), interval(0.4, 0.6, closed=False)
    worst, ref_err = -math.inf, 0.0
    for f in (nn1("homogeneous", 0.5), nn1("iid-time-space", 0.1, seed=1)):
        tab = dp.forward_solve(f, hs[-1], keep=hs)
        if f.spec.model == "homogeneous":
            fn = lambda u: cramer(np.atleast_2d(u)[:, 0])
        else:
            inner = grid[np.abs(grid[:, 0]) < 1 - 1e-12]
            fn = rates.interpolated_rate(rates.extrapolate(rates.rate_curve(f, inner, hs)))
        for region, kind in ((closed, "closed"), (opened, "open")):
            rep = rates.ldp_check(tab, hs, region, kind, fn, grid, 0.05)
            worst = max(worst, rep.measured)
            if f.spec.model == "homogeneous" and kind == "closed":
                ref_err = abs(rep.reference_inf - float(cramer(0.4)[0]))
    criterion(12, "LDP open/closed excess at n=2048", worst, 0.05,
              passed=worst <= 0.05 and ref_err <= 1e-12,
              note=f"closed-set inf vs Cramer at 0.4: {ref_err:.2g}")


def _shape_measure(field, rate_fn):
    times = [8.0, 16.0, 32.0, 64.0]
    _, slabs = ctime.uniformize(field, 64.0, record=times)
    return rates.shape_check(slabs, 0.25, rate_fn, 0.05, 0.02)


def test_13_shape_theorem(criterion):
    hom = RateField(ContinuousEnvSpec("homogeneous", 1, 0.5, 0.5))
    o = ctime.SrwOracle(1, 1.0)
    r1 = _shape_measure(hom, lambda u: np.array([ctime.srw_rate_J(o, v) for v in np.atleast_2d(u)]))
    iid = RateField(ContinuousEnvSpec("iid-time-space", 1, 0.15, 0.35, seed=2))
    grid = rates.ct_grid(0.25, 1 / 64, 1)
    est = rates.ct_rate_estimate(iid, grid, [256, 512, 1024])
    r2 = _shape_measure(iid, lambda u: np.interp(np.atleast_2d(u)[:, 0], grid[:, 0], est))
    worst = max(r1.measured, r2.measured)
    criterion(13, "s(64) with s nonincreasing up to 0.02", worst, 0.05,
              note=f"homogeneous {r1.measured:.4f}, iid {r2.measured:.4f}")


def test_14_even_lattice_reduction(criterion):
    worst = 0.0
    notes = []
    for d, x in ((1, [0.3]), (2, [0.2, -0.1])):
        f = EnvironmentField(DiscreteEnvSpec("iid-time-space", JumpRange.nearest_neighbor(d), 0.1, seed=4))
        rep = rates.even_time_rate(f, x, 512)
        worst = max(worst, rep.difference, rep.max_offset)
        notes.append(f"d={d}: direct {rep.difference:.2g}, offsets {rep.max_offset:.2g}")
    criterion(14, "even-time rate vs direct and offsets at 2n=1024", worst, 0.02, note="; ".join(notes))


def _cli(kind, cfg_path, out, threads):
    env = dict(os.environ, NUMBA_NUM_THREADS="8")
    env.pop("RWDRE_CACHE_DIR", None)
    res = subprocess.run([sys.executable, "-m", "rwdre", kind, "--config", str(cfg_path),
                          "--out", str(out), "--threads", str(threads)],
                         capture_output=True, text=True, env=env, timeout=1200)
    assert res.returncode in (0, 1), res.stderr
    return sorted(p.name for p in Path(out).glob("*.csv"))


def test_15_determinism_across_threads(tmp_path, criterion):
    configs = []
    rate = default_config("rate")
    rate.environment = {"model": "iid-time-space", "range": "nn:d=2", "kappa": 0.1, "seed": 3}
    rate.horizons = [32, 64, 128, 256]
    rate.directions = [[0.1, 0.2], [0.0, 0.0], [-0.3, 0.1]]
    rate.checks = ["ellipticity"]
    configs.append(rate)
    mc = default_config("mc-check")
    mc.params["samples"] = 30000
    configs.append(mc)
    quench = default_config("quench")
    quench.environment["model"] = "spin-flip"
    quench.params["n"] = 512
    configs.append(quench)
    mismatches, compared = 0, 0
    for cfg in configs:
        p = tmp_path / f"{cfg.kind}.yaml"
        p.write_text(serialize(cfg))
        outs = {}
        for th in (1, 4, 8):
            out = tmp_path / f"{cfg.kind}-{th}"
            outs[th] = (out, _cli(cfg.kind, p, out, th))
        names = outs[1][1]
        assert names and all(o[1] == names for o in outs.values())
        for name in names:
            ref = (outs[1][0] / name).read_bytes()
            for th in (4, 8):
                compared += 1
                mismatches += (outs[th][0] / name).read_bytes() != ref
    criterion(15, f"CSV byte mismatches across 1/4/8 threads ({compared} comparisons)",
              mismatches, 0)
