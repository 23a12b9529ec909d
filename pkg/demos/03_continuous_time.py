"""Continuous time: exact kernels by uniformisation, checked two ways.

For constant rates the kernel is a product of scaled Bessel functions. For
a random rate field there is no closed form, so the uniformised kernel is
compared against a path-weighted Monte Carlo estimate instead.
"""
import numpy as np

from rwdre import ctime, rates
from rwdre.environment import ContinuousEnvSpec, RateField

unit = RateField(ContinuousEnvSpec("homogeneous", 1, 0.5, 0.5))
slab = ctime.uniformize(unit, 20.0)
bessel = ctime.srw_kernel_slab(ctime.SrwOracle(1), 20.0, slab.radius)
print("uniformisation vs Bessel, max abs error:", np.abs(slab.values - bessel).max())

field = RateField(ContinuousEnvSpec("iid-time-space", 1, kappa1=0.25, kappa2=0.75, seed=0))
exact = ctime.uniformize(field, 4.0)
for est in ctime.fk_estimate(field, 4.0, [[-2], [0], [2]], samples=100_000, seed=0):
    z = (est.mean - exact.value(est.y)) / est.stderr
    print(f"y={est.y[0]:+d}  kernel {exact.value(est.y):.5f}  MC {est.mean:.5f} +- {est.stderr:.5f}  z={z:+.2f}")

# shape theorem: a_c(0,t,0,ty)/t converges uniformly to J on compacts
times = [8.0, 16.0, 32.0, 64.0]
_, slabs = ctime.uniformize(unit, 64.0, record=times)
oracle = ctime.SrwOracle(1)
res = rates.shape_check(slabs, 0.25, lambda u: np.array([ctime.srw_rate_J(oracle, v) for v in u]))
for t, s in zip(times, res.details["deviation"]):
    print(f"t={t:5.0f}  sup deviation {s:.4f}   (log(2 pi t)/2t = {np.log(2 * np.pi * t) / (2 * t):.4f})")
