"""Quenched rate of the simple walk, where the answer is known in closed form.

With a homogeneous environment the quenched law is just the binomial law,
so -log P(X_n = [nx]) / n should approach the Legendre transform of
log cosh. We solve the exact log-space DP, extrapolate in 1/n and compare.
"""
import numpy as np

from rwdre import rates
from rwdre.environment import DiscreteEnvSpec, EnvironmentField
from rwdre.lattice import JumpRange
from rwdre.runner import cramer_nn1

field = EnvironmentField(DiscreteEnvSpec("homogeneous", JumpRange.nearest_neighbor(1), kappa=0.5))
xs = np.round(np.arange(-0.9, 0.91, 0.15), 10)[:, None]
horizons = [128, 256, 512, 1024, 2048]

curve = rates.extrapolate(rates.rate_curve(field, xs, horizons))
exact = cramer_nn1(xs[:, 0])

print(f"{'x':>6} {'I_128':>9} {'I_2048':>9} {'fit':>9} {'exact':>9}")
for x, row, fit, ex in zip(xs[:, 0], curve.values, curve.i_hat, exact):
    print(f"{x:6.2f} {row[0]:9.5f} {row[-1]:9.5f} {fit:9.5f} {ex:9.5f}")

# the finite-n error is mostly the Gaussian prefactor (log n)/(2n); the 1/n fit removes most of it
print("max |I_2048 - exact| =", np.max(np.abs(curve.values[:, -1] - exact)))
print("max |fit - exact|    =", np.max(np.abs(curve.i_hat - exact)))

print("convexity:", rates.convexity_check(curve).to_dict())
print("boundary value at x=1 (exact log 2 = 0.6931):",
      rates.boundary_extend(field, [1.0], horizons[:4]).value)
