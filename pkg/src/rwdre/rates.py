"""Rate-function estimates and the checks run on them.

Discrete-time rates come from exact passage values,
``I_n(x) = a(0, n, 0, y*) / n`` with ``y*`` the lattice point used for
velocity ``x``; the limit is estimated by fitting ``I + c/n`` on the
largest horizons. Continuous-time rates are read off uniformised kernels.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from . import dp
from .ctime import CtKernelSlab, uniformize
from .environment import DiscreteEnvSpec, EnvironmentField, RateField
from .errors import ResourceError
from .lattice import DEGENERATE, NEAREST_NEIGHBOR, JumpRange, even_lattice_iso, truncate

INF = math.inf


# ------------------------------------------------------------ evaluation points

def _gauge(rng: JumpRange, x) -> float:
    x = np.asarray(x, dtype=float)
    if rng.kind == DEGENERATE:
        return 0.0 if not np.any(x) else INF
    return float(rng.hull.gauge([float(v) for v in x]))


def evaluation_point(rng: JumpRange, x, n: int) -> tuple[int, ...] | None:
    """Lattice point whose passage value stands in for velocity ``x`` at time ``n``.

    ``[nx]`` for convex ranges; for the nearest-neighbour range the reachable
    point nearest to ``[nx]`` in l-infinity (lexicographic ties). ``None``
    when nothing suitable is reachable.
    """
    y = truncate([n * float(v) for v in x])
    if rng.kind == NEAREST_NEIGHBOR:
        return dp.nearest_reachable(rng, n, y)
    return y if dp.reachable(rng, y, n) else None


def rate_point(table: dp.PassageTable, x, n: int) -> float:
    """I_n(x) from a passage table; ``inf`` outside the support."""
    if n < 1 or n > table.horizon:
        raise ValueError(f"n must lie in [1, {table.horizon}]")
    if _gauge(table.range, x) > 1 + 1e-12:
        return INF
    y = evaluation_point(table.range, x, n)
    if y is None:
        return INF
    return dp.passage(table, n, y) / n


# ------------------------------------------------------------------ rate curves

@dataclass
class RateCurve:
    """I_n(x) for a list of velocities and horizons, plus the fitted limit."""

    points: np.ndarray            # (P, d) velocities
    gauges: np.ndarray            # (P,)
    horizons: tuple[int, ...]
    passages: np.ndarray          # (P, K) a(0, n, 0, y*)
    kappa: float
    i_hat: np.ndarray | None = None
    residual: np.ndarray | None = None
    flagged: np.ndarray | None = None

    @property
    def values(self) -> np.ndarray:
        """I_n(x) = a / n, shape (P, K)."""
        return self.passages / np.asarray(self.horizons, dtype=float)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def rows(self) -> list[tuple]:
        """``direction_index, x_1..x_d, n, a_d, I_n, I_hat, residual`` rows."""
        out = []
        vals = self.values
        for i, x in enumerate(self.points):
            ih = self.i_hat[i] if self.i_hat is not None else math.nan
            res = self.residual[i] if self.residual is not None else math.nan
            for k, n in enumerate(self.horizons):
                out.append((i, *map(float, x), int(n), float(self.passages[i, k]),
                            float(vals[i, k]), float(ih), float(res)))
        return out

    def lookup(self, x, tol: float = 1e-12) -> int:
        d = np.max(np.abs(self.points - np.asarray(x, dtype=float)), axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise KeyError(f"{tuple(x)} is not a curve point")
        return i


def _check_horizons(horizons) -> tuple[int, ...]:
    h = tuple(int(n) for n in horizons)
    if not h or any(b <= a for a, b in zip(h, h[1:])) or h[0] < 1:
        raise ValueError("horizons must be positive and strictly increasing")
    return h


def rate_curve(field: EnvironmentField, points, horizons,
               budget_mb: float = dp.DEFAULT_BUDGET_MB) -> RateCurve:
    """Exact I_n(x) for every velocity in ``points`` and every horizon."""
    horizons = _check_horizons(horizons)
    rng = field.range
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != rng.dim:
        raise ValueError("dimension mismatch")
    gauges = np.array([_gauge(rng, x) for x in pts])
    targets, times, where = [], [], []
    for i, x in enumerate(pts):
        for k, n in enumerate(horizons):
            y = evaluation_point(rng, x, n) if gauges[i] <= 1 + 1e-12 else None
            if y is not None:
                targets.append(y)
                times.append(n)
                where.append((i, k))
    passages = np.full((len(pts), len(horizons)), INF)
    if targets:
        if rng.kind == DEGENERATE:
            tab = dp.forward_solve(field, max(times), keep=set(times))
            lp = np.array([tab.log_pi(m, y) for m, y in zip(times, targets)])
        else:
            lp = dp.solve_points(field, times, targets, budget_mb)
        for (i, k), v in zip(where, lp):
            passages[i, k] = -v
    return RateCurve(pts, gauges, horizons, passages, float(field.kappa))


def curve_from_table(table: dp.PassageTable, points, horizons) -> RateCurve:
    horizons = _check_horizons(horizons)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    gauges = np.array([_gauge(table.range, x) for x in pts])
    passages = np.array([[rate_point(table, x, n) * n for n in horizons] for x in pts])
    return RateCurve(pts, gauges, horizons, passages, table.kappa)


def fit_limit(ns: Sequence[float], vals: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares ``v ≈ a + c/n``; returns (a, c, max abs deviation)."""
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(vals, dtype=float)
    A = np.stack([np.ones_like(ns), 1.0 / ns], axis=1)
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    dev = float(np.max(np.abs(A @ coef - vals)))
    return float(coef[0]), float(coef[1]), dev


def extrapolate(curve: RateCurve, residual_bound: float = 0.05, min_horizons: int = 4
                ) -> RateCurve:
    """Fill ``i_hat``/``residual``/``flagged`` by fitting the largest half of the horizons.

    Values are clipped to [0, |log kappa|] inside U. A residual above the
    bound flags the direction but is not an error.
    """
    K = len(curve.horizons)
    if K < min_horizons:
        raise ValueError(f"need at least {min_horizons} horizons, got {K}")
    half = max(2, (K + 1) // 2)
    ns = curve.horizons[-half:]
    cap = abs(math.log(curve.kappa))
    vals = curve.values
    i_hat = np.empty(len(curve.points))
    res = np.zeros(len(curve.points))
    for i in range(len(curve.points)):
        v = vals[i, -half:]
        if not np.all(np.isfinite(v)):
            i_hat[i] = INF
            continue
        a, _, dev = fit_limit(ns, v)
        if curve.gauges[i] <= 1 + 1e-12:
            a = min(max(a, 0.0), cap)
        i_hat[i], res[i] = a, dev
    curve.i_hat, curve.residual = i_hat, res
    curve.flagged = res > residual_bound
    return curve


# ----------------------------------------------------------------- boundary

@dataclass
class BoundaryValue:
    x: tuple
    value: float
    sequence: list              # [(k, x_k, I_hat(x_k))]
    rule: str = "min over the last two terms of x_k = (1 - 2^-k) x"


def boundary_extend(field: EnvironmentField, x, horizons, k_max: int = 6) -> BoundaryValue:
    """Boundary value of the rate function along x_k = (1 - 2^-k) x, k = 1..k_max.

    The liminf is approximated by the minimum of the last two terms, so a
    late dip in a non-monotone sequence is not missed.
    """
    rng = field.range
    g = _gauge(rng, x)
    if g > 1 + 1e-9:
        return BoundaryValue(tuple(map(float, x)), INF, [])
    if abs(g - 1) > 1e-9:
        raise ValueError(f"x must lie on the boundary of U (gauge {g})")
    xs = np.array([(1 - 2.0 ** -k) * np.asarray(x, dtype=float) for k in range(1, k_max + 1)])
    curve = extrapolate(rate_curve(field, xs, horizons))
    seq = [(k, tuple(map(float, xk)), float(v))
           for k, xk, v in zip(range(1, k_max + 1), xs, curve.i_hat)]
    tail = [v for _, _, v in seq[-2:]]
    return BoundaryValue(tuple(map(float, x)), float(min(tail)), seq)


# ------------------------------------------------------------------- checks

@dataclass
class CheckResult:
    """Measured value against a tolerance; ``passed`` is measured <= tolerance."""

    name: str
    measured: float
    tolerance: float
    details: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "measured": self.measured, "tolerance": self.tolerance,
                "passed": self.passed, **self.details}


def convexity_check(curve: RateCurve, tol: float = 0.02) -> CheckResult:
    """Largest midpoint excess I((x+y)/2) - (I(x)+I(y))/2 over curve points."""
    if curve.i_hat is None:
        raise ValueError("extrapolate the curve first")
    pts, vals = curve.points, curve.i_hat
    worst, where, count = -INF, None, 0
    for a, b in itertools.combinations(range(len(pts)), 2):
        mid = (pts[a] + pts[b]) / 2
        dist = np.max(np.abs(pts - mid), axis=1)
        c = int(np.argmin(dist))
        if dist[c] > 1e-12 or c in (a, b):
            continue
        count += 1
        if not (np.isfinite(vals[a]) and np.isfinite(vals[b])):
            continue  # an infinite endpoint satisfies the inequality trivially
        v = vals[c] - (vals[a] + vals[b]) / 2
        if v > worst:
            worst, where = v, (a, c, b)
    if count == 0:
        raise ValueError("no collinear midpoint triples among the curve points")
    return CheckResult("convexity", max(float(worst), 0.0), tol,
                       {"triples": count, "worst": where, "raw": float(worst)})


def lipschitz_check(curve: RateCurve, z_list, rng: JumpRange, slack: float = 0.01,
                    radius: float | None = None) -> CheckResult:
    """|I(x) - I(z)| <= C(z) b ||x - z|| with C(z) = 2/(1-||z||) and b = -log kappa.

    Pairs are restricted to x with 1/(1-||x||) <= 2/(1-||z||) and, when
    given, ||x - z|| <= radius. Reports the largest excess over the bound.
    """
    if curve.i_hat is None:
        raise ValueError("extrapolate the curve first")
    b = -math.log(curve.kappa)
    worst, pairs = -INF, 0
    for z in z_list:
        iz = curve.lookup(z)
        nz = curve.gauges[iz]
        if nz >= 1:
            raise ValueError("z must be interior to U")
        c = 2.0 / (1.0 - nz)
        for ix, x in enumerate(curve.points):
            nx = curve.gauges[ix]
            if nx >= 1 or 1.0 / (1.0 - nx) > c:
                continue
            dxz = _gauge(rng, x - curve.points[iz])
            if radius is not None and dxz > radius:
                continue
            pairs += 1
            v = abs(curve.i_hat[ix] - curve.i_hat[iz]) - c * b * dxz
            worst = max(worst, v)
    return CheckResult("lipschitz", max(float(worst), 0.0), slack,
                       {"pairs": pairs, "raw": float(worst)})


def fekete_check(field: EnvironmentField, y: Sequence[int], k: int, m_max: int) -> CheckResult:
    """Subadditivity of m -> a(0, mk, 0, my) on a homogeneous field (exact)."""
    if field.spec.model != "homogeneous":
        raise ValueError("the scaled sequence is only subadditive for homogeneous fields")
    times = [m * k for m in range(1, m_max + 1)]
    targets = [tuple(m * v for v in y) for m in range(1, m_max + 1)]
    a = -dp.solve_points(field, times, targets)
    worst = -INF
    for m1 in range(1, m_max + 1):
        for m2 in range(1, m_max + 1 - m1):
            worst = max(worst, a[m1 + m2 - 1] - a[m1 - 1] - a[m2 - 1])
    return CheckResult("fekete", float(worst), 1e-9, {"sequence": a.tolist()})


def quenched_concentration(spec: DiscreteEnvSpec, seeds: Sequence[int], points, n: int,
                           tol: float = 0.05) -> CheckResult:
    """Largest seed-to-seed difference of I_n over the velocity grid."""
    if len(seeds) < 2:
        raise ValueError("need at least two seeds")
    curves = []
    for s in seeds:
        f = EnvironmentField(DiscreteEnvSpec.from_dict({**spec.to_dict(), "seed": int(s)}))
        curves.append(rate_curve(f, points, [n]).values[:, 0])
    curves = np.array(curves)
    finite = np.all(np.isfinite(curves), axis=0)
    dev = float(np.max(curves[:, finite].max(0) - curves[:, finite].min(0))) if finite.any() else 0.0
    return CheckResult("quenched-concentration", dev, tol,
                       {"seeds": list(map(int, seeds)), "n": n, "values": curves.tolist()})


def ellipticity_check(curve: RateCurve) -> CheckResult:
    """max I_n(x) - |log kappa| over curve points inside U."""
    cap = abs(math.log(curve.kappa))
    inside = curve.gauges <= 1 + 1e-12
    v = curve.values[inside]
    v = v[np.isfinite(v)]
    return CheckResult("ellipticity", float(v.max() - cap) if v.size else -cap, 1e-12)


# ----------------------------------------------------------------------- LDP

@dataclass
class LdpReport:
    region: object
    kind: str                     # "open" or "closed"
    horizons: tuple
    rates: list                   # -(1/n) log P(X_n/n in region)
    reference_inf: float
    inequality: str               # "rate <= inf + slack" or "rate >= inf - slack"
    part: str                     # "(i) lower bound, open sets" / "(ii) upper bound, closed sets"
    slack: float

    @property
    def measured(self) -> float:
        """Signed excess at the largest horizon; <= slack means the inequality holds."""
        r = self.rates[-1]
        if self.kind == "open":
            return r - self.reference_inf if math.isfinite(self.reference_inf) else -INF
        return self.reference_inf - r if math.isfinite(r) else -INF

    @property
    def passed(self) -> bool:
        return self.measured <= self.slack

    def to_dict(self) -> dict:
        return {"kind": self.kind, "horizons": list(self.horizons), "rates": self.rates,
                "reference_inf": self.reference_inf, "inequality": self.inequality,
                "part": self.part, "slack": self.slack, "measured": self.measured,
                "passed": self.passed, "region": repr(self.region)}


def region_inf(rate_fn: Callable[[np.ndarray], np.ndarray], region, grid) -> float:
    """inf of ``rate_fn`` over grid points in the region plus its extreme points."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    pts = grid[region.contains(grid)]
    ext = region.extreme_points()
    if ext and getattr(region, "closed", True):
        pts = np.vstack([pts, np.asarray(ext, dtype=float)]) if len(pts) else np.asarray(ext, float)
    if len(pts) == 0:
        return INF
    return float(np.min(rate_fn(pts)))


def ldp_check(table: dp.PassageTable, horizons, region, kind: str,
              rate_fn: Callable[[np.ndarray], np.ndarray], grid, slack: float = 0.05
              ) -> LdpReport:
    """Compare -(1/n) log P(X_n/n in region) with inf of the rate over the region."""
    if kind not in ("open", "closed"):
        raise ValueError("kind must be 'open' or 'closed'")
    horizons = _check_horizons(horizons)
    rates = []
    for n in horizons:
        lp = dp.log_event_prob(table, n, region)
        rates.append(INF if lp == -INF else -lp / n)
    ref = region_inf(rate_fn, region, grid)
    if kind == "open":
        return LdpReport(region, kind, horizons, rates, ref, "rate <= inf + slack",
                         "(i) lower bound, open sets", slack)
    return LdpReport(region, kind, horizons, rates, ref, "rate >= inf - slack",
                     "(ii) upper bound, closed sets", slack)


def interpolated_rate(curve: RateCurve) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear interpolant of ``i_hat`` along a 1-d curve."""
    if curve.dim != 1 or curve.i_hat is None:
        raise ValueError("needs an extrapolated one-dimensional curve")
    order = np.argsort(curve.points[:, 0])
    xs, ys = curve.points[order, 0], curve.i_hat[order]

    def fn(p):
        p = np.atleast_2d(p)[:, 0]
        out = np.interp(p, xs, ys)
        out[(p < xs[0] - 1e-12) | (p > xs[-1] + 1e-12)] = INF
        return out
    return fn


# ------------------------------------------------------------ continuous time

def ct_grid(K: float, step: float, d: int) -> np.ndarray:
    """Velocities in [-K, K]^d on a grid of the given step."""
    m = int(round(K / step))
    axis = np.arange(-m, m + 1) * step
    return np.stack(np.meshgrid(*[axis] * d, indexing="ij"), axis=-1).reshape(-1, d)


def _slab_passage(slab: CtKernelSlab, ys: np.ndarray) -> np.ndarray:
    ys = np.asarray(ys, dtype=np.int64)
    out = np.full(len(ys), INF)
    ok = np.all(np.abs(ys) <= slab.radius, axis=1)
    idx = tuple((ys[ok] + slab.radius).T)
    v = slab.values[idx]
    with np.errstate(divide="ignore"):
        out[ok] = -np.log(v)
    return out


def ct_rate_estimate(field: RateField, grid: np.ndarray, times: Sequence[float]) -> np.ndarray:
    """Continuous-time rate on ``grid`` fitted over kernels at several times.

    Uses ``a/t ≈ I + c log(t)/t + c'/t`` (three or more times) or
    ``I + c/t`` (two times); every ``t * grid`` must be a lattice point.
    """
    times = sorted(float(t) for t in times)
    if len(times) < 2:
        raise ValueError("need at least two times")
    grid = np.atleast_2d(grid)
    _, slabs = uniformize(field, times[-1], record=times)
    rows = []
    for t in times:
        ys = grid * t
        if np.max(np.abs(ys - np.rint(ys))) > 1e-9:
            raise ValueError(f"grid points times {t} are not lattice points")
        rows.append(_slab_passage(slabs[t], np.rint(ys)) / t)
    vals = np.array(rows)  # (T, P)
    ts = np.array(times)
    cols = [np.ones_like(ts), 1.0 / ts]
    if len(ts) >= 3:
        cols.append(np.log(ts) / ts)
    A = np.stack(cols, axis=1)
    out = np.full(grid.shape[0], INF)
    fin = np.all(np.isfinite(vals), axis=0)
    if fin.any():
        coef, *_ = np.linalg.lstsq(A, vals[:, fin], rcond=None)
        out[fin] = np.maximum(coef[0], 0.0)
    return out


def shape_check(slabs: dict, K: float, rate_fn: Callable[[np.ndarray], np.ndarray],
                tol: float = 0.05, noise: float = 0.02) -> CheckResult:
    """s(t) = sup over y in tK of |a_c(0,t,0,y)/t - I(y/t)| for each slab time.

    Passes when s is nonincreasing up to ``noise`` and s(t_max) <= ``tol``;
    ``measured`` is s(t_max) unless monotonicity fails, in which case it is
    reported as +inf.
    """
    ts = sorted(slabs)
    s = []
    for t in ts:
        slab = slabs[t]
        m = int(math.floor(K * t + 1e-9))
        ys = ct_grid(m, 1, slab.dim).astype(np.int64)
        a = _slab_passage(slab, ys) / t
        s.append(float(np.max(np.abs(a - rate_fn(ys / t)))))
    rises = [b - a for a, b in zip(s, s[1:])]
    monotone = all(r <= noise for r in rises)
    measured = s[-1] if monotone else INF
    return CheckResult("shape", measured, tol,
                       {"times": ts, "deviation": s, "max_rise": max(rises, default=0.0)})


def equicontinuity_check(slabs: dict, K: float, eps: float, tol: float = 0.2,
                         min_span: float = 2.0) -> CheckResult:
    """Empirical modulus of t^{-1} a_c(0,t,0,.) at scale eps t, and its fitted constant.

    ``C(t) = modulus(t) * |log eps|^{1/2}``; ``measured`` is the largest
    relative change of C between consecutive grid times. Times with
    ``eps t < min_span`` lattice steps are skipped: there the window holds
    one or two sites and the modulus is lattice noise.
    """
    ts = [t for t in sorted(slabs) if eps * t >= min_span - 1e-9]
    if not ts:
        raise ValueError("no grid time has eps * t >= min_span")
    L = math.sqrt(abs(math.log(eps)))
    mods = []
    for t in ts:
        slab = slabs[t]
        d = slab.dim
        m = int(math.floor(K * t + 1e-9))
        r = int(math.floor(eps * t + 1e-9))
        ys = ct_grid(m, 1, d).astype(np.int64)
        a = _slab_passage(slab, ys) / t
        box = a.reshape((2 * m + 1,) * d)
        best = 0.0
        for off in itertools.product(range(-r, r + 1), repeat=d):
            if math.hypot(*off) > eps * t + 1e-9 or not any(off):
                continue
            src = tuple(slice(max(0, -o), 2 * m + 1 - max(0, o)) for o in off)
            dst = tuple(slice(max(0, o), 2 * m + 1 - max(0, -o)) for o in off)
            diff = np.abs(box[dst] - box[src])
            diff = diff[np.isfinite(diff)]
            if diff.size:
                best = max(best, float(diff.max()))
        mods.append(best)
    consts = [m * L for m in mods]
    changes = [abs(b / a - 1) for a, b in zip(consts, consts[1:]) if a > 0]
    return CheckResult("equicontinuity", max(changes, default=0.0), tol,
                       {"times": ts, "modulus": mods, "fitted_C": consts})


def confinement_check(slab_or_table, M: float, t: float | int | None = None,
                      step: float = 0.05) -> CheckResult:
    """Smallest grid radius r with -(1/t) log P(|X_t|_inf / t > r) >= M.

    Accepts a continuous-time slab or a discrete passage table (with ``t``
    the kept time). Raises :class:`ResourceError` when the tail inside the
    box never gets that thin.
    """
    if M < 0:
        raise ValueError("M must be nonnegative")
    if isinstance(slab_or_table, CtKernelSlab):
        slab = slab_or_table
        t = slab.t
        pts = slab.points()
        w = slab.values.reshape(-1)
        extra = slab.deficit  # mass already outside the box counts as far away
    else:
        table = slab_or_table
        t = table.horizon if t is None else int(t)
        pts = table.points(t)
        w = np.exp(table.slab(t).reshape(-1))
        extra = 0.0
    speed = np.max(np.abs(pts), axis=1) / t
    if M == 0:
        return CheckResult("confinement", 0.0, INF, {"M": M, "t": t, "radius": 0.0})
    rmax = float(speed.max())
    k = 0
    while k * step <= rmax + step:
        r = k * step
        tail = float(w[speed > r + 1e-12].sum()) + extra
        rate = INF if tail <= 0 else -math.log(tail) / t
        if rate >= M:
            return CheckResult("confinement", r, INF, {"M": M, "t": t, "radius": r, "rate": rate})
        k += 1
    raise ResourceError(f"tail rate {M} not reached inside the box at t={t}; enlarge the box")


# ------------------------------------------------------------------ even times

@dataclass
class EvenTimeReport:
    x: tuple
    n: int                      # number of Y steps; X time is 2n
    i_even: float               # -(1/2n) log P(Y_n = y*)
    i_direct: float             # -(1/2n) log P(X_2n = nearest reachable to [2n x])
    difference: float
    offsets: dict               # g -> |offset difference|

    @property
    def max_offset(self) -> float:
        return max(self.offsets.values(), default=0.0)

    def to_dict(self) -> dict:
        return {"x": list(self.x), "n": self.n, "i_even": self.i_even, "i_direct": self.i_direct,
                "difference": self.difference,
                "offsets": {",".join(map(str, g)): v for g, v in self.offsets.items()}}


def offset_set(d: int) -> list[tuple[int, ...]]:
    """Offsets g = sum c_i e_i with c_i in {0, 1}."""
    return [tuple(c) for c in itertools.product((0, 1), repeat=d)]


def even_time_rate(field: EnvironmentField, x, n: int, offsets=None,
                   budget_mb: float = dp.DEFAULT_BUDGET_MB) -> EvenTimeReport:
    """Rate along even times through Y_m = h(X_2m), compared with the direct X value.

    Even offsets g move the Y target by h(g); odd offsets are compared at X
    time 2n+1 at h^{-1}(y*) + g.
    """
    rng = field.range
    if rng.kind != NEAREST_NEIGHBOR:
        raise ValueError("even-time reduction needs the nearest-neighbour range")
    d = rng.dim
    iso = even_lattice_iso(d)
    offsets = offset_set(d) if offsets is None else [tuple(map(int, g)) for g in offsets]
    y_star = truncate(2 * n * iso.h_real(np.asarray(x, dtype=float)))
    base_x = np.asarray(iso.h_inv(y_star))

    y_targets = [y_star]
    for g in offsets:
        if sum(g) % 2 == 0 and any(g):
            y_targets.append(tuple(np.add(y_star, iso.h(g))))
    ylp = dp.solve_points(dp.EvenTimeField(field), [n] * len(y_targets), y_targets, budget_mb)
    ymap = dict(zip(y_targets, ylp))

    direct = evaluation_point(rng, x, 2 * n)
    x_times, x_targets = [2 * n], [direct]
    for g in offsets:
        if sum(g) % 2 == 1:
            x_times.append(2 * n + 1)
            x_targets.append(tuple(base_x + np.asarray(g)))
    xlp = dp.solve_points(field, x_times, x_targets, budget_mb)

    i_even = -ymap[y_star] / (2 * n)
    i_direct = -xlp[0] / (2 * n)
    diffs = {}
    j = 1
    for g in offsets:
        if not any(g):
            diffs[g] = 0.0
        elif sum(g) % 2 == 0:
            diffs[g] = abs(ymap[y_star] - ymap[tuple(np.add(y_star, iso.h(g)))]) / (2 * n)
        else:
            diffs[g] = abs(ymap[y_star] / (2 * n) - xlp[j] / (2 * n + 1))
            j += 1
    return EvenTimeReport(tuple(map(float, x)), n, float(i_even), float(i_direct),
                          abs(float(i_even - i_direct)), diffs)
