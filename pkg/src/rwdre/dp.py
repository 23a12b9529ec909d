"""Exact quenched transition probabilities by forward dynamic programming.

``forward_solve`` propagates log pi_{0,m}(0, .) slab by slab in log space.
Each step runs two compiled passes over the active box:

1. per source cell y, ``buf[y, e] = log pi_m(y) + log omega_m(y, e)``
   (environment evaluated once per cell);
2. per destination cell, a max-shifted log-sum-exp over e of
   ``buf[y - e, e]`` in the fixed order of the jump range.

No cell reads another cell's partial result, so the output is bit-identical
for any number of threads. Unreachable cells hold ``-inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from . import _numba_setup  # noqa: F401
import numpy as np
from numba import njit, prange

from .environment import EnvironmentField, fill_probs, flip_step, occupancy_point
from . import _rng
from .errors import ResourceError
from .lattice import JumpRange, even_lattice_iso, reachable

NEG_INF = -np.inf
_CHUNK = 512
DEFAULT_BUDGET_MB = 2048


@njit(cache=True)
def _decode_row(row, rad, d, B, W, x):
    """Leading d-1 coordinates of ``row`` (into ``x``) and the flat index of its cell 0."""
    side = 2 * rad + 1
    r = row
    for i in range(d - 2, -1, -1):
        x[i] = r % side - rad
        r //= side
    flat = 0
    for i in range(d - 1):
        flat = (flat + x[i] + B) * W
    return flat + B


@njit(cache=True, parallel=True)
def _source_pass(prev, buf, occ, ext, pext, rad, d, B, W, model, seed, kappa, scale, table,
                 logtable, t_abs, z0):
    """Fill ``buf`` over the finite cells of ``prev`` and record per-row extents.

    ``ext[row] = (lo, hi)`` are the extreme last coordinates with a finite
    value (lo > hi for an empty row); cells outside are never read. Rows are
    scanned only where ``pext``, the extents of the row neighbourhood one
    step earlier, says finite values can occur.
    """
    nrow = (2 * rad + 1) ** (d - 1)
    k = buf.shape[1]
    for row in prange(nrow):
        x = np.empty(d, dtype=np.int64)
        xa = np.empty(d, dtype=np.int64)
        p = np.empty(k)
        base = _decode_row(row, rad, d, B, W, x)
        lo, hi = rad + 1, -rad - 1
        for c in range(max(-rad, pext[row, 0]), min(rad, pext[row, 1]) + 1):
            flat = base + c
            lp = prev[flat]
            if lp == -np.inf:
                continue
            if c < lo:
                lo = c
            hi = c
            if model == 1:
                x[d - 1] = c
                for i in range(d):
                    xa[i] = x[i] + z0[i]
                key = _rng.cell_key(seed, _rng.STREAM_PROBS, t_abs, xa)
                tot = 0.0
                for e in range(k):
                    w = -math.log(_rng.uniform(key, e))
                    p[e] = w
                    tot += w
                for e in range(k):
                    buf[flat, e] = lp + math.log(kappa + scale * (p[e] / tot))
            else:
                o = occ[flat] if model == 2 else 0
                for e in range(k):
                    buf[flat, e] = lp + logtable[o, e]
        ext[row, 0] = lo
        ext[row, 1] = hi


@njit(cache=True, parallel=True)
def _composite_source_pass(prev, buf, ext, pext, rad, d, B, W, model, seed, kappa, scale,
                           table, rho, q, xsteps, basis, qidx, t_abs, z0):
    """Source pass for Y_m = h(X_{2m}): two X steps folded into one Y step.

    Cell y sits at X site ``basis @ y``; the composite weight of Y step
    ``qidx[e1, e2]`` sums omega_{2m}(x, e1) * omega_{2m+1}(x + e1, e2).
    """
    nrow = (2 * rad + 1) ** (d - 1)
    k = xsteps.shape[0]
    kq = buf.shape[1]
    for row in prange(nrow):
        y = np.empty(d, dtype=np.int64)
        xa = np.empty(d, dtype=np.int64)
        xb = np.empty(d, dtype=np.int64)
        p1 = np.empty(k)
        p2 = np.empty(k)
        comp = np.empty(kq)
        base = _decode_row(row, rad, d, B, W, y)
        lo, hi = rad + 1, -rad - 1
        for c in range(max(-rad, pext[row, 0]), min(rad, pext[row, 1]) + 1):
            flat = base + c
            lp = prev[flat]
            if lp == -np.inf:
                continue
            if c < lo:
                lo = c
            hi = c
            y[d - 1] = c
            for i in range(d):
                acc = z0[i]
                for j in range(d):
                    acc += basis[i, j] * y[j]
                xa[i] = acc
            occ = occupancy_point(seed, rho, q, 2 * t_abs, xa) if model == 2 else 0
            fill_probs(model, seed, kappa, scale, table, 2 * t_abs, xa, occ, p1)
            for j in range(kq):
                comp[j] = 0.0
            for e1 in range(k):
                for i in range(d):
                    xb[i] = xa[i] + xsteps[e1, i]
                occ = occupancy_point(seed, rho, q, 2 * t_abs + 1, xb) if model == 2 else 0
                fill_probs(model, seed, kappa, scale, table, 2 * t_abs + 1, xb, occ, p2)
                for e2 in range(k):
                    comp[qidx[e1, e2]] += p1[e1] * p2[e2]
            for j in range(kq):
                buf[flat, j] = lp + math.log(comp[j])
        ext[row, 0] = lo
        ext[row, 1] = hi


@njit(cache=True)
def _scan_bounds(ext, pext, rad_old, rad, d, r):
    """Upper bounds for the extents at radius ``rad`` from the extents at ``rad_old``.

    Any finite cell in row ``x`` comes from a row within l-infinity distance
    ``r`` of ``x`` whose extent, widened by ``r``, covers it.
    """
    side = 2 * rad + 1
    side_old = 2 * rad_old + 1
    nrow = side ** (d - 1)
    x = np.empty(max(d - 1, 1), dtype=np.int64)
    for row in range(nrow):
        rr = row
        for i in range(d - 2, -1, -1):
            x[i] = rr % side - rad
            rr //= side
        lo, hi = rad + 1, -rad - 1
        nb = (2 * r + 1) ** (d - 1)
        for j in range(nb):
            jj = j
            srow = 0
            ok = True
            for i in range(d - 2, -1, -1):
                off = jj % (2 * r + 1) - r
                jj //= 2 * r + 1
                s = x[i] + off
                if s < -rad_old or s > rad_old:
                    ok = False
                srow += (s + rad_old) * side_old ** (d - 2 - i)
            if ok and ext[srow, 0] <= ext[srow, 1]:
                if ext[srow, 0] - r < lo:
                    lo = ext[srow, 0] - r
                if ext[srow, 1] + r > hi:
                    hi = ext[srow, 1] + r
        pext[row, 0] = lo
        pext[row, 1] = hi


@njit(cache=True, parallel=True)
def _dest_pass(prev, buf, new, ext, rad_src, rad, d, B, W, steps, step_flat):
    """Log-sum-exp over steps into ``new`` for the radius-``rad`` box."""
    nrow = (2 * rad + 1) ** (d - 1)
    k = steps.shape[0]
    side_src = 2 * rad_src + 1
    for row in prange(nrow):
        x = np.empty(d, dtype=np.int64)
        vals = np.empty(k)
        slo = np.empty(k, dtype=np.int64)
        shi = np.empty(k, dtype=np.int64)
        base = _decode_row(row, rad, d, B, W, x)
        lo, hi = rad + 1, -rad - 1
        for e in range(k):
            srow = 0
            ok = True
            for i in range(d - 1):
                s = x[i] - steps[e, i]
                if s < -rad_src or s > rad_src:
                    ok = False
                    break
                srow = srow * side_src + (s + rad_src)
            if ok and ext[srow, 0] <= ext[srow, 1]:
                slo[e] = ext[srow, 0] + steps[e, d - 1]
                shi[e] = ext[srow, 1] + steps[e, d - 1]
                if slo[e] < lo:
                    lo = slo[e]
                if shi[e] > hi:
                    hi = shi[e]
            else:
                slo[e] = 1
                shi[e] = 0
        for c in range(-rad, rad + 1):
            flat = base + c
            if c < lo or c > hi:
                new[flat] = -np.inf
                continue
            mx = -np.inf
            for e in range(k):
                v = -np.inf
                if slo[e] <= c and c <= shi[e]:
                    src = flat - step_flat[e]
                    if prev[src] != -np.inf:
                        v = buf[src, e]
                vals[e] = v
                if v > mx:
                    mx = v
            if mx == -np.inf:
                new[flat] = -np.inf
                continue
            acc = 0.0
            for e in range(k):
                acc += math.exp(vals[e] - mx)
            new[flat] = mx + math.log(acc)


@njit(cache=True)
def _decode(j, rad, d, B, W, x):
    """Coordinates (into ``x``) and flat index of cell ``j`` of the radius-``rad`` sub-box."""
    side = 2 * rad + 1
    r = j
    for i in range(d - 1, -1, -1):
        x[i] = r % side - rad
        r //= side
    flat = 0
    for i in range(d):
        flat = flat * W + x[i] + B
    return flat


@njit(cache=True, parallel=True)
def _advance_occupancy(occ, rad_old, rad, d, B, W, seed, rho, q, t_abs, z0):
    """Move ``occ`` from time ``t_abs - 1`` (valid within ``rad_old``) to ``t_abs`` within ``rad``.

    ``rad_old < 0`` means nothing is valid yet.
    """
    ncell = (2 * rad + 1) ** d
    nchunk = (ncell + _CHUNK - 1) // _CHUNK
    for c in prange(nchunk):
        x = np.empty(d, dtype=np.int64)
        xa = np.empty(d, dtype=np.int64)
        for j in range(c * _CHUNK, min(ncell, (c + 1) * _CHUNK)):
            flat = _decode(j, rad, d, B, W, x)
            old = rad_old >= 0
            for i in range(d):
                xa[i] = x[i] + z0[i]
                if x[i] < -rad_old or x[i] > rad_old:
                    old = False
            if old:
                if q > 0.0:
                    occ[flat] = flip_step(seed, rho, q, t_abs - 1, xa, occ[flat])
            else:
                occ[flat] = occupancy_point(seed, rho, q, t_abs, xa)


@njit(cache=True)
def _cone_bounds(pext, rad, d, fac_p, fac_q, targets, ttimes, m):
    """Intersect row scan bounds with the union over targets of t - remaining*U.

    Only cells that can still reach some target are propagated. The union is
    replaced by its per-row interval hull, a superset, so target values stay exact.
    """
    side = 2 * rad + 1
    nrow = side ** (d - 1)
    x = np.empty(max(d - 1, 1), dtype=np.int64)
    big = 1 << 60
    for row in range(nrow):
        rr = row
        for i in range(d - 2, -1, -1):
            x[i] = rr % side - rad
            rr //= side
        ulo, uhi = big, -big
        for t in range(targets.shape[0]):
            remaining = ttimes[t] - m
            if remaining < 0:
                continue
            lo, hi = -big, big
            for j in range(fac_p.shape[0]):
                rhs = fac_q[j] * remaining
                for i in range(d):
                    rhs -= fac_p[j, i] * targets[t, i]
                for i in range(d - 1):
                    rhs += fac_p[j, i] * x[i]
                a = fac_p[j, d - 1]
                if a > 0:
                    # -a c <= rhs  <=>  c >= ceil(-rhs / a)
                    b = -((rhs) // a)
                    if b > lo:
                        lo = b
                elif a < 0:
                    b = rhs // (-a)
                    if b < hi:
                        hi = b
                elif rhs < 0:
                    lo, hi = 1, 0
            if lo <= hi:
                if lo < ulo:
                    ulo = lo
                if hi > uhi:
                    uhi = hi
        if ulo > pext[row, 0]:
            pext[row, 0] = ulo
        if uhi < pext[row, 1]:
            pext[row, 1] = uhi


@dataclass
class PassageTable:
    """Log-probabilities log pi_{0,m}(0, y) for the kept times m.

    ``slabs[m]`` is a d-dimensional array over the box of radius
    ``m * r_max`` centred at the origin; ``-inf`` marks unreachable cells.
    """

    range: JumpRange
    horizon: int
    kappa: float
    slabs: dict[int, np.ndarray] = field(default_factory=dict)

    def radius(self, m: int) -> int:
        return m * self.range.r_max

    def slab(self, m: int) -> np.ndarray:
        if m not in self.slabs:
            raise KeyError(f"slab {m} was not kept (kept: {sorted(self.slabs)[:8]}...)")
        return self.slabs[m]

    def log_pi(self, m: int, y: Sequence[int]) -> float:
        if m > self.horizon or m < 0:
            raise ValueError(f"time {m} outside [0, {self.horizon}]")
        s = self.slab(m)
        r = self.radius(m)
        if any(abs(int(v)) > r for v in y):
            return NEG_INF
        return float(s[tuple(int(v) + r for v in y)])

    def points(self, m: int) -> np.ndarray:
        """Integer coordinates of every cell of slab ``m``, shape (cells, d)."""
        r = self.radius(m)
        d = self.range.dim
        axes = [np.arange(-r, r + 1)] * d
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)

    def rows(self, times: Iterable[int] | None = None) -> list[tuple]:
        """CSV rows ``(m, y_1..y_d, log_pi)`` over reachable cells."""
        out = []
        for m in sorted(self.slabs) if times is None else times:
            vals = self.slab(m).reshape(-1)
            for y, v in zip(self.points(m), vals):
                if v != NEG_INF:
                    out.append((m, *(int(c) for c in y), float(v)))
        return out

    def save(self, path) -> None:
        arrays = {f"slab_{m}": s for m, s in self.slabs.items()}
        np.savez(path, horizon=self.horizon, kappa=self.kappa,
                 steps=self.range.array, kind=self.range.kind, **arrays)

    @classmethod
    def load(cls, path) -> "PassageTable":
        with np.load(path, allow_pickle=False) as z:
            rng = JumpRange(tuple(map(tuple, z["steps"].tolist())), str(z["kind"]))
            slabs = {int(k[5:]): z[k] for k in z.files if k.startswith("slab_")}
            return cls(rng, int(z["horizon"]), float(z["kappa"]), slabs)


class EvenTimeField:
    """The nearest-neighbour walk sampled at even times and mapped by h.

    ``Y_m = h(X_{2m})`` is a walk with range h(R_2) whose step law at
    (m, y) is the two-step law of X from (2m, h^{-1} y). Usable wherever
    the solvers accept an :class:`EnvironmentField`.
    """

    def __init__(self, base: EnvironmentField):
        if base.range.kind != "nearest-neighbor":
            raise ValueError("the even-time reduction needs the nearest-neighbour range")
        self.base = base
        self.iso = even_lattice_iso(base.dim)
        self.range = self.iso.transformed_range()
        xs = base.range.steps
        self.qidx = np.array([[self.range.index(self.iso.h(np.add(a, b))) for b in xs]
                              for a in xs], dtype=np.int64)
        if base.time_offset % 2:
            raise ValueError("the base field must start at an even time")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def kappa(self) -> float:
        return self.base.kappa ** 2

    @property
    def kernel_params(self):
        return self.base.kernel_params

    @property
    def site_offset(self) -> np.ndarray:
        return self.base.site_offset

    @property
    def time_offset(self) -> int:
        return self.base.time_offset // 2


def memory_estimate(rng: JumpRange, n: int, kept: int = 1) -> int:
    """Bytes of working storage for a horizon-``n`` solve keeping ``kept`` slabs."""
    W = 2 * n * rng.r_max + 1
    cells = W ** rng.dim
    return cells * (8 * (rng.size + 2) + 1) + kept * 8 * cells


def forward_solve(field: EnvironmentField, n: int, keep="all",
                  budget_mb: float = DEFAULT_BUDGET_MB) -> PassageTable:
    """Quenched log-probabilities from (0, 0) up to time ``n``.

    ``keep`` is ``"all"``, ``"last"`` or an iterable of times whose slabs
    are retained; other slabs live only in a two-slab rolling buffer.
    """
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    if keep == "all":
        keep_set = set(range(n + 1))
    elif keep == "last":
        keep_set = {n}
    else:
        keep_set = {int(m) for m in keep}
        if any(m < 0 or m > n for m in keep_set):
            raise ValueError("kept times must lie in [0, n]")
    out = PassageTable(field.range, n, float(field.kappa))
    _propagate(field, n, keep_set, out.slabs, None, budget_mb)
    return out


def solve_targets(field: EnvironmentField, n: int, targets,
                  budget_mb: float = DEFAULT_BUDGET_MB) -> np.ndarray:
    """log pi_{0,n}(0, y) for each row of ``targets`` (shape (T, d)).

    Only the backward light cone of the targets is propagated, which is
    exact for the targets and several times cheaper than full slabs.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    return solve_points(field, np.full(len(targets), n), targets, budget_mb)


def solve_points(field: EnvironmentField, times, targets,
                 budget_mb: float = DEFAULT_BUDGET_MB) -> np.ndarray:
    """log pi_{0,m}(0, y) for time-space points (times[i], targets[i])."""
    rng = field.range
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    times = np.asarray(times, dtype=np.int64).reshape(-1)
    if targets.shape[1] != rng.dim or len(times) != len(targets):
        raise ValueError("dimension mismatch")
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    if not rng.is_convex and rng.kind != "nearest-neighbor":
        raise ValueError("light-cone pruning needs a range with a hull")
    slabs: dict[int, np.ndarray] = {}
    n = int(times.max())
    _propagate(field, n, set(times.tolist()), slabs, (targets, times), budget_mb)
    out = PassageTable(rng, n, float(field.kappa), slabs)
    return np.array([out.log_pi(int(m), y) for m, y in zip(times, targets)])


def _propagate(field, n, keep_set, slabs, targets, budget_mb):
    rng = field.range
    d = rng.dim
    r = rng.r_max
    kept_bytes = sum(8 * (2 * m * r + 1) ** d for m in keep_set)
    need = memory_estimate(rng, n, 0) + kept_bytes
    if need > budget_mb * 2 ** 20:
        raise ResourceError(
            f"horizon {n} in d={d} needs about {need / 2 ** 20:.0f} MB, budget is "
            f"{budget_mb:.0f} MB; raise the budget or keep fewer slabs")

    B = n * r
    W = 2 * B + 1
    ncell = W ** d
    steps = rng.array
    strides = np.array([W ** (d - 1 - i) for i in range(d)], dtype=np.int64)
    step_flat = steps @ strides
    prev = np.full(ncell, NEG_INF)
    new = np.full(ncell, NEG_INF)
    buf = np.empty((ncell, rng.size))
    ext = np.empty(((2 * B + 1) ** (d - 1), 2), dtype=np.int64)
    pext = np.empty_like(ext)
    pext[0] = (0, 0)
    occ = np.zeros(ncell, dtype=np.uint8)
    origin = int(B * strides.sum())
    prev[origin] = 0.0
    model, seed, kappa, scale, table, rho, q = field.kernel_params
    with np.errstate(divide="ignore"):
        logtable = np.log(table)
    z0 = field.site_offset.astype(np.int64)
    t0 = field.time_offset
    composite = isinstance(field, EvenTimeField)
    spin = model == 2 and not composite
    if targets is not None:
        fac_p, fac_q = rng.hull.integer_facets

    def keep_slab(m, arr):
        rad = m * r
        full = arr.reshape((W,) * d)
        sl = tuple(slice(B - rad, B + rad + 1) for _ in range(d))
        slabs[m] = full[sl].copy()

    if 0 in keep_set:
        keep_slab(0, prev)
    for m in range(n):
        rad_src, rad = m * r, (m + 1) * r
        if spin:
            _advance_occupancy(occ, rad_src - r if m > 0 else -1, rad_src, d, B, W,
                               seed, rho, q, t0 + m, z0)
        if m > 0:
            _scan_bounds(ext, pext, rad_src - r, rad_src, d, r)
        if targets is not None:
            _cone_bounds(pext, rad_src, d, fac_p, fac_q, targets[0], targets[1], m)
        if composite:
            _composite_source_pass(prev, buf, ext, pext, rad_src, d, B, W, model, seed, kappa,
                                   scale, table, rho, q, field.base.range.array,
                                   field.iso.basis, field.qidx, t0 + m, z0)
        else:
            _source_pass(prev, buf, occ, ext, pext, rad_src, d, B, W, model, seed, kappa, scale,
                         table, logtable, t0 + m, z0)
        _dest_pass(prev, buf, new, ext, rad_src, rad, d, B, W, steps, step_flat)
        prev, new = new, prev
        if m + 1 in keep_set:
            keep_slab(m + 1, prev)


def passage(table: PassageTable, m: int, y: Sequence[int]) -> float:
    """a_d(0, m, 0, y) = -log pi_{0,m}(0, y); ``inf`` when y is not in R_m."""
    return -table.log_pi(m, y)


def passage_between(field: EnvironmentField, p: int, m: int, z: Sequence[int],
                    y: Sequence[int]) -> float:
    """a_d(p, m, z, y) computed from the shifted field."""
    t = forward_solve(field.shift(p, z), m - p, keep="last")
    return passage(t, m - p, np.asarray(y) - np.asarray(z))


class SubadditivityReport(NamedTuple):
    max_violation: float
    trials: int
    worst: tuple


def check_subadditivity(field: EnvironmentField, n: int, trials: int, seed: int = 0
                        ) -> SubadditivityReport:
    """Largest a(0,m,0,y) - a(0,p,0,z) - a(p,m,z,y) over random admissible triples."""
    rng = field.range
    gen = np.random.default_rng(seed)
    base = forward_solve(field, n, keep="all")
    support = {m: np.argwhere(np.isfinite(base.slab(m))) - m * rng.r_max for m in range(n + 1)}
    shifted: dict[tuple, PassageTable] = {}
    worst, worst_t = -np.inf, ()
    for _ in range(trials):
        m = int(gen.integers(0, n + 1))
        p = int(gen.integers(0, m + 1))
        z = tuple(int(v) for v in support[p][gen.integers(len(support[p]))])
        # y = z + (a point of R_{m-p}) keeps y - z admissible
        w = support[m - p][gen.integers(len(support[m - p]))]
        y = tuple(int(a + b) for a, b in zip(z, w))
        key = (p, z)
        if key not in shifted:
            shifted[key] = forward_solve(field.shift(p, z), n - p, keep="all")
        a_full = passage(base, m, y)
        a_first = passage(base, p, z)
        a_second = passage(shifted[key], m - p, tuple(int(v) for v in w))
        v = a_full - a_first - a_second
        if v > worst:
            worst, worst_t = v, (p, m, z, y)
    return SubadditivityReport(float(worst), trials, worst_t)


@dataclass(frozen=True)
class AdmissiblePath:
    start_time: int
    start: tuple[int, ...]
    steps: tuple[tuple[int, ...], ...]

    @property
    def end(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.sum([self.start, *self.steps], axis=0))

    @property
    def end_time(self) -> int:
        return self.start_time + len(self.steps)


class Admissibility(NamedTuple):
    admissible: bool
    log_prob: float
    log_bound: float  # k * log(kappa)


def is_admissible(path: AdmissiblePath, field: EnvironmentField) -> Admissibility:
    """Product of step probabilities along ``path`` (in log space) and its kappa^k floor."""
    rng = field.range
    k = len(path.steps)
    log_bound = k * math.log(field.kappa)
    if any(tuple(s) not in rng.steps for s in path.steps):
        return Admissibility(False, NEG_INF, log_bound)
    if k == 0:
        return Admissibility(True, 0.0, 0.0)
    sites = np.cumsum([path.start, *path.steps[:-1]], axis=0)
    times = path.start_time + np.arange(k)
    probs = field.env_many(times, sites)
    idx = [rng.index(s) for s in path.steps]
    lp = float(np.sum(np.log(probs[np.arange(k), idx])))
    return Admissibility(True, lp, log_bound)


def event_prob(table: PassageTable, n: int, region) -> float:
    """P(X_n / n in region), summed over slab ``n`` in log space."""
    lp = log_event_prob(table, n, region)
    return math.exp(lp)


def log_event_prob(table: PassageTable, n: int, region) -> float:
    vals = table.slab(n).reshape(-1)
    pts = table.points(n)
    scaled = pts / n if n > 0 else pts.astype(float)
    sel = region.contains(scaled) & np.isfinite(vals)
    if not sel.any():
        return NEG_INF
    v = vals[sel]
    mx = v.max()
    return float(mx + math.log(np.exp(v - mx).sum()))


def nearest_reachable(rng: JumpRange, n: int, target: Sequence[int]) -> tuple[int, ...] | None:
    """Point of R_n nearest to ``target`` in l-infinity, ties broken lexicographically.

    Only points within l-infinity distance 1 are considered; ``None`` if none is reachable.
    """
    import itertools
    target = tuple(int(v) for v in target)
    if reachable(rng, target, n):
        return target
    cands = []
    for off in itertools.product((-1, 0, 1), repeat=rng.dim):
        y = tuple(a + b for a, b in zip(target, off))
        if reachable(rng, y, n):
            cands.append(y)
    return min(cands) if cands else None
