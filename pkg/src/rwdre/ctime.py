"""Continuous-time kernels e(s, t, x, y) in piecewise-constant rate environments.

Three routes to the same object:

* :func:`uniformize` solves the forward equation exactly on each piece by
  uniformisation at the constant rate ``2 d kappa2`` and chains pieces;
* :func:`fk_estimate` samples a rate-1 simple random walk and reweights
  each trajectory by the change-of-measure density towards the environment;
* :func:`srw_kernel` gives the closed form for the simple symmetric walk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from . import _numba_setup  # noqa: F401
import numpy as np
from numba import njit

from . import _rng
from .environment import RateField, fill_probs, occupancy_point
from .errors import ResourceError

TAIL_TOL = 1e-14
STREAM_FK = 11


@dataclass
class CtKernelSlab:
    """Values e(0, t, 0, y) on the box |y|_inf <= radius.

    Mass that left the box is recorded in ``boundary_deficit``; mass lost to
    truncating the uniformisation series in ``truncation_deficit``.
    """

    t: float
    radius: int
    values: np.ndarray
    boundary_deficit: float = 0.0
    truncation_deficit: float = 0.0

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def mass(self) -> float:
        return float(self.values.sum())

    @property
    def deficit(self) -> float:
        return self.boundary_deficit + self.truncation_deficit

    def value(self, y: Sequence[int]) -> float:
        if any(abs(int(v)) > self.radius for v in y):
            return 0.0
        return float(self.values[tuple(int(v) + self.radius for v in y)])

    def passage(self, y: Sequence[int]) -> float:
        """a_c(0, t, 0, y) = -log e(0, t, 0, y)."""
        v = self.value(y)
        return math.inf if v <= 0 else -math.log(v)

    def points(self) -> np.ndarray:
        r, d = self.radius, self.dim
        axes = [np.arange(-r, r + 1)] * d
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)

    def rows(self) -> list[tuple]:
        """CSV rows ``(t, y_1..y_d, e)`` over cells with positive mass."""
        flat = self.values.reshape(-1)
        return [(self.t, *(int(c) for c in y), float(v))
                for y, v in zip(self.points(), flat) if v > 0]


def default_radius(field: RateField, t: float) -> int:
    """ceil(4 d kappa2 t) + 10, enough for a negligible Poisson tail."""
    return int(math.ceil(4 * field.dim * field.spec.kappa2 * t)) + 10


def _apply_jump(v: np.ndarray, rates: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """One step of the uniformised chain with killing outside the box.

    Returns the new vector and the mass that left the box.
    """
    d = v.ndim
    out = v * (1.0 - rates.sum(axis=-1) / lam)
    lost = 0.0
    for e in range(2 * d):
        axis, sgn = e // 2, (1 if e % 2 == 0 else -1)
        flow = v * rates[..., e] / lam
        src = [slice(None)] * d
        dst = [slice(None)] * d
        edge = [slice(None)] * d
        if sgn > 0:
            src[axis], dst[axis], edge[axis] = slice(0, -1), slice(1, None), slice(-1, None)
        else:
            src[axis], dst[axis], edge[axis] = slice(1, None), slice(0, -1), slice(0, 1)
        out[tuple(dst)] += flow[tuple(src)]
        lost += float(flow[tuple(edge)].sum())
    return out, lost


def _poisson_weights(mu: float, tail: float = TAIL_TOL) -> np.ndarray:
    """Poisson(mu) point masses up to the first index whose tail is below ``tail``.

    Past the mode the tail after index j is at most w_j mu / (j + 1 - mu),
    which stays meaningful below double-precision epsilon.
    """
    if mu == 0:
        return np.array([1.0])
    # log-space start avoids underflow of exp(-mu) for large mu
    w = [math.exp(-mu)] if mu < 700 else None
    if w is None:
        raise ResourceError(f"uniformisation piece too long (Lambda*tau = {mu}); shorten delta")
    acc = w[0]
    j = 0
    while j < mu or 1.0 - acc > tail or w[-1] * mu / (j + 1 - mu) > tail:
        j += 1
        w.append(w[-1] * mu / j)
        acc += w[-1]
        if j > 10 * mu + 2000:
            break
    return np.array(w)


def _site_grid(radius: int, d: int) -> np.ndarray:
    axes = [np.arange(-radius, radius + 1)] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def uniformize(field: RateField, t: float, radius: int | None = None,
               record: Iterable[float] = (), max_deficit: float = 1e-12,
               auto_grow: bool = True, max_radius: int = 100_000,
               tail_tol: float = TAIL_TOL):
    """Kernel e(0, t, 0, .) on a box, exact per piece up to series truncation.

    Returns the slab at ``t``; if ``record`` is given, returns
    ``(slab, {time: slab})`` with slabs at those intermediate times too.
    The box radius doubles until the boundary deficit is below
    ``max_deficit``; with ``auto_grow=False`` a :class:`ResourceError`
    carrying a suggested radius is raised instead. Lowering ``tail_tol``
    keeps more series terms, which is what far cells need for small
    relative error.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    rec = sorted({float(s) for s in record if 0 < s <= t})
    radius = default_radius(field, t) if radius is None else int(radius)
    while True:
        final, slabs = _uniformize_box(field, t, radius, rec, tail_tol)
        if final.boundary_deficit <= max_deficit:
            break
        if not auto_grow or 2 * radius > max_radius:
            raise ResourceError(
                f"box radius {radius} loses {final.boundary_deficit:.3g} mass at t={t}; "
                f"try radius={2 * radius}")
        radius *= 2
    return (final, slabs) if record else final


def _uniformize_box(field: RateField, t: float, radius: int, rec: list[float],
                    tail_tol: float = TAIL_TOL):
    d = field.dim
    lam = field.total_rate_bound
    delta = field.spec.delta
    sites = _site_grid(radius, d)
    shape = (2 * radius + 1,) * d
    v = np.zeros(shape)
    v[(radius,) * d] = 1.0
    boundary = trunc = 0.0
    # breakpoints: piece boundaries and recorded times
    cuts = set(rec) | {t}
    k = 1
    while k * delta < t:
        cuts.add(k * delta)
        k += 1
    cuts = sorted(cuts)
    out = {}
    s = 0.0
    rates_cache: tuple[int, np.ndarray] | None = None
    for c in cuts:
        tau = c - s
        if tau > 0:
            piece = int(math.floor((s + 1e-12 * max(1.0, s)) / delta))
            if rates_cache is None or rates_cache[0] != piece:
                rates_cache = (piece, field.rates_piece(piece, sites).reshape(*shape, 2 * d))
            rates = rates_cache[1]
            w = _poisson_weights(lam * tau, tail_tol)
            m0 = v.sum()
            acc = w[0] * v
            cur = v
            for j in range(1, len(w)):
                cur, _ = _apply_jump(cur, rates, lam)
                acc += w[j] * cur
            new_mass = acc.sum()
            piece_trunc = (1.0 - w.sum()) * m0
            trunc += piece_trunc
            boundary += m0 - new_mass - piece_trunc
            v = acc
            s = c
        if c in rec:
            out[c] = CtKernelSlab(c, radius, v.copy(), boundary, trunc)
    return CtKernelSlab(t, radius, v, boundary, trunc), out


# ---------------------------------------------------------------- Feynman-Kac

@njit(cache=True)
def _ct_rates(cmodel, seed, kappa, scale, table, rho, q, k1, k2, emb, hom_rates, piece, x, p, out):
    """Rates on ``piece`` at site ``x`` (same construction as RateField.rates_piece)."""
    n = out.shape[0]
    if cmodel == 0:
        for e in range(n):
            out[e] = hom_rates[e]
        return
    occ = 0
    if cmodel == 2:
        occ = occupancy_point(seed, rho, q, piece, x)
    fill_probs(cmodel, seed, kappa, scale, table, piece, x, occ, p)
    for e in range(n):
        out[e] = k1 + (k2 - k1) * (p[e] - kappa) / emb


@njit(cache=True)
def _fk_kernel(nsamp, sample0, fk_seed, t, delta, d, targets, cmodel, seed, kappa, scale,
               table, rho, q, k1, k2, emb, hom_rates, piece0, z0, wsum, wsq, jumps):
    """Accumulate per-target weight sums over samples [sample0, sample0 + nsamp)."""
    ntar = targets.shape[0]
    ndir = 2 * d
    y = np.empty(d, dtype=np.int64)
    xa = np.empty(d, dtype=np.int64)
    p = np.empty(ndir)
    rates = np.empty(ndir)
    sidx = np.zeros(1, dtype=np.int64)
    for i in range(nsamp):
        sidx[0] = sample0 + i
        key = _rng.cell_key(fk_seed, STREAM_FK, 0, sidx)
        draw = 0
        for a in range(d):
            y[a] = 0
        s = 0.0
        logw = 0.0
        njump = 0
        while True:
            hold = -math.log(_rng.uniform(key, draw))
            draw += 1
            t_next = s + hold
            end = t_next if t_next < t else t
            # integrate -(omega(G) - 1) over [s, end), split at piece boundaries
            u = s
            while u < end:
                piece = int(math.floor(u / delta))
                b = (piece + 1) * delta
                if b > end:
                    b = end
                for a in range(d):
                    xa[a] = y[a] + z0[a]
                _ct_rates(cmodel, seed, kappa, scale, table, rho, q, k1, k2, emb, hom_rates,
                          piece + piece0, xa, p, rates)
                tot = 0.0
                for e in range(ndir):
                    tot += rates[e]
                logw -= (tot - 1.0) * (b - u)
                u = b
            if t_next >= t:
                break
            e = int(_rng.uniform(key, draw) * ndir)
            draw += 1
            if e >= ndir:
                e = ndir - 1
            piece = int(math.floor(t_next / delta))
            for a in range(d):
                xa[a] = y[a] + z0[a]
            _ct_rates(cmodel, seed, kappa, scale, table, rho, q, k1, k2, emb, hom_rates,
                      piece + piece0, xa, p, rates)
            logw += math.log(ndir * rates[e])
            axis = e // 2
            y[axis] += 1 if e % 2 == 0 else -1
            njump += 1
            s = t_next
        jumps[0] += njump
        jumps[1] += njump * njump
        w = math.exp(logw)
        for j in range(ntar):
            hit = True
            for a in range(d):
                if y[a] != targets[j, a]:
                    hit = False
                    break
            if hit:
                wsum[j] += w
                wsq[j] += w * w


class FkEstimate(NamedTuple):
    t: float
    y: tuple
    samples: int
    mean: float
    stderr: float
    seed: int
    mean_jumps: float
    var_jumps: float

    def to_dict(self) -> dict:
        return {"t": self.t, "y": list(self.y), "samples": self.samples, "mean": self.mean,
                "stderr": self.stderr, "seed": self.seed}


FK_CHUNK = 8192


def _fk_params(field: RateField):
    s = field.spec
    cmodel = {"homogeneous": 0, "iid-time-space": 1, "spin-flip": 2}[s.model]
    if field._disc is not None:
        model, seed, kappa, scale, table, rho, q = field._disc.kernel_params
    else:
        seed, kappa, scale, table, rho, q = np.uint64(0), 0.0, 1.0, np.zeros((2, 2 * s.dim)), 0.0, 0.0
    hom = np.asarray(s.rates if s.rates is not None else np.zeros(2 * s.dim), dtype=float)
    emb = 1.0 - 2 * s.dim * float(s.kappa)
    return cmodel, seed, kappa, scale, table, rho, q, float(s.kappa1), float(s.kappa2), emb, hom


def fk_estimate(field: RateField, t: float, targets, samples: int, seed: int = 0
                ) -> list[FkEstimate]:
    """Monte Carlo estimates of e(0, t, 0, y) for each target y.

    Trajectories of a rate-1 simple symmetric walk are weighted by
    ``exp(sum over jumps of log(2d * omega(Y_-, jump)) - integral of (omega(Y, G) - 1))``.
    Sample ``i`` draws its randomness from a counter-based stream keyed by
    ``(seed, i)``, so results do not depend on chunking or thread count.
    """
    if t <= 0 or samples < 1:
        raise ValueError("need t > 0 and samples >= 1")
    d = field.dim
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    if targets.shape[1] != d:
        raise ValueError("dimension mismatch")
    params = _fk_params(field)
    wsum = np.zeros(len(targets))
    wsq = np.zeros(len(targets))
    jumps = np.zeros(2)
    fk_seed = np.uint64(_rng.seed64(seed))
    # pooled exactly: chunk partial sums are added in a fixed order
    for start in range(0, samples, FK_CHUNK):
        n = min(FK_CHUNK, samples - start)
        cs, cq, cj = np.zeros_like(wsum), np.zeros_like(wsq), np.zeros(2)
        _fk_kernel(n, start, fk_seed, float(t), float(field.spec.delta), d, targets, *params,
                   field.piece_offset, field.site_offset, cs, cq, cj)
        wsum += cs
        wsq += cq
        jumps += cj
    out = []
    for j, y in enumerate(targets):
        mean = wsum[j] / samples
        var = (wsq[j] - samples * mean ** 2) / (samples - 1) if samples > 1 else 0.0
        se = math.sqrt(max(var, 0.0) / samples)
        mj = jumps[0] / samples
        out.append(FkEstimate(float(t), tuple(int(v) for v in y), samples, float(mean), se,
                              int(seed), mj, jumps[1] / samples - mj ** 2))
    return out


# ------------------------------------------------------------ closed forms

def bessel_ive_range(nmax: int, x: float) -> np.ndarray:
    """exp(-x) I_n(x) for n = 0..nmax by normalised downward (Miller) recurrence.

    Uses I_0 + 2 sum_{n>=1} I_n = e^x for the normalisation, so the result is
    directly the scaled function and nothing overflows.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    out = np.zeros(nmax + 1)
    if x == 0:
        out[0] = 1.0
        return out
    start = int(max(nmax, x) + 30 + 10 * math.sqrt(max(nmax, x) + 1))
    start += start % 2
    vals = np.zeros(start + 2)
    vals[start] = 1e-300
    for k in range(start, 0, -1):
        vals[k - 1] = vals[k + 1] + (2.0 * k / x) * vals[k]
        if vals[k - 1] > 1e250:
            vals[k - 1:] *= 1e-250
    norm = vals[0] + 2.0 * vals[1:].sum()
    out[:] = vals[: nmax + 1] / norm
    return out


@dataclass(frozen=True)
class SrwOracle:
    """Simple symmetric walk on Z^d with total jump rate ``kappa`` (``kappa/d`` per axis)."""

    dim: int
    kappa: float = 1.0


def srw_kernel(oracle: SrwOracle, t: float, x: Sequence[int]) -> float:
    """p(t, 0, x) as a product of one-dimensional kernels exp(-a) I_{x_i}(a), a = kappa t / d."""
    if t <= 0:
        raise ValueError("t must be positive")
    x = [abs(int(v)) for v in x]
    if len(x) != oracle.dim:
        raise ValueError("dimension mismatch")
    a = oracle.kappa * t / oracle.dim
    tab = bessel_ive_range(max(x), a)
    return float(np.prod([tab[v] for v in x]))


def srw_kernel_slab(oracle: SrwOracle, t: float, radius: int) -> np.ndarray:
    """p(t, 0, .) on the box |x|_inf <= radius."""
    a = oracle.kappa * t / oracle.dim
    tab = bessel_ive_range(radius, a)
    one = np.concatenate([tab[:0:-1], tab])
    out = one
    for _ in range(oracle.dim - 1):
        out = np.multiply.outer(out, one)
    return out


def j_rate(y) -> np.ndarray:
    """j(y) = y asinh(y) - sqrt(y^2 + 1) + 1."""
    y = np.asarray(y, dtype=float)
    return y * np.arcsinh(y) - np.sqrt(y * y + 1.0) + 1.0


def srw_rate_J(oracle: SrwOracle, x) -> float:
    """J(x) = sum_i (kappa/d) j(d x_i / kappa)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    c = oracle.kappa / oracle.dim
    return float(np.sum(c * j_rate(x / c)))


def positivity_floor(field: RateField, s: float, t: float, x: Sequence[int],
                     y: Sequence[int]) -> float:
    """Explicit positive lower bound for e(s, t, x, y).

    ``P(N_{t-s} = k) (2d)^{-k} exp(-C'(t-s) - C' k)`` with ``k = |x-y|_1``,
    ``N`` a rate-1 Poisson process and
    ``C' = max(2 d kappa2 - 1 + log 2d, |log(2 d kappa1)|)``.
    """
    if t <= s:
        raise ValueError("need t > s")
    d = field.dim
    k1, k2 = field.spec.kappa1, field.spec.kappa2
    c = max(2 * d * k2 - 1 + math.log(2 * d), abs(math.log(2 * d * k1)))
    k = int(sum(abs(int(a) - int(b)) for a, b in zip(x, y)))
    u = t - s
    log_pois = -u + k * math.log(u) - math.lgamma(k + 1)
    return math.exp(log_pois - k * math.log(2 * d) - c * u - c * k)


def _aligned_shift(field: RateField, start: float) -> RateField:
    pieces = start / field.spec.delta
    if abs(pieces - round(pieces)) > 1e-9:
        raise ValueError("start time must be a multiple of the piece length")
    return field.shift(int(round(pieces)), [0] * field.dim)


class ComparisonReport(NamedTuple):
    eps: float
    t_grid: tuple
    fitted: tuple            # C-hat per t
    growth: float            # max ratio C-hat(t_next) / C-hat(t) - 1
    min_ratio: float
    max_ratio: float


def kernel_comparison_check(field: RateField, t_grid: Sequence[float], eps: float,
                            c3: float = 1.0, floor: float = 1e-250) -> ComparisonReport:
    """Fit C-hat with exp(-C t/|log eps|^{1/2}) p <= e(t(1-eps), t, 0, y) <= exp(C t/|log eps|^{1/2}) p.

    ``p`` is the rate-1 simple symmetric kernel at time ``eps t``; ``y``
    ranges over |y|_2 <= eps t + t c3 / |log eps| where both kernels exceed
    ``floor``. The constants in front are fixed to 1, so C-hat is the
    largest |log(e/p)| |log eps|^{1/2} / t over the window.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    L = math.sqrt(abs(math.log(eps)))
    oracle = SrwOracle(field.dim, 1.0)
    fitted, lo_all, hi_all = [], math.inf, -math.inf
    for t in t_grid:
        start = t * (1 - eps)
        sub = _aligned_shift(field, start)
        dur = t - start
        reach = eps * t + t * c3 / abs(math.log(eps))
        # far cells need a box well past the window and the series run out to the floor
        slab = uniformize(sub, dur, radius=int(math.ceil(reach)) + default_radius(sub, dur),
                          tail_tol=min(TAIL_TOL, floor))
        ref = srw_kernel_slab(oracle, dur, slab.radius)
        pts = slab.points()
        win = np.linalg.norm(pts, axis=1) <= reach
        e = slab.values.reshape(-1)[win]
        p = ref.reshape(-1)[win]
        ok = (e > floor) & (p > floor)
        ratio = np.log(e[ok]) - np.log(p[ok])
        lo_all = min(lo_all, float(ratio.min()))
        hi_all = max(hi_all, float(ratio.max()))
        fitted.append(float(np.abs(ratio).max()) * L / t)
    growth = max((b / a - 1.0 if a > 0 else (0.0 if b == 0 else math.inf))
                 for a, b in zip(fitted[:-1], fitted[1:])) if len(fitted) > 1 else 0.0
    return ComparisonReport(eps, tuple(t_grid), tuple(fitted), growth,
                            math.exp(lo_all), math.exp(hi_all))
