"""Geometry of finite jump ranges on Z^d.

Reach sets, the convex hull U of a jump range with its exact facet
description, the gauge norm of U, minimal step counts, bridging times
between velocities, truncation toward zero and the even-lattice map used
to reduce nearest-neighbour walks to convex ones.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 4

NEAREST_NEIGHBOR = "nearest-neighbor"
CONVEX_SYMMETRIC = "convex-symmetric"
# {0} alone: the deterministic walk; has no hull with interior
DEGENERATE = "degenerate"


class UnreachableError(ValueError):
    """Raised when a lattice point cannot be reached within a given horizon."""


def _as_point(x: Iterable[int]) -> tuple[int, ...]:
    return tuple(int(v) for v in x)


def _solve_exact(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]):
    """Gaussian elimination over the rationals. Returns None if singular."""
    n = len(rows)
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def _rank(vectors: Sequence[Sequence[Fraction]]) -> int:
    rows = [list(v) for v in vectors]
    if not rows:
        return 0
    rank, ncol = 0, len(rows[0])
    for col in range(ncol):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [vr - f * vc for vr, vc in zip(rows[r], rows[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class Polytope:
    """Centrally symmetric polytope with 0 in its interior.

    Facets are stored as rational normals ``a`` normalised so that the
    facet is ``{x : <a, x> = 1}``; the polytope is ``{x : <a, x> <= 1 for all a}``.
    """

    vertices: tuple[tuple[Fraction, ...], ...]
    normals: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.normals[0])

    @property
    def facets(self) -> list[tuple[tuple[Fraction, ...], Fraction]]:
        """(normal, offset) pairs with offset 1."""
        return [(a, Fraction(1)) for a in self.normals]

    @cached_property
    def _normals_float(self) -> np.ndarray:
        return np.array([[float(v) for v in a] for a in self.normals])

    @cached_property
    def integer_facets(self) -> tuple[np.ndarray, np.ndarray]:
        """Facets as integer pairs (p, q) meaning <p, x> <= q for x in U."""
        ps, qs = [], []
        for a in self.normals:
            den = math.lcm(*(v.denominator for v in a))
            ps.append([int(v * den) for v in a])
            qs.append(den)
        return np.array(ps, dtype=np.int64), np.array(qs, dtype=np.int64)

    def gauge(self, x) -> float | Fraction:
        """Minkowski gauge ``inf{a >= 0 : x in aU}``.

        Exact (a ``Fraction``) when every coordinate of ``x`` is an int or
        a ``Fraction``; a float otherwise.
        """
        xs = list(x)
        if len(xs) != self.dim:
            raise ValueError(f"expected a {self.dim}-vector, got {len(xs)} entries")
        if all(isinstance(v, (int, Fraction, np.integer)) for v in xs):
            xs = [Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v) for v in xs]
            return max(Fraction(0), max(sum(ai * xi for ai, xi in zip(a, xs)) for a in self.normals))
        return max(0.0, float(np.max(self._normals_float @ np.asarray(xs, dtype=float))))

    def gauge_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised float gauge for an (N, d) array."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.maximum(0.0, (xs @ self._normals_float.T).max(axis=1))

    def contains(self, x, scale=1) -> bool:
        """Exact membership test ``x in scale*U`` for integer ``x``."""
        p, q = self.integer_facets
        return bool(np.all(p @ np.asarray(x, dtype=np.int64) <= q * scale))

    def lattice_points(self, scale: int) -> set[tuple[int, ...]]:
        """(scale*U) ∩ Z^d by exact facet tests over the bounding box."""
        radius = int(math.floor(max(abs(v) for vert in self.vertices for v in vert) * scale))
        d = self.dim
        axes = [np.arange(-radius, radius + 1)] * d
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        p, q = self.integer_facets
        ok = np.all(grid @ p.T <= q * scale, axis=1)
        return {tuple(int(v) for v in row) for row in grid[ok]}


def convex_hull(points: Iterable[Sequence[int]]) -> Polytope:
    """Exact hull of a symmetric point set whose hull contains 0 in its interior.

    Facets are found by testing every affinely independent d-subset of the
    candidate points: the hyperplane ``<a, x> = 1`` through them is a facet
    iff no point lies strictly beyond it. Fine for the small sets used here.
    """
    pts = sorted({_as_point(p) for p in points})
    if not pts:
        raise ValueError("empty point set")
    d = len(pts[0])
    if d > MAX_DIM:
        raise ValueError(f"dimension {d} exceeds the supported maximum {MAX_DIM}")
    fpts = [tuple(Fraction(v) for v in p) for p in pts if any(p)]
    if _rank(fpts) < d:
        raise ValueError("degenerate hull: the points do not span R^d")
    normals = set()
    for combo in itertools.combinations(fpts, d):
        a = _solve_exact(combo, [Fraction(1)] * d)
        if a is None:
            continue
        a = tuple(a)
        if a in normals:
            continue
        if all(sum(ai * pi for ai, pi in zip(a, p)) <= 1 for p in fpts):
            normals.add(a)
    if not normals:
        raise ValueError("origin is not interior to the hull")
    normals = tuple(sorted(normals))
    for a in normals:
        on = [p for p in fpts if sum(ai * pi for ai, pi in zip(a, p)) == 1]
        if _rank([[pi - on[0][i] for i, pi in enumerate(p)] for p in on[1:]]) != d - 1:
            raise ValueError("origin is not interior to the hull")
    vertices = []
    for p in fpts:
        active = [a for a in normals if sum(ai * pi for ai, pi in zip(a, p)) == 1]
        if _rank(active) == d:
            vertices.append(p)
    return Polytope(vertices=tuple(sorted(vertices)), normals=normals)


@dataclass(frozen=True)
class JumpRange:
    """Finite symmetric set of allowed one-step increments.

    Use :meth:`nearest_neighbor`, :meth:`convex` or :func:`parse_jump_range`
    to build one; the constructor validates the invariants of ``kind``.
    """

    steps: tuple[tuple[int, ...], ...]
    kind: str
    dim: int = field(init=False)

    def __post_init__(self):
        steps = tuple(sorted({_as_point(s) for s in self.steps}))
        if not steps:
            raise ValueError("jump range must be nonempty")
        dims = {len(s) for s in steps}
        if len(dims) != 1:
            raise ValueError("dimension mismatch among steps")
        d = dims.pop()
        if not 1 <= d <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "dim", d)
        sset = set(steps)
        if any(tuple(-v for v in s) not in sset for s in steps):
            raise ValueError("jump range is not symmetric")
        if self.kind == NEAREST_NEIGHBOR:
            if sset != set(_unit_vectors(d)):
                raise ValueError("nearest-neighbor range must be {±e_i}")
        elif self.kind == CONVEX_SYMMETRIC:
            hull = convex_hull(steps)
            if hull.lattice_points(1) != sset:
                raise ValueError("steps are not the lattice points of their hull")
        elif self.kind == DEGENERATE:
            if sset != {(0,) * d}:
                raise ValueError("the degenerate range is {0}")
        else:
            raise ValueError(f"unknown jump range kind {self.kind!r}")

    @classmethod
    def nearest_neighbor(cls, d: int) -> "JumpRange":
        return cls(tuple(_unit_vectors(d)), NEAREST_NEIGHBOR)

    @classmethod
    def convex(cls, steps: Iterable[Sequence[int]]) -> "JumpRange":
        return cls(tuple(_as_point(s) for s in steps), CONVEX_SYMMETRIC)

    @classmethod
    def cube(cls, d: int) -> "JumpRange":
        """All steps in {-1,0,1}^d (hull is the l-infinity unit ball)."""
        return cls.convex(itertools.product((-1, 0, 1), repeat=d))

    @classmethod
    def lazy_cross(cls, d: int) -> "JumpRange":
        """{0, ±e_i}: the nearest-neighbour steps plus staying put."""
        return cls.convex([(0,) * d] + _unit_vectors(d))

    @classmethod
    def trivial(cls, d: int) -> "JumpRange":
        """The one-step range {0}; supported by the DP but has no gauge geometry."""
        return cls(((0,) * d,), DEGENERATE)

    @property
    def size(self) -> int:
        return len(self.steps)

    @property
    def is_convex(self) -> bool:
        return self.kind == CONVEX_SYMMETRIC

    @cached_property
    def array(self) -> np.ndarray:
        """Steps as an (|R|, d) int64 array, in the canonical sorted order."""
        return np.array(self.steps, dtype=np.int64).reshape(len(self.steps), self.dim)

    @property
    def r_max(self) -> int:
        return int(np.abs(self.array).max())

    @cached_property
    def hull(self) -> Polytope:
        return hull_u(self)

    def index(self, step: Sequence[int]) -> int:
        return self.steps.index(_as_point(step))

    def spec(self) -> str:
        """Compact text form understood by :func:`parse_jump_range`."""
        if self.kind == NEAREST_NEIGHBOR:
            return f"nn:d={self.dim}"
        if self.kind == DEGENERATE:
            return f"trivial:d={self.dim}"
        steps = ",".join("(" + ",".join(str(v) for v in s) + ")" for s in self.steps)
        return f"hull:d={self.dim};steps={steps}"


def _unit_vectors(d: int) -> list[tuple[int, ...]]:
    out = []
    for i in range(d):
        for sgn in (1, -1):
            e = [0] * d
            e[i] = sgn
            out.append(tuple(e))
    return out


_TUPLE_RE = re.compile(r"\(([^()]*)\)")


def parse_jump_range(text: str) -> JumpRange:
    """Parse ``nn:d=2``, ``cube:d=2``, ``cross:d=2`` or ``hull:d=2;steps=(0,0),(1,0),...``."""
    text = text.strip().replace(" ", "")
    head, _, rest = text.partition(":")
    opts = {}
    for part in rest.split(";"):
        if part:
            k, _, v = part.partition("=")
            opts[k] = v
    if "d" not in opts:
        raise ValueError(f"jump range spec {text!r} is missing d=")
    d = int(opts["d"])
    if head == "nn":
        return JumpRange.nearest_neighbor(d)
    if head == "cube":
        return JumpRange.cube(d)
    if head == "cross":
        return JumpRange.lazy_cross(d)
    if head == "trivial":
        return JumpRange.trivial(d)
    if head == "hull":
        steps = [tuple(int(v) for v in m.split(",")) for m in _TUPLE_RE.findall(opts.get("steps", ""))]
        if any(len(s) != d for s in steps):
            raise ValueError("dimension mismatch between d= and steps")
        return JumpRange.convex(steps)
    raise ValueError(f"unknown jump range kind {head!r}")


def hull_u(rng: JumpRange) -> Polytope:
    """Convex hull U of the steps of ``rng``."""
    if rng.kind == DEGENERATE:
        raise ValueError("degenerate hull: the range {0} does not span R^d")
    return convex_hull(rng.steps)


def reach_mask(rng: JumpRange, n: int) -> np.ndarray:
    """Dense boolean slab of R_n over the box [-n*r_max, n*r_max]^d.

    Index ``i`` along each axis corresponds to coordinate ``i - n*r_max``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    r = rng.r_max
    d = rng.dim
    size = 2 * n * r + 1
    mask = np.zeros((size,) * d, dtype=bool)
    mask[(n * r,) * d] = True
    for m in range(n):
        # current support lies within radius m*r; dilate by every step
        new = np.zeros_like(mask)
        lo, hi = n * r - (m + 1) * r, n * r + (m + 1) * r + 1
        inner = tuple(slice(lo + r, hi - r) for _ in range(d))
        src = mask[inner]
        for s in rng.steps:
            tgt = tuple(slice(lo + r + si, hi - r + si) for si in s)
            new[tgt] |= src
        mask = new
    return mask


def reach_set(rng: JumpRange, n: int) -> set[tuple[int, ...]]:
    """R_n, the set of sites reachable in exactly ``n`` steps."""
    mask = reach_mask(rng, n)
    off = n * rng.r_max
    return {tuple(int(v) - off for v in idx) for idx in zip(*np.nonzero(mask))}


def reach_rows(rng: JumpRange, n_max: int) -> list[tuple[int, ...]]:
    """CSV-ready rows ``(n, x_1, ..., x_d)`` for n = 0..n_max, sorted."""
    rows = []
    for n in range(n_max + 1):
        rows.extend((n, *p) for p in sorted(reach_set(rng, n)))
    return rows


def gauge_norm(u: Polytope, x) -> float | Fraction:
    """Gauge norm of ``x`` with respect to ``u``; see :meth:`Polytope.gauge`."""
    return u.gauge(x)


def min_steps(rng: JumpRange, x: Sequence[int], horizon: int | None = None) -> int:
    """s(x) = min{n >= 0 : x in R_n}.

    For convex ranges R_n = nU ∩ Z^d and 0 ∈ R, so s(x) = ceil(||x||).
    For the nearest-neighbour range s(x) = |x|_1. Raises
    :class:`UnreachableError` if ``horizon`` is given and s(x) exceeds it.
    """
    x = _as_point(x)
    if len(x) != rng.dim:
        raise ValueError("dimension mismatch")
    if rng.kind == NEAREST_NEIGHBOR:
        s = sum(abs(v) for v in x)
    elif rng.kind == DEGENERATE:
        if any(x):
            raise UnreachableError(f"{x} is never reached by the trivial walk")
        s = 0
    else:
        g = rng.hull.gauge(x)
        s = math.ceil(g)
    if horizon is not None and s > horizon:
        raise UnreachableError(f"{x} needs {s} steps, horizon is {horizon}")
    return s


def reachable(rng: JumpRange, x: Sequence[int], n: int) -> bool:
    """Whether ``x`` is in R_n."""
    x = _as_point(x)
    if rng.kind == NEAREST_NEIGHBOR:
        l1 = sum(abs(v) for v in x)
        return l1 <= n and (n - l1) % 2 == 0
    if rng.kind == DEGENERATE:
        return not any(x)
    return rng.hull.contains(x, n)


def truncate(x) -> tuple[int, ...]:
    """Componentwise rounding toward zero, the lattice point ``[x]``."""
    return tuple(int(math.trunc(float(v))) if not isinstance(v, (int, Fraction)) else int(v)
                 for v in x)


def _check_bridge_args(rng: JumpRange, n: int, z, x):
    if not rng.is_convex:
        raise ValueError("bridging times need a convex-symmetric range")
    if n < 1:
        raise ValueError("n must be >= 1")
    u = rng.hull
    nx = float(u.gauge([float(v) for v in x]))
    if nx >= 1:
        raise ValueError(f"x must be interior to U (||x|| = {nx})")
    nz = float(u.gauge([float(v) for v in z]))
    if nz > 1 + 1e-12:
        raise ValueError(f"z must lie in U (||z|| = {nz})")
    return u, nx


def bridge_bound(rng: JumpRange, n: int, z, x) -> float:
    """Sufficient bridging slack ``9/(1-||x||) + n*||x-z||/(1-||x||)``."""
    u, nx = _check_bridge_args(rng, n, z, x)
    dxz = float(u.gauge([float(a) - float(b) for a, b in zip(x, z)]))
    return 9.0 / (1.0 - nx) + n * dxz / (1.0 - nx)


def _scaled(k: int, v) -> tuple[int, ...]:
    return truncate([k * float(c) for c in v])


def bridge_time_up(rng: JumpRange, n: int, z, x) -> int:
    """Smallest n2 >= n with s([n2 x] - [n z]) <= n2 - n.

    The walk can then go from (n, [nz]) to (n2, [n2 x]) along an admissible path.
    """
    bound = bridge_bound(rng, n, z, x)
    start = _scaled(n, z)
    limit = n + math.ceil(bound) + 1
    for n2 in range(n, limit + 1):
        diff = [a - b for a, b in zip(_scaled(n2, x), start)]
        if min_steps(rng, diff) <= n2 - n:
            return n2
    raise RuntimeError("no bridging time found below the guaranteed bound")


def bridge_time_down(rng: JumpRange, n: int, z, x) -> int:
    """Largest n1 <= n with s([n z] - [n1 x]) <= n - n1."""
    bridge_bound(rng, n, z, x)
    end = _scaled(n, z)
    for n1 in range(n, -1, -1):
        diff = [a - b for a, b in zip(end, _scaled(n1, x))]
        if min_steps(rng, diff) <= n - n1:
            return n1
    raise RuntimeError("no admissible bridging time in [0, n]")


@dataclass(frozen=True)
class EvenLatticeIso:
    """Basis of the even lattice {x : sum(x) even} and the map h with h(f_i) = e_i.

    ``basis`` holds f_1..f_d as columns. ``h`` is rational with denominator
    2 and is stored as the integer matrix ``2 * basis^{-1}``.
    """

    basis: np.ndarray
    h2: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def h(self, x: Sequence[int]) -> tuple[int, ...]:
        """Exact image of an even-lattice point."""
        x = np.asarray(x, dtype=np.int64)
        if int(x.sum()) % 2:
            raise ValueError(f"{tuple(x)} is not in the even lattice")
        y2 = self.h2 @ x
        assert np.all(y2 % 2 == 0)
        return tuple(int(v) for v in y2 // 2)

    def h_real(self, x) -> np.ndarray:
        """Linear extension of h to R^d."""
        return self.h2 @ np.asarray(x, dtype=float) / 2.0

    def h_inv(self, y: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(v) for v in self.basis @ np.asarray(y, dtype=np.int64))

    def transformed_range(self) -> JumpRange:
        """Jump range of Y_n = h(X_{2n}) for the nearest-neighbour walk: h(R_2)."""
        nn = JumpRange.nearest_neighbor(self.dim)
        return JumpRange.convex(self.h(p) for p in reach_set(nn, 2))


def even_lattice_iso(d: int) -> EvenLatticeIso:
    """Canonical basis f_1 = e_1+e_2, f_2 = e_1-e_2, f_i = e_1+e_i (i >= 3); {2} when d = 1."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        basis = np.array([[2]], dtype=np.int64)
    else:
        basis = np.zeros((d, d), dtype=np.int64)
        basis[0, 0], basis[1, 0] = 1, 1
        basis[0, 1], basis[1, 1] = 1, -1
        for i in range(2, d):
            basis[0, i], basis[i, i] = 1, 1
    det = round(np.linalg.det(basis))
    assert abs(det) == 2
    # adjugate / det with det = ±2 gives 2*inverse as adjugate * sign
    inv2 = np.rint(np.linalg.inv(basis) * 2).astype(np.int64)
    assert np.array_equal(basis @ inv2, 2 * np.eye(d, dtype=np.int64))
    return EvenLatticeIso(basis=basis, h2=inv2)
