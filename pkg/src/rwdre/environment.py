"""Seeded space-time random environments.

A discrete environment assigns to every time-space cell (n, x) a probability
vector over the jump range with every entry at least ``kappa``. A continuous
environment assigns jump rates over the unit vectors, piecewise constant in
time on pieces of length ``delta``. Everything is a pure function of the
spec and the cell, so fields never need to be materialised.

Built-in models
---------------
homogeneous
    the same vector everywhere.
iid-time-space
    ``kappa + (1 - |R| kappa) * w`` with ``w`` uniform on the simplex
    (normalised exponentials), independent over cells.
spin-flip
    each site carries an occupation bit, Bernoulli(rho) at time 0; at each
    unit of time, independently over sites, the bit is redrawn from
    Bernoulli(rho) with probability ``q``. Occupied sites use ``v_occ``,
    vacant ones ``v_vac``. The product Bernoulli(rho) law is invariant.

All three are stationary and ergodic under time-space shifts, which no
finite computation checks; it holds by construction.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from . import _numba_setup  # noqa: F401
import numpy as np
from numba import njit

from . import _rng
from .lattice import JumpRange, parse_jump_range

MODELS = ("homogeneous", "iid-time-space", "spin-flip")
_MODEL_CODE = {m: i for i, m in enumerate(MODELS)}


@njit(cache=True)
def flip_step(seed, rho, q, k, x, occ):
    """Occupation bit after the update from time ``k`` to ``k + 1``.

    With probability ``q`` the site redraws its bit from Bernoulli(rho),
    which leaves the product Bernoulli(rho) law invariant for every rho.
    """
    key = _rng.cell_key(seed, _rng.STREAM_FLIP, k, x)
    if _rng.uniform(key, 0) < q:
        return 1 if _rng.uniform(key, 1) < rho else 0
    return occ


@njit(cache=True)
def occupancy_point(seed, rho, q, n, x):
    """Occupation bit of site ``x`` at time ``n`` (O(n) work)."""
    occ = 1 if _rng.uniform(_rng.cell_key(seed, _rng.STREAM_OCCUPANCY, 0, x), 0) < rho else 0
    if q > 0.0:
        for k in range(n):
            occ = flip_step(seed, rho, q, k, x, occ)
    return occ


@njit(cache=True)
def fill_probs(model, seed, kappa, scale, table, n, x, occ, out):
    """Write the probability vector of cell (n, x) into ``out``.

    ``occ`` is only read by the spin-flip model. The exponential weights are
    summed in a fixed order so results do not depend on the caller.
    """
    k = out.shape[0]
    if model == 0:
        for j in range(k):
            out[j] = table[0, j]
    elif model == 1:
        key = _rng.cell_key(seed, _rng.STREAM_PROBS, n, x)
        tot = 0.0
        for j in range(k):
            w = -math.log(_rng.uniform(key, j))
            out[j] = w
            tot += w
        for j in range(k):
            out[j] = kappa + scale * (out[j] / tot)
    else:
        for j in range(k):
            out[j] = table[occ, j]


@njit(cache=True)
def _probs_many(model, seed, kappa, scale, table, rho, q, times, xs, out):
    for i in range(xs.shape[0]):
        occ = 0
        if model == 2:
            occ = occupancy_point(seed, rho, q, times[i], xs[i])
        fill_probs(model, seed, kappa, scale, table, times[i], xs[i], occ, out[i])


def _vec(v) -> tuple[float, ...] | None:
    return None if v is None else tuple(float(a) for a in v)


@dataclass(frozen=True)
class DiscreteEnvSpec:
    """Discrete-time environment description; see the module docstring."""

    model: str
    range: JumpRange
    kappa: float
    seed: int = 0
    probs: tuple[float, ...] | None = None
    rho: float = 0.5
    flip: float = 0.1
    v_occ: tuple[float, ...] | None = None
    v_vac: tuple[float, ...] | None = None

    def __post_init__(self):
        for name in ("probs", "v_occ", "v_vac"):
            object.__setattr__(self, name, _vec(getattr(self, name)))
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        k = self.range.size
        if not (0 < self.kappa and self.kappa * k <= 1 + 1e-15):
            raise ValueError(f"kappa must lie in (0, 1/|R|] = (0, {1 / k}]")
        if self.model == "homogeneous":
            v = self.probs if self.probs is not None else (1.0 / k,) * k
            _check_prob(v, k, self.kappa, "probs")
            object.__setattr__(self, "probs", v)
        if self.model == "spin-flip":
            if not 0 <= self.rho <= 1:
                raise ValueError("rho must lie in [0, 1]")
            if not 0 <= self.flip <= 1:
                raise ValueError("flip probability must lie in [0, 1]")
            occ = self.v_occ if self.v_occ is not None else _drift_vector(self.range, self.kappa)
            vac = self.v_vac if self.v_vac is not None else (1.0 / k,) * k
            _check_prob(occ, k, self.kappa, "v_occ")
            _check_prob(vac, k, self.kappa, "v_vac")
            object.__setattr__(self, "v_occ", occ)
            object.__setattr__(self, "v_vac", vac)

    @property
    def dim(self) -> int:
        return self.range.dim

    def to_dict(self) -> dict:
        out = asdict(self)
        out["range"] = self.range.spec()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteEnvSpec":
        d = dict(d)
        if isinstance(d.get("range"), str):
            d["range"] = parse_jump_range(d["range"])
        return cls(**d)

    def digest(self) -> str:
        return _digest(self.to_dict())


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _check_prob(v, k, kappa, name):
    if len(v) != k:
        raise ValueError(f"{name} must have {k} entries")
    if abs(sum(v) - 1.0) > 1e-12:
        raise ValueError(f"{name} must sum to 1")
    if min(v) < kappa - 1e-15:
        raise ValueError(f"{name} has an entry below kappa = {kappa}")


def _drift_vector(rng: JumpRange, kappa: float) -> tuple[float, ...]:
    """kappa everywhere except the first positive coordinate step, which gets the rest."""
    k = rng.size
    e1 = (1,) + (0,) * (rng.dim - 1)
    v = [kappa] * k
    v[rng.index(e1)] += 1.0 - k * kappa
    return tuple(v)


class EnvironmentField:
    """Random-access view of a discrete environment, possibly time-space shifted.

    ``env_at(n, x)`` returns the vector of the underlying environment at
    ``(n + time_offset, x + site_offset)``.
    """

    def __init__(self, spec: DiscreteEnvSpec, time_offset: int = 0, site_offset=None):
        self.spec = spec
        self.time_offset = int(time_offset)
        self.site_offset = np.zeros(spec.dim, dtype=np.int64) if site_offset is None \
            else np.asarray(site_offset, dtype=np.int64).reshape(spec.dim)
        k = spec.range.size
        table = np.zeros((2, k))
        if spec.model == "homogeneous":
            table[0] = spec.probs
        elif spec.model == "spin-flip":
            table[0] = spec.v_vac
            table[1] = spec.v_occ
        self._params = (
            _MODEL_CODE[spec.model],
            np.uint64(_rng.seed64(spec.seed)),
            float(spec.kappa),
            1.0 - k * float(spec.kappa),
            table,
        )

    @property
    def range(self) -> JumpRange:
        return self.spec.range

    @property
    def kappa(self) -> float:
        return self.spec.kappa

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def kernel_params(self):
        """(model code, seed, kappa, scale, table, rho, q) for compiled kernels."""
        return (*self._params, float(self.spec.rho), float(self.spec.flip))

    def shift(self, m: int, z: Sequence[int]) -> "EnvironmentField":
        """Field seen from time-space point (m, z)."""
        if m < 0:
            raise ValueError("time shift must be nonnegative")
        return EnvironmentField(self.spec, self.time_offset + m,
                                self.site_offset + np.asarray(z, dtype=np.int64))

    def env_many(self, times, xs) -> np.ndarray:
        """Vectors for arrays of times (N,) and sites (N, d); shape (N, |R|)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=np.int64)) + self.site_offset
        times = np.broadcast_to(np.asarray(times, dtype=np.int64), (xs.shape[0],)) + self.time_offset
        out = np.empty((xs.shape[0], self.range.size))
        _probs_many(*self.kernel_params[:5], self.spec.rho, self.spec.flip,
                    np.ascontiguousarray(times), np.ascontiguousarray(xs), out)
        return out

    def env_at(self, n: int, x: Sequence[int]) -> np.ndarray:
        return self.env_many([n], [x])[0]

    def occupancy_at(self, n: int, x: Sequence[int]) -> int:
        if self.spec.model != "spin-flip":
            raise ValueError("occupancy is only defined for the spin-flip model")
        xa = np.asarray(x, dtype=np.int64) + self.site_offset
        return int(occupancy_point(self._params[1], float(self.spec.rho), float(self.spec.flip),
                                   int(n) + self.time_offset, xa))

    def dump(self, times: Sequence[int], radius: int) -> list[tuple]:
        """Rows ``(n, x_1..x_d, e_index, prob)`` over the box |x|_inf <= radius."""
        d = self.dim
        axes = [np.arange(-radius, radius + 1)] * d
        sites = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        rows = []
        for n in times:
            probs = self.env_many(np.full(len(sites), n), sites)
            for x, v in zip(sites, probs):
                for j, p in enumerate(v):
                    rows.append((int(n), *(int(c) for c in x), j, float(p)))
        return rows


@dataclass(frozen=True)
class ContinuousEnvSpec:
    """Continuous-time rate environment over the unit vectors of Z^d.

    ``homogeneous`` uses ``rates`` (default: ``kappa2`` in every direction).
    The other models reuse the discrete generator stream of the same seed
    and map each discrete vector v affinely,
    ``rate(e) = kappa1 + (kappa2 - kappa1) * (v(e) - kappa) / (1 - |G| kappa)``,
    so rates lie in [kappa1, kappa2]. Piece ``k`` (times in [k delta, (k+1) delta))
    uses discrete time index ``k``.
    """

    model: str
    dim: int
    kappa1: float
    kappa2: float
    seed: int = 0
    delta: float = 1.0
    rates: tuple[float, ...] | None = None
    rho: float = 0.5
    flip: float = 0.1
    v_occ: tuple[float, ...] | None = None
    v_vac: tuple[float, ...] | None = None
    kappa: float = field(default=0.0, repr=False)

    def __post_init__(self):
        for name in ("rates", "v_occ", "v_vac"):
            object.__setattr__(self, name, _vec(getattr(self, name)))
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if not 0 < self.kappa1 <= self.kappa2:
            raise ValueError("need 0 < kappa1 <= kappa2")
        if self.delta <= 0:
            raise ValueError("piece length delta must be positive")
        k = 2 * self.dim
        if self.model == "homogeneous":
            r = self.rates if self.rates is not None else (self.kappa2,) * k
            if len(r) != k or min(r) < self.kappa1 - 1e-15 or max(r) > self.kappa2 + 1e-15:
                raise ValueError("homogeneous rates must have 2d entries within [kappa1, kappa2]")
            object.__setattr__(self, "rates", r)
        if self.kappa == 0.0:
            object.__setattr__(self, "kappa", 1.0 / (4 * self.dim))

    @property
    def range(self) -> JumpRange:
        return JumpRange.nearest_neighbor(self.dim)

    def discrete(self) -> DiscreteEnvSpec:
        """The discrete spec whose vectors are embedded into rates."""
        return DiscreteEnvSpec(model=self.model, range=self.range, kappa=self.kappa,
                               seed=self.seed, rho=self.rho, flip=self.flip,
                               v_occ=self.v_occ, v_vac=self.v_vac)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ContinuousEnvSpec":
        return cls(**d)

    def digest(self) -> str:
        return _digest(self.to_dict())


class RateField:
    """Random-access view of a continuous environment, possibly shifted.

    Shifts are by whole pieces in time so that piece boundaries stay aligned.
    """

    def __init__(self, spec: ContinuousEnvSpec, piece_offset: int = 0, site_offset=None):
        self.spec = spec
        self.piece_offset = int(piece_offset)
        self.site_offset = np.zeros(spec.dim, dtype=np.int64) if site_offset is None \
            else np.asarray(site_offset, dtype=np.int64).reshape(spec.dim)
        self._disc = None if spec.model == "homogeneous" else EnvironmentField(spec.discrete())

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def range(self) -> JumpRange:
        return self.spec.range

    @property
    def total_rate_bound(self) -> float:
        """Uniformisation constant 2 d kappa2."""
        return 2 * self.dim * self.spec.kappa2

    def piece(self, t: float) -> int:
        return int(math.floor(t / self.spec.delta))

    def shift(self, pieces: int, z: Sequence[int]) -> "RateField":
        if pieces < 0:
            raise ValueError("time shift must be nonnegative")
        return RateField(self.spec, self.piece_offset + pieces,
                         self.site_offset + np.asarray(z, dtype=np.int64))

    def rates_piece(self, k: int, xs) -> np.ndarray:
        """Rate vectors on piece ``k`` at sites (N, d); shape (N, 2d)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=np.int64))
        s = self.spec
        if s.model == "homogeneous":
            return np.broadcast_to(np.asarray(s.rates), (xs.shape[0], 2 * s.dim)).copy()
        v = self._disc.env_many(np.full(xs.shape[0], k + self.piece_offset), xs + self.site_offset)
        kap = s.kappa
        w = (v - kap) / (1.0 - 2 * s.dim * kap)
        return s.kappa1 + (s.kappa2 - s.kappa1) * w

    def rates_at(self, t: float, x: Sequence[int]) -> np.ndarray:
        return self.rates_piece(self.piece(t), [x])[0]
