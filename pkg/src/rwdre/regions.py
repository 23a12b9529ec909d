"""Simple subsets of R^d: finite unions of boxes and half-spaces.

Used to express LDP target sets and event probabilities. Every region
knows whether it is open or closed so the LDP checks can pick the right
inequality.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-parallel box; ``closed`` selects [lo, hi] versus (lo, hi)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    closed: bool = True

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if self.closed:
            return np.all((pts >= lo) & (pts <= hi), axis=1)
        return np.all((pts > lo) & (pts < hi), axis=1)

    def extreme_points(self) -> list[tuple[float, ...]]:
        import itertools
        return [tuple(c) for c in itertools.product(*zip(self.lo, self.hi))]


@dataclass(frozen=True)
class HalfSpace:
    """``{x : <normal, x> <= offset}`` (or ``<`` when open)."""

    normal: tuple[float, ...]
    offset: float
    closed: bool = True

    def contains(self, pts: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(pts) @ np.asarray(self.normal, float)
        return v <= self.offset if self.closed else v < self.offset

    def extreme_points(self) -> list[tuple[float, ...]]:
        return []


@dataclass(frozen=True)
class Union:
    parts: tuple = ()

    @property
    def closed(self) -> bool:
        return all(p.closed for p in self.parts)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.zeros(len(pts), dtype=bool)
        for p in self.parts:
            out |= p.contains(pts)
        return out

    def extreme_points(self) -> list[tuple[float, ...]]:
        return [e for p in self.parts for e in p.extreme_points()]


@dataclass(frozen=True)
class Everything:
    closed: bool = True  # R^d is both open and closed

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.ones(len(np.atleast_2d(pts)), dtype=bool)

    def extreme_points(self) -> list:
        return []


@dataclass(frozen=True)
class Nothing:
    closed: bool = True

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.zeros(len(np.atleast_2d(pts)), dtype=bool)

    def extreme_points(self) -> list:
        return []


def interval(lo: float, hi: float, closed: bool = True) -> Box:
    return Box((float(lo),), (float(hi),), closed)


def region_from_dict(d: dict):
    """Build a region from ``{"box": {"lo": [...], "hi": [...]}, "closed": bool}`` style dicts."""
    closed = bool(d.get("closed", True))
    if "box" in d:
        return Box(tuple(d["box"]["lo"]), tuple(d["box"]["hi"]), closed)
    if "halfspace" in d:
        return HalfSpace(tuple(d["halfspace"]["normal"]), float(d["halfspace"]["offset"]), closed)
    if "union" in d:
        return Union(tuple(region_from_dict(p) for p in d["union"]))
    if d.get("all"):
        return Everything()
    if d.get("empty"):
        return Nothing()
    raise ValueError(f"cannot parse region {d!r}")


def as_points(xs: Sequence) -> np.ndarray:
    return np.atleast_2d(np.asarray(xs, dtype=float))
