"""Experiment configuration: YAML in, validated dataclass out.

Validation collects every problem before failing, so a broken config is
reported in one go.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any

import yaml

KINDS = ("geometry", "rate", "shape", "mc-check", "ldp", "quench", "even-time", "dump-env")

DEFAULT_TOLERANCES = {
    "subadditivity": 1e-9,
    "ellipticity": 1e-12,
    "convexity": 0.02,
    "lipschitz": 0.01,
    "residual": 0.05,
    "cramer": 0.02,
    "cramer_hat": 5e-3,
    "ldp_slack": 0.05,
    "quench": 0.05,
    "shape": 0.05,
    "shape_noise": 0.02,
    "equicontinuity": 0.2,
    "fk_sigmas": 3.0,
    "even": 0.02,
}

# checks each kind runs when the config does not list them
DEFAULT_CHECKS = {
    "geometry": ["reach-identity", "gauge-sandwich", "bridge-bounds"],
    "rate": ["ellipticity", "convexity"],
    "shape": ["shape", "equicontinuity"],
    "mc-check": ["fk-agreement"],
    "ldp": ["ldp"],
    "quench": ["quenched-concentration"],
    "even-time": ["even-direct", "even-offsets"],
    "dump-env": [],
}

KNOWN_CHECKS = {
    "geometry": {"reach-identity", "gauge-sandwich", "bridge-bounds"},
    "rate": {"ellipticity", "convexity", "lipschitz", "cramer", "cramer-hat", "subadditivity",
             "residual"},
    "shape": {"shape", "equicontinuity"},
    "mc-check": {"fk-agreement"},
    "ldp": {"ldp"},
    "quench": {"quenched-concentration"},
    "even-time": {"even-direct", "even-offsets"},
    "dump-env": set(),
}

TOP_KEYS = {"kind", "environment", "continuous", "range", "horizons", "t_grid", "directions",
            "seeds", "tolerances", "output", "budget_mb", "checks", "params"}

ENV_KEYS = {"model", "range", "kappa", "seed", "probs", "rho", "flip", "v_occ", "v_vac"}
CT_KEYS = {"model", "dim", "kappa1", "kappa2", "seed", "delta", "rates", "rho", "flip",
           "v_occ", "v_vac", "kappa"}

# kind-specific parameters and their defaults
PARAM_DEFAULTS = {
    "geometry": {"n_max": 10, "gauge_radius": 20, "bridge_samples": 200, "bridge_seed": 0},
    "rate": {"lipschitz_z": [], "subadditivity_trials": 0, "subadditivity_horizon": 12},
    "shape": {"K": 0.25, "eps": 0.125, "fit_times": [256, 512, 1024], "grid_step": 0.015625},
    "mc-check": {"t": 4.0, "targets": [[0]], "samples": 100000},
    "ldp": {"sets": [], "reference": "fitted", "grid_step": 0.01},
    "quench": {"n": 4096},
    "even-time": {"n": 512},
    "dump-env": {"times": [0, 1], "radius": 2},
}

# which top-level blocks each kind needs
REQUIRED = {
    "geometry": ["range"],
    "rate": ["environment", "horizons", "directions"],
    "shape": ["continuous", "t_grid"],
    "mc-check": ["continuous"],
    "ldp": ["environment", "horizons"],
    "quench": ["environment", "directions", "seeds"],
    "even-time": ["environment", "directions"],
    "dump-env": ["environment"],
}


class ConfigError(ValueError):
    """Raised with the full list of validation problems."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    kind: str
    environment: dict | None = None
    continuous: dict | None = None
    range: str | None = None
    horizons: list[int] = field(default_factory=list)
    t_grid: list[float] = field(default_factory=list)
    directions: list[list[float]] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0])
    tolerances: dict = field(default_factory=dict)
    output: str = "out"
    budget_mb: float = 2048
    checks: list[str] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Hash of everything that affects artifact contents (not the output path)."""
        d = self.to_dict()
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def tol(self, name: str) -> float:
        return float(self.tolerances[name])


def _increasing(seq) -> bool:
    return all(b > a for a, b in zip(seq, seq[1:]))


def validate(raw: dict, kind: str | None = None) -> ExperimentConfig:
    """Build a config from a plain mapping, filling defaults; raises ConfigError."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a mapping"])
    raw = copy.deepcopy(raw)
    for k in sorted(set(raw) - TOP_KEYS):
        errors.append(f"unknown key {k!r}")
    kind = raw.get("kind", kind)
    if kind is None:
        errors.append("missing required field 'kind'")
        raise ConfigError(errors)
    if kind not in KINDS:
        errors.append(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
        raise ConfigError(errors)
    for req in REQUIRED[kind]:
        if raw.get(req) in (None, [], {}):
            errors.append(f"missing required field {req!r} for kind {kind}")

    env = raw.get("environment")
    if env is not None:
        if not isinstance(env, dict):
            errors.append("environment must be a mapping")
        else:
            for k in sorted(set(env) - ENV_KEYS):
                errors.append(f"unknown key environment.{k}")
            for req in ("model", "range", "kappa"):
                if req not in env:
                    errors.append(f"missing required field environment.{req}")
    ct = raw.get("continuous")
    if ct is not None:
        if not isinstance(ct, dict):
            errors.append("continuous must be a mapping")
        else:
            for k in sorted(set(ct) - CT_KEYS):
                errors.append(f"unknown key continuous.{k}")
            for req in ("model", "dim", "kappa1", "kappa2"):
                if req not in ct:
                    errors.append(f"missing required field continuous.{req}")

    horizons = raw.get("horizons") or []
    if not all(isinstance(n, int) and n > 0 for n in horizons):
        errors.append("horizons must be positive integers")
    elif not _increasing(horizons):
        errors.append("horizons are non-increasing")
    t_grid = raw.get("t_grid") or []
    if not all(isinstance(t, (int, float)) and t > 0 for t in t_grid):
        errors.append("t_grid entries must be positive numbers")
    elif not _increasing(t_grid):
        errors.append("t_grid is non-increasing")
    seeds = raw.get("seeds", [0])
    if not seeds:
        errors.append("seed list is empty")
    elif not all(isinstance(s, int) and s >= 0 for s in seeds):
        errors.append("seeds must be nonnegative integers")

    tols = dict(DEFAULT_TOLERANCES)
    user_tols = raw.get("tolerances") or {}
    for k, v in user_tols.items():
        if k not in DEFAULT_TOLERANCES:
            errors.append(f"unknown tolerance {k!r}")
        elif not isinstance(v, (int, float)) or v <= 0:
            errors.append(f"tolerance {k!r} must be positive")
        else:
            tols[k] = float(v)

    checks = raw.get("checks")
    if checks is None:
        checks = list(DEFAULT_CHECKS[kind])
    for c in checks:
        if c not in KNOWN_CHECKS[kind]:
            errors.append(f"unknown check {c!r} for kind {kind}")
    if len(set(checks)) != len(checks):
        errors.append("checks are listed more than once")

    params = dict(PARAM_DEFAULTS[kind])
    for k, v in (raw.get("params") or {}).items():
        if k not in PARAM_DEFAULTS[kind]:
            errors.append(f"unknown key params.{k} for kind {kind}")
        else:
            params[k] = v

    budget = raw.get("budget_mb", 2048)
    if not isinstance(budget, (int, float)) or budget <= 0:
        errors.append("budget_mb must be positive")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        kind=kind, environment=env, continuous=ct, range=raw.get("range"),
        horizons=list(horizons), t_grid=[float(t) for t in t_grid],
        directions=[list(map(float, x)) for x in raw.get("directions") or []],
        seeds=list(seeds), tolerances=tols, output=str(raw.get("output", "out")),
        budget_mb=float(budget), checks=list(checks), params=params)


def parse_config(text: str, kind: str | None = None) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML: {exc}"]) from None
    return validate(raw if raw is not None else {}, kind)


def serialize(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def with_overrides(cfg: ExperimentConfig, seed: int | None = None, out: str | None = None,
                   budget_mb: float | None = None) -> ExperimentConfig:
    """Apply command-line overrides; ``seed`` shifts the seed list to start at it."""
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        base = cfg.seeds[0]
        cfg.seeds = [seed + s - base for s in cfg.seeds]
        for block in (cfg.environment, cfg.continuous):
            if block is not None:
                block["seed"] = int(seed)
    if out is not None:
        cfg.output = out
    if budget_mb is not None:
        cfg.budget_mb = float(budget_mb)
    return cfg


def _load_default(kind: str) -> dict[str, Any]:
    return copy.deepcopy(DEFAULT_CONFIGS[kind])


DEFAULT_CONFIGS: dict[str, dict] = {
    "geometry": {"kind": "geometry", "range": "cube:d=2"},
    "rate": {"kind": "rate",
             "environment": {"model": "homogeneous", "range": "nn:d=1", "kappa": 0.5},
             "horizons": [128, 256, 512, 1024],
             "directions": [[-0.5], [-0.25], [0.0], [0.25], [0.5]],
             "checks": ["ellipticity", "convexity", "cramer", "cramer-hat"]},
    "shape": {"kind": "shape",
              "continuous": {"model": "homogeneous", "dim": 1, "kappa1": 0.25, "kappa2": 0.5,
                             "rates": [0.5, 0.5]},
              "t_grid": [8, 16, 32, 64]},
    "mc-check": {"kind": "mc-check",
                 "continuous": {"model": "iid-time-space", "dim": 1, "kappa1": 0.25,
                                "kappa2": 0.75},
                 "params": {"t": 4.0, "targets": [[-2], [0], [2]], "samples": 100000}},
    "ldp": {"kind": "ldp",
            "environment": {"model": "homogeneous", "range": "nn:d=1", "kappa": 0.5},
            "horizons": [256, 512, 1024, 2048],
            "params": {"reference": "cramer",
                       "sets": [{"box": {"lo": [0.4], "hi": [0.6]}, "closed": True},
                                {"box": {"lo": [0.4], "hi": [0.6]}, "closed": False}]}},
    "quench": {"kind": "quench",
               "environment": {"model": "iid-time-space", "range": "nn:d=1", "kappa": 0.1},
               "directions": [[k / 10] for k in range(-8, 9, 2)],
               "seeds": [1, 2]},
    "even-time": {"kind": "even-time",
                  "environment": {"model": "iid-time-space", "range": "nn:d=1", "kappa": 0.1},
                  "directions": [[0.3]]},
    "dump-env": {"kind": "dump-env",
                 "environment": {"model": "spin-flip", "range": "nn:d=1", "kappa": 0.1}},
}


def default_config(kind: str) -> ExperimentConfig:
    if kind not in DEFAULT_CONFIGS:
        raise ConfigError([f"unknown kind {kind!r}"])
    return validate(_load_default(kind))
