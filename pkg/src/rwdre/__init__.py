"""Quenched large deviations for random walks in dynamic random environments.

Exact quenched transition probabilities on Z^d (discrete and continuous
time), estimators of the quenched rate functions, and numerical checks of
their properties. Submodules load on first use so the command line can fix
the thread count before numba starts.
"""
import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "errors": ["ResourceError"],
    "lattice": ["JumpRange", "Polytope", "UnreachableError", "bridge_bound", "bridge_time_down",
                "bridge_time_up", "convex_hull", "even_lattice_iso", "gauge_norm", "hull_u",
                "min_steps", "parse_jump_range", "reach_set", "reachable"],
    "environment": ["ContinuousEnvSpec", "DiscreteEnvSpec", "EnvironmentField", "RateField"],
    "dp": ["EvenTimeField", "PassageTable", "check_subadditivity", "forward_solve", "passage",
           "solve_points", "solve_targets"],
    "ctime": ["CtKernelSlab", "FkEstimate", "SrwOracle", "fk_estimate", "positivity_floor",
              "srw_kernel", "srw_rate_J", "uniformize"],
    "rates": ["RateCurve", "LdpReport", "rate_point", "rate_curve", "extrapolate",
              "boundary_extend", "even_time_rate"],
    "config": ["ExperimentConfig", "parse_config", "serialize"],
    "runner": ["RunManifest", "run", "report"],
}
_WHERE = {name: mod for mod, names in _EXPORTS.items() for name in names}

__all__ = sorted(_WHERE)


def __getattr__(name):
    if name in _WHERE:
        return getattr(importlib.import_module(f".{_WHERE[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
