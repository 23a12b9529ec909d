"""Imported before any compiled kernel is defined."""
import numba

# Prefer OpenMP: older TBB builds are rejected by numba with a warning.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
