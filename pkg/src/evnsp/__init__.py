"""Structured-grid simulator for a damped elastic Navier-Stokes-Poisson
system on a periodic slab, with its constraint, energy, and reformulation
structure exposed as runtime diagnostics."""

__version__ = "0.1.0"

import os as _os

# Honor EVNSP_THREADS before any numpy import pulls in a BLAS; 1 is the
# bit-exact reference mode.
_threads = _os.environ.get("EVNSP_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .config import RunConfig, load_config
from .grid import BoundarySpec, Grid
from .model_full import BipolarState, FullState, PhysParams
from .model_reduced import ReducedState, project_reduced, reconstruct_full
from .runner import run
from .timestepper import well_prepared_init
from .verify import verify

__all__ = [
    "__version__", "RunConfig", "load_config", "BoundarySpec", "Grid",
    "BipolarState", "FullState", "PhysParams", "ReducedState",
    "project_reduced", "reconstruct_full", "run", "well_prepared_init",
    "verify",
]
