"""Exclusion channel coupled to finite particle reservoirs.

Simulation and verification toolkit: exact kinetic Monte Carlo for the
particle system, the dual sticky random walk, the closed ODEs for
expected densities, analytic references for the four time-scale
regimes, and an experiment harness with a CLI.
"""

from ._backend import backend_name
from .model import (
    BoundaryDensities,
    InitialCondition,
    InvalidTransitionError,
    ParticleConfig,
    SystemParams,
)
from .density import DensityProfile, evolve, evolve_dirichlet
from .engine import EnsembleStats, RngStream, ensemble_density, run_until
from .limits import LimitRegime

__version__ = "0.1.0"

__all__ = [
    "BoundaryDensities",
    "DensityProfile",
    "EnsembleStats",
    "InitialCondition",
    "InvalidTransitionError",
    "LimitRegime",
    "ParticleConfig",
    "RngStream",
    "SystemParams",
    "backend_name",
    "ensemble_density",
    "evolve",
    "evolve_dirichlet",
    "run_until",
    "__version__",
]
