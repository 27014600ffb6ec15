"""Hamiltonian Monte Carlo sampling of quantum states in angle coordinates."""

__version__ = "0.1.0"

from . import bb84, chsh, diagnostics, hmc, leapfrog, matrix_core, parameterization, targets
from .errors import (BadDimension, BadInitialPoint, ConstraintViolation, HmcStateError,
                     MalformedFile, NonFiniteForce, NonHermitianInput, NotPhysical, SingularMap)
from .hmc import HmcConfig, SampleSet, run_chain, run_chains
from .leapfrog import TrajectoryConfig
from .targets import TargetDensity

__all__ = [
    "bb84", "chsh", "diagnostics", "hmc", "leapfrog", "matrix_core", "parameterization", "targets",
    "BadDimension", "BadInitialPoint", "ConstraintViolation", "HmcStateError", "MalformedFile",
    "NonFiniteForce", "NonHermitianInput", "NotPhysical", "SingularMap",
    "HmcConfig", "SampleSet", "run_chain", "run_chains", "TrajectoryConfig", "TargetDensity",
]
