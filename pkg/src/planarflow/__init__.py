"""Plane maps, electrical flows, duals, roundabout and medial transforms, and square tilings."""

from .errors import (ContractError, DegenerateMeridianError, InvariantViolation, PlanarFlowError,
                     ResourceError, StructuralError, UnsupportedInputError)
from .fields import EdgeFunction, Potential
from .planarmap import PlanarMap, dual, find_bond, map_isomorphic

__all__ = [
    "PlanarMap", "dual", "find_bond", "map_isomorphic", "EdgeFunction", "Potential",
    "PlanarFlowError", "StructuralError", "UnsupportedInputError", "ContractError",
    "InvariantViolation", "ResourceError", "DegenerateMeridianError",
]
__version__ = "0.1.0"
