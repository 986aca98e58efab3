"""Harnack estimates for parabolic equations driven by Pucci extremal operators.

Modules
-------
nonlinearity   admissible gradient terms, validators, Osgood classifier
pucci          extremal operators on small symmetric matrices
counterexample the closed-form family violating an unweighted Harnack bound
geometry       parabolic cubes, waiting sets, intrinsic scale
solver         monotone explicit finite differences in one and two dimensions
harness        intrinsic and global Harnack probes, oscillation decay
cli            command-line entry point
"""

from .geometry import ParabolicCube, WaitingSetMinus, WaitingSetPlus, intrinsic_scale
from .nonlinearity import Nonlinearity, from_id
from .pucci import EllipticityPair, SymMatrix, pucci_minus, pucci_plus

__all__ = [
    "EllipticityPair", "Nonlinearity", "ParabolicCube", "SymMatrix", "WaitingSetMinus",
    "WaitingSetPlus", "from_id", "intrinsic_scale", "pucci_minus", "pucci_plus",
]
