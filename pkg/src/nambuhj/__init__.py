"""Volume Nambu-Poisson mechanics: n-ary brackets, Hamiltonian flows and
Hamilton-Jacobi checks for sections of R^{n-1} x R -> R^{n-1}."""

from .errors import (ConfigError, DegenerateError, DomainError, DomainExitError, ExprSyntaxError, NambuError,
                     StationaryPointError, StepUnderflowError)
from .expr import CoefficientTable, parse, pretty_print
from .fields import ScalarField, VectorField
from .nambu import HamiltonianTuple, VolumeNPStructure, bracket, hamiltonian_vector_field

__version__ = "0.1.0"

__all__ = [
    "CoefficientTable", "ConfigError", "DegenerateError", "DomainError", "DomainExitError", "ExprSyntaxError",
    "HamiltonianTuple", "NambuError", "ScalarField", "StationaryPointError", "StepUnderflowError",
    "VectorField", "VolumeNPStructure", "bracket", "hamiltonian_vector_field", "parse", "pretty_print",
    "__version__",
]
