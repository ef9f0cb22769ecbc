"""Numerical laboratory for entanglement, perfect correlations, no-go theorems and Bohmian trajectories."""

from .entangle import MaximallyEntangledState, partner_operator, singlet
from .errors import NonlocalityError
from .hilbert import Basis, Operator, StateVector
from .measure import SeededRng

__version__ = "0.1.0"
