"""Superintegrable chiral Potts / tau2 model: sectors, Onsager eigenvectors
and loop-algebra (Fabricius-McCoy) currents, with numerical certificates."""

from .algebra import TAU_GRP, TAU_ID
from .tau2 import Tau2Spec

__all__ = ["TAU_GRP", "TAU_ID", "Tau2Spec"]
__version__ = "0.1.0"
