"""Numerical laboratory for the diffusion-free wall condition of Navier-Stokes.

Model problems (1D heat, periodic channel, annulus, boundary-layer profile)
with swappable wall conditions, plus conservation diagnostics.
"""

from difffree.bc import BoundaryCondition

__version__ = "0.1.0"

__all__ = ["BoundaryCondition", "__version__"]
