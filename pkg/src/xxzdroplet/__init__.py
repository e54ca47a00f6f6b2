"""Droplet spectra and algebraic structure of the ferromagnetic XXZ chain.

Subpackages by task:

* ``sector_basis`` -- magnetization sectors, gap coordinates, ring orbits
* ``operators``    -- sector Hamiltonians for four boundary conditions,
                      momentum blocks, truncated droplet kernels
* ``bethe``        -- exact droplet dispersion and eigenvector certification
* ``brackets``     -- bracket (highest-weight) bases, Temperley-Lieb moves,
                      the intertwining map to the Ising sector, quantum-group
                      ladder operators
* ``spectra``      -- dense/Lanczos/generalized eigensolvers, positivity and
                      domination checks, geometric extrapolation
* ``cli``          -- command-line scans and verification suites
"""

from .operators import Anisotropy, BoundaryCondition

__version__ = "0.1.0"

__all__ = ["Anisotropy", "BoundaryCondition", "__version__"]
