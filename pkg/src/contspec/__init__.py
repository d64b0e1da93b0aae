"""Continuous-index spherical field analysis.

Submodules:
    specfun    hypergeometric and Ferrers functions of real degree and order
    angular    angular basis, duals and vector spherical harmonics
    coupling   angular coupling coefficients between field components
    radial     radial Green's-function kernels and the coupled solver
    galerkin   Galerkin angular eigenproblem
    spectral   spectral-integral synthesis and truncation studies
    weightfit  constrained fitting of the spectral weight to boundary data
    energy     energy admissibility, Maxwell residuals and wedge cavities
    cli        command-line front end
"""

__version__ = "0.1.0"

from . import errors  # noqa: E402
from .angular import ModeIndex  # noqa: E402
from .errors import ContspecError, ValidationError  # noqa: E402

__all__ = ["__version__", "errors", "ModeIndex", "ContspecError", "ValidationError"]
