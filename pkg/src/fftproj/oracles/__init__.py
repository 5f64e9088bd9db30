"""Independent reference solutions and diagnostics."""

from .eshelby import EshelbyProblem, eshelby_field, eshelby_periodic
from .fem import FEMSolution, fem_direct_solve
from .ringing import HIGH_BAND_FRACTION, ringing_score, voxel_average, voxel_ringing_score

__all__ = [
    "EshelbyProblem",
    "FEMSolution",
    "HIGH_BAND_FRACTION",
    "eshelby_field",
    "eshelby_periodic",
    "fem_direct_solve",
    "ringing_score",
    "voxel_average",
    "voxel_ringing_score",
]
