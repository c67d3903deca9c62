"""Frame multiresolution analysis on the Heisenberg group, sampled on the Fourier side."""

from .group import GroupElement, LatticeSpec, dilate, inverse, multiply
from .hermite import HermiteBasis, NumericalAccuracyError, rep_matrix
from .plancherel import LambdaGrid, OperatorField, build_grid, dilate_field, hs_norm, hs_norm_sq
from .shannon import MultiplicityFn, SincSystem, build_sinc, project
from .frames import admissible, frame_bounds_estimate, optimize_generator, parseval_check, wavelet_from_scaling

__version__ = "0.1.0"
