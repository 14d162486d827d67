"""Real eigenvalue statistics for products of real Gaussian matrices."""

from .exactnum import ExactValue, ZetaPolynomial, determinant, gamma_half, to_float
from .kernels import (
    DensityGrid,
    KernelEntries,
    density_complex,
    density_real,
    global_density,
    kernel_entries_complex,
    kernel_entries_real,
    local_density_origin,
    local_density_origin_complex,
    pre_kernel_real,
    two_point_real,
)
from .moments import UnsupportedModeError, a_exact, alpha_matrix, sign_moment
from .montecarlo import McConfig, SpectrumSample, estimate_distribution, histogram_real_global, sample_spectrum
from .probabilities import (
    RealCountDistribution,
    expected_reals,
    pnull,
    pnull_fit,
    prob_all_real,
    real_count_distribution,
)
from .special import QuadratureError, QuadratureSpec, hyper_0Fm, integrate, meijer_a_numeric
from .weights import ProductSpec, skew_norm, skew_poly, weight_wc, weight_wr

__version__ = "0.1.0"
