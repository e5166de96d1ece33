"""Numerical laboratory for weighted Bergman spaces on the unit disc.

Weights, Carleson-square geometry, adaptive quadrature in polar coordinates,
class-membership constants sampled over dyadic square families, norm
equivalence suites, Carleson measures and the Volterra operator.
"""

from .geometry import (CarlesonSquare, InvalidAnchorError, InvalidParameterError, InvalidRegionError,
                       KTop, PolarRect, PseudoDisc, SquareFamily, StolzRegion, carleson_square,
                       dyadic_family, k_top, pseudo_distance)
from .quadrature import IntegralResult, QuadratureSpec, integrate, integrate_segment
from .estimates import ConstantEstimate
from .weights import (CapabilityError, InvalidWeightError, Weight, beta_shift, constant,
                      exponential, exponential_twist, horizontal_average, radial_power, spiral_w,
                      standard, stolz_indicator, tilde_average, user_weight)
from .weight_classes import (binfty_scan, bp_constant, classify, dcheck_beta, dcheck_constant,
                             dhat_constant, kt_estimate, kernel_mass_constant)
from .functions import (AnalyticFunction, KernelPower, LogKernel, Polynomial, bloch_seminorm,
                        derivative, kernel_test_function, monomial, normalized_test_function)
from .norms import (LPReport, bergman_norm, default_suite, lp_functional, lp_ratio_suite,
                    subharmonic_bound_check, tilde_equivalence_suite)
from .carleson import (AtomicMeasure, DensityMeasure, carleson_constant, embedding_lower_bound,
                       hormander_maximal, maximal_power_operator_constant, measure_of,
                       pointwise_domination_check, vanishing_profile)
from .volterra import (apply_tg, resolvent_apply, resolvent_classify, resolvent_solution,
                       tg_bounded_constant, tg_compact_profile, tg_qlessp_norm)
from .kernels import BACKEND

__version__ = "0.1.0"
