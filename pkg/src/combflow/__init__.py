"""combflow: exact event-driven simulation of comb-shift flows for 2D
conservation laws, a 1D Riemann module, and a mollified-flow compactness lab.
"""

__version__ = "0.1.0"

from .exactnum import Rational, as_rational, digit, format_rational, half_pow, ifloor, parse_rational
from .geometry import DiagonalStrip, Point2, Rect, RectUnion, point, rect, union_in_strip
from .flux import PiecewiseAffineFlux2, ScalarFlux1D, counterexample_flux, jacobian_eigen, polynomial_flux
from .field import DensityField, MovingPatch, moving_patch
from .tracer import (ChatteringError, NoStabilizationError, ShiftResult,
                     TangentialCrossingError, Trajectory, eventual_shift,
                     inverse_flow, trace, trace_until_stable)
from .combs import (CombLevel, CombSpec, build_comb, comb_covering,
                    psi_digit_oracle, unit_left_comb, unit_up_comb, verify_level)
from .illposed import (AngularData, StripeEvaluator, angle_pattern, build_rho_n,
                       evaluate_u, field_for_box, initial_data_distance,
                       l1_distance, weak_limit_estimate, weak_limit_target,
                       weak_residual)
from .riemann1d import (Contact, Rarefaction, Shock, WaveFan, godunov_solve,
                        scalar_riemann, vector_riemann_contact,
                        vector_riemann_scalar_embedding)
