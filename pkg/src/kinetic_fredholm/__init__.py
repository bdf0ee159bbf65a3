"""Integral-equation solver and estimate checks for the stationary
linearized and weakly nonlinear Boltzmann equation on convex domains."""
from .errors import (BasisError, ConfigError, DegenerateCollision, DegenerateVelocity, DomainError,
                     GridError, InsufficientData, KineticError, NonContractiveError, ProbeInconclusive,
                     QuadratureError)
from .geometry import (DomainGeometry, ball, boundary_distance, domain_from_config, ellipsoid,
                       exit_data, normal_cosine, pair_geometry, tau_minus, weight_w)
from .velocity import VelocityGrid, VelocityInterpolator
from .spatial import SpatialGrid
from .fields import PhaseSpaceField, read_field_csv, write_field_csv
from .collision import (CollisionKernelTable, CrossSection, GammaOperator, apply_K,
                        assemble_kernel_table, collision_frequency, kernel_k)
from .transport import BoundarySource, VolumetricSource, apply_J, apply_S, source_from_config
from .solver_linear import (LinearProblem, SolveConfig, SolveReport, coercivity_probe,
                            injectivity_probe, smoothing_probe, solve_linear, tail_norm_probe)
from .solver_nonlinear import PicardConfig, picard_solve, quadratic_bound_fit
from .regularity import gamma_derivative_check, holder_seminorm, w1p_check, weighted_norms
from .cache import cache_kernel

__version__ = "0.1.0"
