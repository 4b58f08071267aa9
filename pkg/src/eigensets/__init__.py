"""Eigensets of linear switching systems.

Propagation of compact sets under x' = A(t) x with A(t) in the convex hull of
finitely many generator matrices, Lyapunov exponent brackets, invariant norm
approximation, eigenset extraction and verification, and builders for systems
realizing prescribed convex bodies.
"""

from .core import (
    ControlSet,
    InvalidInputError,
    ResourceError,
    Schedule,
    Trajectory,
    fundamental_matrix,
    irreducibility_test,
    mat_exp,
    point_in_hull,
    shift,
    simulate,
)
from .spectral import (
    ExponentBracket,
    IsotropyCertificate,
    NormApprox,
    barabanov_norm,
    dominant_regimes,
    isotropy_test,
    lyapunov_exponent,
    normalize,
    spectral_abscissa,
)
from .reach import (
    PointCloud,
    VerifyReport,
    convexity_defect,
    eigenset_verify,
    hausdorff,
    ivy,
    omega_limit,
    reach_set,
    step_map,
    vertex_kernel_check,
)
from .construct import (
    BodySpec,
    SubspacePair,
    example20_system,
    projector_operator,
    simplex_system,
    symmetric_body_system,
    trapezoid_fixture,
)

__version__ = "0.1.0"
