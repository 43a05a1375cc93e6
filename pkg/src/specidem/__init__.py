"""Spectral idempotents of diagonal plus low-rank operators.

``T = diag(lambda) + alpha beta^H`` on ``C^N``.  The half-plane idempotents are
built by contour quadrature of the formal resolvent, which costs one ``R x R``
inversion per node, and checked against dense oracles.
"""
__version__ = "0.1.0"

from .contour import build_contour, integrate, principal_sqrt
from .core import assemble_core, borel_series, formal_resolvent_apply, invert_core
from .errors import (CollisionError, DimensionError, GateError, InstanceFormatError,
                     NearDefectiveError, QuadratureError, SingularCoreError, SpecidemError,
                     ZeroVectorError)
from .idempotent import (delta_membership, half_plane_idempotent, rectangle_idempotent,
                         sample_delta, verify_pair)
from .localspec import certify, local_two_point_test
from .model import (CoefficientFamily, PerturbedOperator, SpectrumSpec, build_operator,
                    normalize_to_disc, summability_gate)
from .oracle import dense_eig, riesz_oracle

__all__ = [
    "__version__",
    "SpectrumSpec", "CoefficientFamily", "PerturbedOperator", "build_operator",
    "normalize_to_disc", "summability_gate",
    "build_contour", "integrate", "principal_sqrt",
    "borel_series", "assemble_core", "invert_core", "formal_resolvent_apply",
    "delta_membership", "sample_delta", "half_plane_idempotent", "verify_pair",
    "rectangle_idempotent",
    "certify", "local_two_point_test",
    "dense_eig", "riesz_oracle",
    "SpecidemError", "DimensionError", "ZeroVectorError", "CollisionError",
    "SingularCoreError", "QuadratureError", "NearDefectiveError", "GateError",
    "InstanceFormatError",
]
