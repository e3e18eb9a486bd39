"""Modified orthogonal polynomials from moments.

Moments of a new weight against a classical family fill a Gram matrix by
recurrence; its Cholesky factor (computed by a displacement-structured or
hierarchical algorithm) gives the connection coefficients to the new
orthonormal family, its Jacobi matrix and coefficient transforms.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .families import (  # noqa: F401
    Family,
    Kind,
    TridiagonalSection,
    BandedSection,
    multiplication_matrix,
    mass_matrix,
    differentiation_matrix,
    raising_matrix,
    weighted_lowering_matrix,
    evaluate,
    apply_diff_pseudoinverse,
)
from .moments import (  # noqa: F401
    MomentVector,
    Provenance,
    WeightOde,
    SimpleFunction,
    moments_from_ode,
    ode_moments,
    moments_clenshaw_curtis,
    moments_log_chebyshev,
    moments_abs_x,
    moments_log_weight,
    moments_simple_function,
    moments_weighted_simple_function,
    moment_errors,
    moment_bound_bv,
    moment_bound_bv2,
)
from .gram import (  # noqa: F401
    GramSection,
    Storage,
    gram_from_moments,
    gram_banded_from_moments,
    tph_matvec,
    ChebyshevGramOperator,
)
from .displacement import (  # noqa: F401
    GeneratorPair,
    TriangularFactor,
    build_generators,
    fast_cholesky,
    cholesky_dense_reference,
)
from .hodlr import (  # noqa: F401
    HodlrMatrix,
    HodlrCholesky,
    LowRankBlock,
    hodlr_compress,
    hodlr_cholesky,
    hodlr_matvec,
    hodlr_solve_triangular,
    rank_bound,
)
from .connection import (  # noqa: F401
    Backend,
    ConnectionProblem,
    ModifiedJacobiSection,
    connection_coefficients,
    modified_jacobi,
    convert_to_known,
    convert_to_modified,
    synthesize,
)
