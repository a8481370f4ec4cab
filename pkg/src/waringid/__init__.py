"""Simultaneous Waring decompositions of polynomial vectors.

Two complementary engines: monodromy loops on parameter homotopies count
and classify decompositions of a random real instance over C and R, and
an exact prime-field rank criterion certifies uniqueness of the complex
decomposition at sub-generic rank.
"""

from .certify import (
    CertifierRun,
    DefectivityProbe,
    IdentCertificate,
    certify_at_k,
    certify_descend,
    contact_hessian,
    probe_defectivity,
    random_variety_points,
    terracini_matrix,
)
from .linalg import (
    DEFAULT_PRIME,
    RETRY_PRIME,
    PrimeField,
    SingularSystemError,
    kernel_basis_modp,
    lu_solve,
    numerical_rank,
    rank_modp,
)
from .monodromy import (
    MonodromyReport,
    SolutionClass,
    canonicalize,
    generate_start_instance,
    run_monodromy,
    triangle_loop,
)
from .polyspace import (
    MonomialBasis,
    ProblemSpec,
    SummandParams,
    forward_hessian_contraction,
    forward_jacobian,
    forward_map,
    monomial_basis,
    multinomial,
)
from .system import (
    ConfigurationError,
    DecompositionPoint,
    RankInfo,
    WaringSystem,
    build_system,
    jacobian,
    rank_info,
    residual,
)
from .tracker import (
    PathResult,
    RefineResult,
    TrackOptions,
    newton_refine,
    track_segment,
)

__version__ = "0.1.0"
