"""Exact and numerical experiments on matrix-group actions on tori."""

__version__ = "0.1.0"

from .exact_core import (  # noqa: F401
    GroupPresentation,
    IntMatrix,
    SymbolicPoint,
    Word,
    apply_automorphism,
    block_diag,
    enumerate_words,
    evaluate_word,
    orbit_mod_q,
    rational_kernel,
    rational_point,
    sl2z,
    vector_symbol,
)
from .structure import (  # noqa: F401
    AffineUnion,
    Finite,
    FiniteTimesFull,
    FullProduct,
    HypothesisError,
    Independent,
    build_affine_closure,
    centralizer_basis,
    classify_pair,
    classify_tuple,
    closure_membership,
    finite_orbit,
    is_rationally_dependent,
    rank_and_basis,
)
from .density import (  # noqa: F401
    CoveringBound,
    DenseReport,
    DensityCertificate,
    Exhausted,
    FiniteReport,
    Inconclusive,
    Realization,
    covering_radius_circle,
    covering_radius_torus,
    dilation_search,
    discrepancy,
    instantiate,
    orbit_density_probe,
    plan_sample_size,
    translate_search,
)
