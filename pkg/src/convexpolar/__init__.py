"""Numerical convex duality through quadratic polarities.

Homogeneous-coordinate polarities, Legendre-Fenchel conjugation of sampled
and smooth functions, decompositions of quadratic polarities into deformed
Legendre polarities, and polar (total) Fenchel-Young divergences.
"""

from convexpolar.errors import (
    ConvexPolarError,
    DimensionMismatch,
    IdealPoint,
    MissingGradients,
    NoConvergence,
    NullSpaceAmbiguous,
    OutOfGrid,
    OutOfRange,
    RankDeficient,
    SingularMatrix,
)
from convexpolar.projective import (
    ProjectivePoint,
    dehomogenize,
    lift,
    projectively_equal,
)
from convexpolar.polarity import (
    ConvexBody,
    CostMatrix,
    EnvelopeResult,
    Halfspace,
    dual_polar_membership,
    involution_check,
    legendre_matrix,
    pairing,
    polar_boundary_envelope,
    polar_halfspace,
    polar_membership,
)
from convexpolar.legendre import (
    SampledFunction,
    biconjugate,
    conjugate_bruteforce,
    conjugate_fast_1d,
    conjugate_smooth,
    epigraph_body,
    verify_legendre_polarity,
)
from convexpolar.transforms import (
    AffineDeformation,
    DualSideParams,
    PrimalSideParams,
    apply_deformation,
    decompose_S,
    decompose_T,
    generalized_lft_dual_side,
    generalized_lft_primal_side,
    relate_T_S,
    verify_thm_S,
    verify_thm_T,
)
from convexpolar.divergences import (
    DivergenceReport,
    bregman,
    fenchel_young,
    polar_fenchel_young,
    polar_total_fenchel_young,
    polar_total_fenchel_young_dual,
    swap_check,
    total_bregman,
)
from convexpolar.ctransform import QuadraticCost, c_transform, cost_to_polarity_matrix

__version__ = "0.1.0"
