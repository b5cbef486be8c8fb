"""Means and covariances of random variables on matrix Lie groups."""

from .covariance import (
    CovReport,
    euclidean_covariance,
    frechet_variance,
    group_covariance,
    karcher_covariance,
    propagate,
    weighted_cost,
    weighted_cost_gradient,
)
from .distributions import (
    EmpiricalDistribution,
    expect_matrix,
    invert,
    make_empirical,
    product_distribution,
    sample_concentrated,
    sample_uniform_haar,
    shift,
    symmetrize,
)
from .errors import (
    DomainError,
    GroupMismatch,
    LieMeansError,
    MembershipError,
    NearZeroSum,
    NonConvergence,
    SingularCovariance,
    SingularInput,
)
from .groups import (
    BUILTIN_NAMES,
    PoseParts,
    group_action_se,
    make_group,
    project_special_orthogonal,
    quat_to_so3,
    se_compose,
    se_split,
    so3_to_quat,
)
from .lie_core import (
    Ad_matrix,
    GroupSpec,
    ad_matrix,
    group_exp,
    group_log,
    hat,
    is_unimodular,
    jacobian_exp,
    jacobian_log,
    orthonormalize_basis,
    vee,
)
from .means import (
    MeanReport,
    SolverConfig,
    cost_L,
    cost_L_gradient,
    euclidean_mean,
    frechet_mean,
    group_theoretic_mean,
    karcher_mean,
    log_euclidean_mean,
    multi_start_group_means,
    projected_mean,
    quaternion_projected_mean,
)
from .metric import (
    BodySE,
    Chordal,
    DistanceKind,
    Geodesic,
    InnerProduct,
    LogNorm,
    ProductSE3,
    distance,
    frobenius_inner_product,
    geodesic_distance,
    geodesic_flow,
    inner,
    is_ad_invariant,
    riemannian_exp,
    riemannian_log,
    weighted_trace_inner_product,
)

__version__ = "0.1.0"

__all__ = [
    "CovReport",
    "euclidean_covariance",
    "frechet_variance",
    "group_covariance",
    "karcher_covariance",
    "propagate",
    "weighted_cost",
    "weighted_cost_gradient",
    "EmpiricalDistribution",
    "expect_matrix",
    "invert",
    "make_empirical",
    "product_distribution",
    "sample_concentrated",
    "sample_uniform_haar",
    "shift",
    "symmetrize",
    "DomainError",
    "GroupMismatch",
    "LieMeansError",
    "MembershipError",
    "NearZeroSum",
    "NonConvergence",
    "SingularCovariance",
    "SingularInput",
    "BUILTIN_NAMES",
    "PoseParts",
    "group_action_se",
    "make_group",
    "project_special_orthogonal",
    "quat_to_so3",
    "se_compose",
    "se_split",
    "so3_to_quat",
    "Ad_matrix",
    "GroupSpec",
    "ad_matrix",
    "group_exp",
    "group_log",
    "hat",
    "is_unimodular",
    "jacobian_exp",
    "jacobian_log",
    "orthonormalize_basis",
    "vee",
    "MeanReport",
    "SolverConfig",
    "cost_L",
    "cost_L_gradient",
    "euclidean_mean",
    "frechet_mean",
    "group_theoretic_mean",
    "karcher_mean",
    "log_euclidean_mean",
    "multi_start_group_means",
    "projected_mean",
    "quaternion_projected_mean",
    "BodySE",
    "Chordal",
    "DistanceKind",
    "Geodesic",
    "InnerProduct",
    "LogNorm",
    "ProductSE3",
    "distance",
    "frobenius_inner_product",
    "geodesic_distance",
    "geodesic_flow",
    "inner",
    "is_ad_invariant",
    "riemannian_exp",
    "riemannian_log",
    "weighted_trace_inner_product",
]
