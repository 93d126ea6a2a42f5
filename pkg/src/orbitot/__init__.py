"""Exact optimal transport within group orbits.

Closed-form quadratic-cost transport costs and Monge maps for Gaussians,
ellipticals, Wisharts (shared degrees of freedom), products of 1-D scale
families, and general 1-D laws, with algebraic optimality certificates and
independent Monte-Carlo / exact-assignment validation oracles.
"""

from .certificates import (
    CertificateReport,
    CheckResult,
    certify_affine,
    certify_congruence,
    certify_map,
    certify_monotone,
    ks_critical_value,
    pushforward_residual,
)
from .distributions import (
    Empirical,
    EllipticalParams,
    Exponential,
    GaussianParams,
    Lognormal,
    Marginal1D,
    Normal,
    Pareto,
    Product1D,
    Weibull,
    WishartParams,
    cdf,
    quantile,
    sample_distribution,
    sample_elliptical,
    sample_gaussian,
    sample_marginal,
    sample_product,
    sample_wishart,
    sample_wishart_gram,
)
from .errors import (
    DimensionMismatchError,
    IllConditionedError,
    InvalidParameterError,
    OrbitotError,
    QuadratureError,
    SpectrumError,
)
from .matkit import (
    SpdMatrix,
    SvdTriple,
    haar_orthogonal,
    psd_inv_sqrt,
    psd_sqrt,
    svd,
    trace_align,
)
from .oracle import (
    Assignment,
    OracleReport,
    continuity_probe,
    hungarian,
    mc_monge_cost,
    mc_wishart_moment,
    run_validation,
    sampled_kantorovich,
)
from .orbit_transport import (
    FAMILIES,
    Affine,
    AffineMap,
    Congruence,
    CongruenceMap,
    DiagMap,
    DiagScale,
    Monotone1D,
    QuantileMap,
    TransportSolution,
    apply_map,
    closed_form_cost,
    degenerate_gaussian_cost,
    elliptical_cost,
    elliptical_map,
    exponential_product_cost,
    gaussian_cost,
    gaussian_map,
    gaussian_psi,
    optimal_map,
    product1d_cost,
    product1d_map,
    quantile_cost,
    quantile_cost_detail,
    quantile_map,
    regularized_gaussian_cost,
    solve,
    wishart_cost,
    wishart_map,
    wishart_moment,
    wishart_psi,
)

__version__ = "0.1.0"
