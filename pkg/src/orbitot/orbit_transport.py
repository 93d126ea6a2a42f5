"""Closed-form transport costs and Monge maps within group orbits.

Each supported family is the orbit of a reference law under a group acting on
the outcome space: Gaussians/ellipticals under affine maps, Wisharts under
congruence X -> G X G^T, exponential products under coordinate-wise scaling,
and 1-D laws under increasing reparameterization.  For measures on a common
orbit the quadratic-cost Monge problem collapses to an optimization over the
stabilizer of the reference law, whose minimizer is available in closed form;
this module evaluates those closed forms, builds the optimal maps, and
exposes the stabilizer-reduced objective psi(Q) so optimality can be probed
against random competitors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import expit, logit

from .distributions import (
    EllipticalParams,
    Empirical,
    Exponential,
    GaussianParams,
    Marginal1D,
    Product1D,
    WishartParams,
)
from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    QuadratureError,
)
from .matkit import (
    SpdMatrix,
    _as_square,
    psd_inv_sqrt,
    psd_sqrt,
    singular_values,
    sqrt_psd_array,
)

FAMILIES = ("gaussian", "elliptical", "wishart", "product1d", "quantile1d")

_DET_FLOOR = 1e-12
_ORTHO_TOL = 1e-8
_QUANTILE_CLIP = 1e-15


# ---------------------------------------------------------------------------
# group elements
# ---------------------------------------------------------------------------

def _check_invertible(m: np.ndarray, name: str) -> np.ndarray:
    m = _as_square(m, name)
    if abs(np.linalg.det(m)) <= _DET_FLOOR:
        raise InvalidParameterError(f"{name} is numerically singular (|det| <= {_DET_FLOOR})")
    return m


class Affine:
    """Group element z -> shift + linear z with invertible linear part."""

    __slots__ = ("shift", "linear")

    def __init__(self, shift, linear):
        self.shift = np.asarray(shift, dtype=float).reshape(-1)
        self.linear = _check_invertible(np.asarray(linear, dtype=float), "affine linear part")
        if self.shift.shape[0] != self.linear.shape[0]:
            raise DimensionMismatchError("affine shift and linear part disagree on dimension")

    def apply(self, x):
        return np.asarray(x, dtype=float) @ self.linear.T + self.shift

    def compose(self, other: "Affine") -> "Affine":
        return Affine(self.shift + self.linear @ other.shift, self.linear @ other.linear)

    def inverse(self) -> "Affine":
        inv = np.linalg.inv(self.linear)
        return Affine(-inv @ self.shift, inv)


class Congruence:
    """Group element X -> g X g^T on the SPD cone, g invertible."""

    __slots__ = ("g",)

    def __init__(self, g):
        self.g = _check_invertible(np.asarray(g, dtype=float), "congruence factor")

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return self.g @ x @ self.g.T

    def compose(self, other: "Congruence") -> "Congruence":
        return Congruence(self.g @ other.g)

    def inverse(self) -> "Congruence":
        return Congruence(np.linalg.inv(self.g))


class DiagScale:
    """Coordinate-wise scaling z -> beta * z with strictly positive beta."""

    __slots__ = ("beta",)

    def __init__(self, beta):
        self.beta = np.asarray(beta, dtype=float).reshape(-1)
        if np.any(~np.isfinite(self.beta)) or np.any(self.beta <= 0):
            raise InvalidParameterError("diagonal scale must be strictly positive")

    def apply(self, x):
        return np.asarray(x, dtype=float) * self.beta

    def compose(self, other: "DiagScale") -> "DiagScale":
        return DiagScale(self.beta * other.beta)

    def inverse(self) -> "DiagScale":
        return DiagScale(1.0 / self.beta)


class Monotone1D:
    """Increasing reparameterization sending the logistic reference law to
    a target marginal; represented by that marginal (the map is
    target_quantile o logistic_cdf)."""

    __slots__ = ("marginal",)

    def __init__(self, marginal: Marginal1D):
        if not isinstance(marginal, Marginal1D):
            raise InvalidParameterError(f"not a 1-D marginal: {marginal!r}")
        self.marginal = marginal

    def apply(self, x):
        t = np.clip(expit(np.asarray(x, dtype=float)), _QUANTILE_CLIP, 1.0 - _QUANTILE_CLIP)
        return self.marginal.quantile(t)

    def apply_inverse(self, y):
        t = np.clip(self.marginal.cdf(np.asarray(y, dtype=float)),
                    _QUANTILE_CLIP, 1.0 - _QUANTILE_CLIP)
        return logit(t)


GroupElement = Affine | Congruence | DiagScale | Monotone1D


def push_gaussian(g: Affine, p: GaussianParams) -> GaussianParams:
    """Law of g(X) for X ~ N(mean, cov): N(shift + A mean, A cov A^T)."""
    cov = g.linear @ p.cov.mat @ g.linear.T
    return GaussianParams(g.shift + g.linear @ p.mean, SpdMatrix(0.5 * (cov + cov.T)))


def push_wishart(g: Congruence, p: WishartParams) -> WishartParams:
    """Law of g X g^T for X ~ W_d(scale, p): W_d(g scale g^T, p)."""
    scale = g.g @ p.scale.mat @ g.g.T
    return WishartParams(SpdMatrix(0.5 * (scale + scale.T)), p.dof)


def push_exponential_product(g: DiagScale, p: Product1D) -> Product1D:
    """Law of beta * X coordinate-wise for exponential marginals: rate/beta."""
    if not p.all_exponential():
        raise InvalidParameterError("scaling push-forward is implemented for exponential products")
    return Product1D(tuple(
        Exponential(m.beta / b) for m, b in zip(p.marginals, g.beta)
    ))


# ---------------------------------------------------------------------------
# Monge maps
# ---------------------------------------------------------------------------

def _symmetric_or_raise(m, name) -> np.ndarray:
    m = _as_square(m, name)
    scale = max(np.linalg.norm(m), 1e-300)
    if np.linalg.norm(m - m.T) > 1e-10 * scale:
        raise InvalidParameterError(f"{name} must be symmetric")
    m = 0.5 * (m + m.T)
    m.flags.writeable = False
    return m


class AffineMap:
    """Candidate optimal map x -> shift + linear x with symmetric linear part.

    Positive definiteness of the linear part is the optimality certificate,
    so it is checked by the certificate logic rather than at construction;
    indefinite candidates are representable on purpose.
    """

    __slots__ = ("shift", "linear")
    kind = "affine"

    def __init__(self, shift, linear):
        self.shift = np.asarray(shift, dtype=float).reshape(-1)
        self.linear = _symmetric_or_raise(linear, "affine map linear part")
        if self.shift.shape[0] != self.linear.shape[0]:
            raise DimensionMismatchError("affine map shift and linear part disagree")
        self.shift.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.linear.shape[0]


class CongruenceMap:
    """Candidate optimal map X -> t X t with symmetric factor t."""

    __slots__ = ("t",)
    kind = "congruence"

    def __init__(self, t):
        self.t = _symmetric_or_raise(t, "congruence map factor")

    @property
    def dim(self) -> int:
        return self.t.shape[0]


class DiagMap:
    """Coordinate-wise rescaling x -> ratios * x with positive ratios."""

    __slots__ = ("ratios",)
    kind = "diag"

    def __init__(self, ratios):
        self.ratios = np.asarray(ratios, dtype=float).reshape(-1)
        if np.any(~np.isfinite(self.ratios)) or np.any(self.ratios <= 0):
            raise InvalidParameterError("diag map ratios must be strictly positive")
        self.ratios.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.ratios.shape[0]


class QuantileMap:
    """Monotone rearrangement x -> target_quantile(source_cdf(x))."""

    __slots__ = ("source", "target")
    kind = "quantile"

    def __init__(self, source: Marginal1D, target: Marginal1D):
        for m, name in ((source, "source"), (target, "target")):
            if not isinstance(m, Marginal1D):
                raise InvalidParameterError(f"quantile map {name} must be a 1-D marginal")
        self.source = source
        self.target = target


MongeMap = AffineMap | CongruenceMap | DiagMap | QuantileMap


def apply_map(m, points):
    """Evaluate a Monge map on one point or a batch.

    AffineMap and DiagMap accept shape (d,) or (n, d); CongruenceMap accepts
    (d, d) or (n, d, d); QuantileMap accepts scalars or 1-D arrays.  A list
    of 1-D maps is applied column-wise to (n, d) input.
    """
    if isinstance(m, (list, tuple)):
        x = np.asarray(points, dtype=float)
        if x.ndim != 2 or x.shape[1] != len(m):
            raise DimensionMismatchError(
                f"coordinate-wise map over {len(m)} coordinates needs (n, {len(m)}) input"
            )
        return np.column_stack([apply_map(mi, x[:, i]) for i, mi in enumerate(m)])
    if isinstance(m, AffineMap):
        x = np.asarray(points, dtype=float)
        if x.shape[-1] != m.dim:
            raise DimensionMismatchError(f"point dim {x.shape[-1]} != map dim {m.dim}")
        return x @ m.linear + m.shift
    if isinstance(m, CongruenceMap):
        x = np.asarray(points, dtype=float)
        if x.ndim not in (2, 3) or x.shape[-1] != m.dim or x.shape[-2] != m.dim:
            raise DimensionMismatchError(f"congruence map expects ({m.dim}, {m.dim}) blocks")
        out = m.t @ x @ m.t
        axes = (0, 2, 1) if out.ndim == 3 else (1, 0)
        return 0.5 * (out + np.transpose(out, axes))
    if isinstance(m, DiagMap):
        x = np.asarray(points, dtype=float)
        if x.shape[-1] != m.dim:
            raise DimensionMismatchError(f"point dim {x.shape[-1]} != map dim {m.dim}")
        return x * m.ratios
    if isinstance(m, QuantileMap):
        x = np.asarray(points, dtype=float)
        t = np.clip(m.source.cdf(x), _QUANTILE_CLIP, 1.0 - _QUANTILE_CLIP)
        return m.target.quantile(t)
    raise InvalidParameterError(f"not a Monge map: {m!r}")


def map_is_identity(m, tol: float = 1e-8) -> bool:
    """Whether a map is the identity up to tol (probe-based for 1-D maps)."""
    if isinstance(m, (list, tuple)):
        return all(map_is_identity(mi, tol) for mi in m)
    if isinstance(m, AffineMap):
        return (np.max(np.abs(m.linear - np.eye(m.dim))) <= tol
                and np.max(np.abs(m.shift)) <= tol)
    if isinstance(m, CongruenceMap):
        return np.max(np.abs(m.t - np.eye(m.dim))) <= tol
    if isinstance(m, DiagMap):
        return np.max(np.abs(m.ratios - 1.0)) <= tol
    if isinstance(m, QuantileMap):
        probes = m.source.quantile(np.linspace(0.01, 0.99, 33))
        return np.max(np.abs(apply_map(m, probes) - probes)) <= tol * (
            1.0 + np.max(np.abs(probes))
        )
    raise InvalidParameterError(f"not a Monge map: {m!r}")


# ---------------------------------------------------------------------------
# Gaussian / elliptical orbit
# ---------------------------------------------------------------------------

def _check_same_dim(a, b):
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _bures_cost(m0, cov0: SpdMatrix, m1, cov1: SpdMatrix) -> float:
    s1 = psd_sqrt(cov1).mat
    inner = s1 @ cov0.mat @ s1
    cross = np.trace(sqrt_psd_array(inner))
    value = (
        float(np.dot(m0 - m1, m0 - m1))
        + float(np.trace(cov0.mat) + np.trace(cov1.mat))
        - 2.0 * float(cross)
    )
    return max(value, 0.0)


def _optimal_spd_factor(cov0: SpdMatrix, cov1: SpdMatrix) -> np.ndarray:
    """The SPD factor T = S0^{-1} (S0 cov1 S0)^{1/2} S0^{-1} with S0 = cov0^{1/2}.

    This explicit SPD form avoids SVD non-uniqueness and is symmetric by
    construction; it satisfies T cov0 T = cov1.
    """
    s0 = psd_sqrt(cov0).mat
    s0_inv = psd_inv_sqrt(cov0).mat
    inner = s0 @ cov1.mat @ s0
    root = psd_sqrt(SpdMatrix(0.5 * (inner + inner.T))).mat
    t = s0_inv @ root @ s0_inv
    return 0.5 * (t + t.T)


def gaussian_cost(a: GaussianParams, b: GaussianParams) -> float:
    """Squared quadratic-cost optimal transport between two Gaussians.

    ||m0 - m1||^2 + tr(S0 + S1 - 2 (S1^{1/2} S0 S1^{1/2})^{1/2});
    symmetric in its arguments and zero iff the parameters coincide.
    """
    _check_same_dim(a, b)
    return _bures_cost(a.mean, a.cov, b.mean, b.cov)


def gaussian_map(a: GaussianParams, b: GaussianParams) -> AffineMap:
    """Optimal map x -> m1 + T (x - m0) with SPD T satisfying T S0 T = S1."""
    _check_same_dim(a, b)
    t = _optimal_spd_factor(a.cov, b.cov)
    return AffineMap(shift=b.mean - t @ a.mean, linear=t)


def _check_orthogonal(q, dim) -> np.ndarray:
    q = _as_square(q, "orthogonal argument")
    if q.shape[0] != dim:
        raise DimensionMismatchError(f"orthogonal argument has dim {q.shape[0]}, expected {dim}")
    resid = np.max(np.abs(q.T @ q - np.eye(dim)))
    if resid > _ORTHO_TOL:
        raise InvalidParameterError(
            f"argument is not orthogonal (residual {resid:.3e} > {_ORTHO_TOL:.0e})"
        )
    return q


def gaussian_psi(a: GaussianParams, b: GaussianParams, q) -> float:
    """Stabilizer-reduced objective for the Gaussian orbit.

    psi(Q) = ||m0 - m1||^2 + tr(S0) + tr(S1) - 2 tr(S1^{1/2} Q S0^{1/2});
    its minimum over orthogonal Q is gaussian_cost, attained at
    Q* = trace_align(S0^{1/2} S1^{1/2}).
    """
    _check_same_dim(a, b)
    q = _check_orthogonal(q, a.dim)
    s0 = psd_sqrt(a.cov).mat
    s1 = psd_sqrt(b.cov).mat
    dm = a.mean - b.mean
    return (
        float(np.dot(dm, dm))
        + float(np.trace(a.cov.mat) + np.trace(b.cov.mat))
        - 2.0 * float(np.trace(s1 @ q @ s0))
    )


def elliptical_cost(a: EllipticalParams, b: EllipticalParams) -> float:
    """Transport cost between two ellipticals sharing a generator.

    With the generator normalized to unit covariance the affine-orbit
    computation is identical to the Gaussian one on (location, dispersion).
    """
    _check_same_dim(a, b)
    if not a.same_generator(b):
        raise InvalidParameterError(
            "elliptical transport requires a shared generator (same orbit); "
            f"got {a.generator}/{a.nu} vs {b.generator}/{b.nu}"
        )
    return _bures_cost(a.location, a.dispersion, b.location, b.dispersion)


def elliptical_map(a: EllipticalParams, b: EllipticalParams) -> AffineMap:
    """Optimal map between same-generator ellipticals (Gaussian formula)."""
    _check_same_dim(a, b)
    if not a.same_generator(b):
        raise InvalidParameterError(
            "elliptical transport requires a shared generator (same orbit)"
        )
    t = _optimal_spd_factor(a.dispersion, b.dispersion)
    return AffineMap(shift=b.location - t @ a.location, linear=t)


def regularized_gaussian_cost(mean0, cov0, mean1, cov1, eps: float) -> float:
    """Gaussian cost with covariances regularized to cov + eps I.

    Accepts semidefinite covariance arrays; eps > 0 restores positive
    definiteness so the standard closed form applies.
    """
    if eps <= 0:
        raise InvalidParameterError(f"regularization eps must be > 0, got {eps}")
    c0 = _as_square(cov0, "cov0")
    c1 = _as_square(cov1, "cov1")
    eye = np.eye(c0.shape[0])
    # The ridge guarantees positivity, so the relative spectral floor is
    # waived: eps may be far below 1e-10 * largest eigenvalue.
    a = GaussianParams(mean0, SpdMatrix(0.5 * (c0 + c0.T) + eps * eye, spd_floor_ratio=0.0))
    b = GaussianParams(mean1, SpdMatrix(0.5 * (c1 + c1.T) + eps * eye, spd_floor_ratio=0.0))
    return gaussian_cost(a, b)


def degenerate_gaussian_cost(mean0, cov0, mean1, cov1) -> float:
    """Continuous extension of the Gaussian cost to semidefinite covariances.

    Evaluated with eigenvalue-clamped PSD roots; this is the eps -> 0 limit
    of regularized_gaussian_cost.  No Monge map is produced here: for a
    singular covariance the optimal value exists but a diffeomorphism
    realizing it need not.
    """
    c0 = _as_square(cov0, "cov0")
    c1 = _as_square(cov1, "cov1")
    if c0.shape != c1.shape:
        raise DimensionMismatchError("covariances must share a dimension")
    m0 = np.asarray(mean0, dtype=float).reshape(-1)
    m1 = np.asarray(mean1, dtype=float).reshape(-1)
    s1 = sqrt_psd_array(c1)
    cross = np.trace(sqrt_psd_array(s1 @ (0.5 * (c0 + c0.T)) @ s1))
    value = (
        float(np.dot(m0 - m1, m0 - m1))
        + float(np.trace(c0) + np.trace(c1))
        - 2.0 * float(cross)
    )
    return max(value, 0.0)


# ---------------------------------------------------------------------------
# Wishart orbit
# ---------------------------------------------------------------------------

def _check_shared_dof(a: WishartParams, b: WishartParams) -> float:
    _check_same_dim(a, b)
    if a.dof != b.dof:
        raise InvalidParameterError(
            f"dof mismatch: shared-orbit Wishart transport requires equal degrees "
            f"of freedom, got {a.dof} and {b.dof}"
        )
    return a.dof


def _sym_trace_product(x: np.ndarray, y: np.ndarray) -> float:
    # tr(XY) for symmetric X, Y, with the two traversal orders averaged to
    # kill asymmetric round-off.
    return 0.5 * float(np.einsum("ij,ji->", x, y) + np.einsum("ij,ji->", y, x))


def wishart_cost(a: WishartParams, b: WishartParams) -> float:
    """Squared-Frobenius optimal transport between Wisharts sharing dof p.

    With L the singular values of S0^{1/2} S1^{1/2}:
        p (tr(S0)^2 + tr(S1)^2 - 2 tr(L)^2 - 2 tr(L^2))
        - 2 p^2 tr(S0 S1) + p (p+1) (tr(S0^2) + tr(S1^2)).
    Symmetric in its arguments and zero iff the scales coincide.
    """
    p = _check_shared_dof(a, b)
    s0 = a.scale.mat
    s1 = b.scale.mat
    lam = singular_values(psd_sqrt(a.scale).mat @ psd_sqrt(b.scale).mat)
    tr_l = float(np.sum(lam))
    tr_l2 = float(np.sum(lam**2))
    tr0 = float(np.trace(s0))
    tr1 = float(np.trace(s1))
    tr01 = _sym_trace_product(s0, s1)
    fro0 = float(np.sum(s0 * s0))
    fro1 = float(np.sum(s1 * s1))
    value = (
        p * (tr0**2 + tr1**2 - 2.0 * tr_l**2 - 2.0 * tr_l2)
        - 2.0 * p * p * tr01
        + p * (p + 1.0) * (fro0 + fro1)
    )
    return max(value, 0.0)


def wishart_map(a: WishartParams, b: WishartParams) -> CongruenceMap:
    """Optimal map X -> T X T with the same SPD factor as the Gaussian case."""
    _check_shared_dof(a, b)
    return CongruenceMap(_optimal_spd_factor(a.scale, b.scale))


def wishart_moment(u, v, p: float, d: int) -> float:
    """E[tr(U X V X)] for X ~ W_d(I, p):
    p tr(U) tr(V) + p tr(U V^T) + p^2 tr(U V)."""
    u = _as_square(u, "u")
    v = _as_square(v, "v")
    if u.shape[0] != d or v.shape[0] != d:
        raise DimensionMismatchError(f"u, v must be {d} x {d}")
    tr_uv_t = float(np.sum(u * v))
    tr_uv = float(np.einsum("ij,ji->", u, v))
    return p * float(np.trace(u)) * float(np.trace(v)) + p * tr_uv_t + p * p * tr_uv


def wishart_psi(a: WishartParams, b: WishartParams, q) -> float:
    """Stabilizer-reduced objective for the Wishart orbit, exactly evaluated.

    psi(Q) = E ||S0^{1/2} X S0^{1/2} - S1^{1/2} Q X Q^T S1^{1/2}||_F^2 with
    X ~ W_d(I, p); the squared-norm expansion gives two fixed terms plus the
    cross term p tr(M Q)^2 + p tr(M Q M Q) + p^2 tr(M M^T), M = S0^{1/2} S1^{1/2}.
    Its minimum over orthogonal Q is wishart_cost, attained at trace_align(M).
    """
    p = _check_shared_dof(a, b)
    q = _check_orthogonal(q, a.dim)
    s0 = a.scale.mat
    s1 = b.scale.mat
    m = psd_sqrt(a.scale).mat @ psd_sqrt(b.scale).mat
    first = p * float(np.trace(s0)) ** 2 + p * (p + 1.0) * float(np.sum(s0 * s0))
    second = p * float(np.trace(s1)) ** 2 + p * (p + 1.0) * float(np.sum(s1 * s1))
    mq = m @ q
    cross = (
        p * float(np.trace(mq)) ** 2
        + p * float(np.einsum("ij,ji->", mq, mq))
        + p * p * float(np.sum(m * m))
    )
    return first + second - 2.0 * cross


# ---------------------------------------------------------------------------
# product and 1-D orbits
# ---------------------------------------------------------------------------

def exponential_product_cost(beta0, beta1) -> float:
    """Closed form 2 sum_i (1/beta0_i - 1/beta1_i)^2 for exponential products."""
    b0 = np.asarray(beta0, dtype=float).reshape(-1)
    b1 = np.asarray(beta1, dtype=float).reshape(-1)
    if b0.shape != b1.shape:
        raise DimensionMismatchError("rate vectors must share a length")
    if np.any(b0 <= 0) or np.any(b1 <= 0):
        raise InvalidParameterError("exponential rates must be positive")
    return 2.0 * float(np.sum((1.0 / b0 - 1.0 / b1) ** 2))


@dataclass(frozen=True)
class QuadratureDetail:
    """Quantile-cost quadrature breakdown: value = core + tail contributions."""

    value: float
    abs_error: float
    tail: float


def _quad_piece(f, lo: float, hi: float, epsabs: float, epsrel: float, label: str,
                points=None):
    kwargs = dict(epsabs=epsabs, epsrel=epsrel, limit=500, full_output=True)
    if points is not None:
        kwargs["points"] = points
    out = quad(f, lo, hi, **kwargs)
    return out[0], out[1], len(out) <= 3, label


def _knot_segment_integral(a: Marginal1D, b: Marginal1D, knots: np.ndarray):
    """Integral of the squared quantile difference over [knots[0], knots[-1]].

    Between consecutive knots the integrand is polynomial (quadratic when
    both marginals are empirical) or smooth, so fixed-order Gauss-Legendre
    per segment is exact up to rounding; the error is estimated by the
    difference against a lower-order rule.
    """
    lo, hi = knots[:-1], knots[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    if lo.size == 0:
        return 0.0, 0.0
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)

    def rule(order):
        nodes, weights = np.polynomial.legendre.leggauss(order)
        ts = mid[:, None] + half[:, None] * nodes[None, :]
        diff = b.quantile(ts.ravel()) - a.quantile(ts.ravel())
        vals = (diff * diff).reshape(ts.shape)
        return float(np.sum(half * (vals @ weights)))

    high, low = rule(15), rule(7)
    return high, abs(high - low) + 1e-15 * abs(high)


def quantile_cost_detail(a: Marginal1D, b: Marginal1D, eps: float = 1e-10) -> QuadratureDetail:
    """Adaptive quadrature of (Qb(t) - Qa(t))^2 over (0, 1).

    The integral is split at 1/2 so that any quantile divergence sits exactly
    at an integration endpoint, where the extrapolating quadrature handles it
    well: the lower half in t directly, the upper half in u = 1 - t through
    the survival quantiles (which avoid the cancellation in 1 - t that
    power-law tails cannot afford).  The endpoint mass beyond eps, finite by
    the second-moment assumption, is computed separately and reported as the
    tail contribution.  Accuracy target: 1e-8 absolute or 1e-6 relative;
    missing it raises rather than truncating.
    """
    tiny = 5e-324

    def lower_integrand(t):
        t = max(t, tiny)
        diff = b.quantile(t) - a.quantile(t)
        return diff * diff

    def upper_integrand(u):
        u = max(u, tiny)
        diff = b.isf(u) - a.isf(u)
        return diff * diff

    knots = np.unique(np.concatenate([
        m.positions for m in (a, b) if isinstance(m, Empirical)
    ])) if isinstance(a, Empirical) or isinstance(b, Empirical) else None

    if knots is not None and knots.size >= 1:
        # piecewise-linear quantiles: adaptive subdivision stalls on the
        # kinks, so integrate knot segments by per-segment polynomial rules
        # and leave only the beyond-knot ends to the adaptive pieces
        core_value, core_err = _knot_segment_integral(a, b, knots)
        pieces = [
            _quad_piece(lower_integrand, 0.0, float(knots[0]), 1e-13, 1e-10,
                        "lower end"),
            _quad_piece(upper_integrand, 0.0, float(1.0 - knots[-1]), 1e-13, 1e-10,
                        "upper end"),
            _quad_piece(lower_integrand, 0.0, eps, 1e-13, 1e-7, "lower tail"),
            _quad_piece(upper_integrand, 0.0, eps, 1e-13, 1e-7, "upper tail"),
        ]
        value = core_value + pieces[0][0] + pieces[1][0]
        abs_error = core_err + pieces[0][1] + pieces[1][1]
    else:
        pieces = [
            _quad_piece(lower_integrand, 0.0, 0.5, 1e-11, 1e-10, "lower half"),
            _quad_piece(upper_integrand, 0.0, 0.5, 1e-11, 1e-10, "upper half"),
            _quad_piece(lower_integrand, 0.0, eps, 1e-13, 1e-7, "lower tail"),
            _quad_piece(upper_integrand, 0.0, eps, 1e-13, 1e-7, "upper tail"),
        ]
        value = pieces[0][0] + pieces[1][0]
        abs_error = pieces[0][1] + pieces[1][1]
    if (not np.isfinite(value) or not np.isfinite(abs_error)
            or abs_error > max(1e-8, 1e-6 * abs(value))):
        stalled = ", ".join(p[3] for p in pieces[:2] if not p[2]) or "none flagged"
        raise QuadratureError(
            f"quantile-cost error estimate {abs_error:.3e} exceeds the accuracy "
            f"target (non-converged pieces: {stalled})"
        )
    tail = pieces[2][0] + pieces[3][0]
    return QuadratureDetail(value=max(value, 0.0), abs_error=abs_error, tail=tail)


def quantile_cost(a: Marginal1D, b: Marginal1D) -> float:
    """Integral of the squared quantile difference: the 1-D quadratic cost."""
    return quantile_cost_detail(a, b).value


def product1d_cost(a: Product1D, b: Product1D) -> float:
    """Quadratic transport cost between product laws.

    The cost is separable and the measures are products, so the problem
    decouples across coordinates; for all-exponential inputs the exact
    closed form is used, otherwise each coordinate is a 1-D quantile cost.
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"product length mismatch: {a.dim} vs {b.dim}")
    if a.all_exponential() and b.all_exponential():
        return exponential_product_cost(
            [m.beta for m in a.marginals], [m.beta for m in b.marginals]
        )
    return float(sum(quantile_cost(ma, mb) for ma, mb in zip(a.marginals, b.marginals)))


def product1d_map(a: Product1D, b: Product1D):
    """Optimal coordinate-wise map between product laws.

    All-exponential pairs rescale coordinate i by beta0_i / beta1_i;
    otherwise each coordinate gets the monotone rearrangement
    target_quantile o source_cdf.
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"product length mismatch: {a.dim} vs {b.dim}")
    if a.all_exponential() and b.all_exponential():
        return DiagMap([ma.beta / mb.beta for ma, mb in zip(a.marginals, b.marginals)])
    return [QuantileMap(ma, mb) for ma, mb in zip(a.marginals, b.marginals)]


def quantile_map(a: Marginal1D, b: Marginal1D) -> QuantileMap:
    """Monotone rearrangement pushing marginal a to marginal b."""
    return QuantileMap(a, b)


# ---------------------------------------------------------------------------
# family dispatch and solutions
# ---------------------------------------------------------------------------

def closed_form_cost(family: str, a, b) -> float:
    if family == "gaussian":
        return gaussian_cost(a, b)
    if family == "elliptical":
        return elliptical_cost(a, b)
    if family == "wishart":
        return wishart_cost(a, b)
    if family == "product1d":
        return product1d_cost(a, b)
    if family == "quantile1d":
        return quantile_cost(a, b)
    raise InvalidParameterError(f"unknown family {family!r}; supported: {FAMILIES}")


def optimal_map(family: str, a, b):
    if family == "gaussian":
        return gaussian_map(a, b)
    if family == "elliptical":
        return elliptical_map(a, b)
    if family == "wishart":
        return wishart_map(a, b)
    if family == "product1d":
        return product1d_map(a, b)
    if family == "quantile1d":
        return quantile_map(a, b)
    raise InvalidParameterError(f"unknown family {family!r}; supported: {FAMILIES}")


@dataclass(frozen=True)
class TransportSolution:
    """Closed-form cost, optimal map, and the certificate attached to it."""

    family: str
    cost: float
    map: object
    certificate: object

    def __post_init__(self):
        if self.cost < 0:
            raise InvalidParameterError(f"transport cost must be >= 0, got {self.cost}")
        scale_tol = 1e-10 * (1.0 + abs(self.cost))
        if self.cost <= scale_tol and not map_is_identity(self.map, tol=1e-5):
            raise InvalidParameterError(
                "zero transport cost with a non-identity map: inconsistent solution"
            )


def solve(family: str, a, b) -> TransportSolution:
    """Compute cost and map for a family pair and certify the map."""
    from .certificates import certify_map  # local import to avoid a cycle

    cost = closed_form_cost(family, a, b)
    mp = optimal_map(family, a, b)
    cert = certify_map(mp, family, a, b)
    return TransportSolution(family=family, cost=cost, map=mp, certificate=cert)
