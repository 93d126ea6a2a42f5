"""Distribution parameter types and seeded samplers.

Four families of inputs are supported: multivariate Gaussians, elliptical
laws with a finite-variance generator, Wisharts with shared degrees of
freedom, and products of one-dimensional marginals (plus bare 1-D marginals).
Samplers exist so the validation oracles can draw from every family; all are
pure functions of (params, n, seed) and bit-reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DimensionMismatchError, InvalidParameterError
from .matkit import as_spd, psd_sqrt
from .rng import Seed, make_rng

# Uniform draws are clipped into the open interval so quantile() never sees
# an endpoint (rng.random can return exactly 0.0).
_U_LO = 1e-16
_U_HI = 1.0 - 1e-16


# ---------------------------------------------------------------------------
# vector / matrix families
# ---------------------------------------------------------------------------

class GaussianParams:
    """Mean vector and SPD covariance of a nondegenerate Gaussian."""

    __slots__ = ("mean", "cov")

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.mean)):
            raise InvalidParameterError("gaussian mean has non-finite entries")
        self.cov = as_spd(cov)
        if self.mean.shape[0] != self.cov.dim:
            raise DimensionMismatchError(
                f"mean has dim {self.mean.shape[0]} but cov has dim {self.cov.dim}"
            )
        self.mean.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.cov.dim

    def __repr__(self) -> str:
        return f"GaussianParams(dim={self.dim})"


_GENERATORS = ("gaussian", "student_t")


class EllipticalParams:
    """Location, dispersion, and generator of an elliptical law.

    The generator is normalized so that the covariance of the law equals the
    dispersion matrix exactly (for student_t this absorbs the nu/(nu-2)
    variance inflation into the sampler).  nu > 2 is required so the
    quadratic cost is finite.
    """

    __slots__ = ("location", "dispersion", "generator", "nu")

    def __init__(self, location, dispersion, generator="gaussian", nu=None):
        self.location = np.asarray(location, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.location)):
            raise InvalidParameterError("elliptical location has non-finite entries")
        self.dispersion = as_spd(dispersion)
        if self.location.shape[0] != self.dispersion.dim:
            raise DimensionMismatchError(
                f"location dim {self.location.shape[0]} != dispersion dim {self.dispersion.dim}"
            )
        if generator not in _GENERATORS:
            raise InvalidParameterError(
                f"unknown generator {generator!r}; supported: {_GENERATORS}"
            )
        self.generator = generator
        if generator == "student_t":
            if nu is None or not np.isfinite(nu) or nu <= 2.0:
                raise InvalidParameterError(
                    f"student_t generator requires nu > 2 (finite covariance), got {nu!r}"
                )
            self.nu = float(nu)
        else:
            if nu is not None:
                raise InvalidParameterError("nu is only meaningful for student_t")
            self.nu = None
        self.location.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.dispersion.dim

    def same_generator(self, other: "EllipticalParams") -> bool:
        return self.generator == other.generator and self.nu == other.nu

    def __repr__(self) -> str:
        gen = self.generator if self.nu is None else f"student_t(nu={self.nu})"
        return f"EllipticalParams(dim={self.dim}, generator={gen})"


class WishartParams:
    """Scale matrix and real degrees of freedom p >= d.

    p >= d keeps the support inside the positive-definite cone; for d = 1
    this is the scaled chi-square with p degrees of freedom.
    """

    __slots__ = ("scale", "dof")

    def __init__(self, scale, dof):
        self.scale = as_spd(scale)
        dof = float(dof)
        if not np.isfinite(dof) or dof < self.scale.dim:
            raise InvalidParameterError(
                f"wishart dof must satisfy p >= d (support in the SPD cone); "
                f"got p={dof} with d={self.scale.dim}"
            )
        self.dof = dof

    @property
    def dim(self) -> int:
        return self.scale.dim

    def __repr__(self) -> str:
        return f"WishartParams(dim={self.dim}, dof={self.dof})"


# ---------------------------------------------------------------------------
# one-dimensional marginals
# ---------------------------------------------------------------------------

class Marginal1D:
    """A 1-D law exposing quantile, cdf, and inverse-cdf sampling.

    Subclasses keep their quantile strictly increasing on (0,1) and their
    second moment finite (enforced through parameter bounds), which is what
    the quantile-transport machinery needs.
    """

    family = "base"

    def quantile(self, t):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def isf(self, u):
        """Upper-tail quantile F^{-1}(1 - u); overridden where a direct
        formula avoids the cancellation in 1 - u."""
        return self.quantile(1.0 - np.asarray(u, dtype=float))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = np.clip(rng.random(int(n)), _U_LO, _U_HI)
        return self.quantile(u)

    def params_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(Marginal1D):
    """Exponential law with rate beta: density beta * exp(-beta x) on x > 0."""

    beta: float
    family = "exponential"

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise InvalidParameterError(f"exponential rate must be > 0, got {self.beta}")

    def quantile(self, t):
        return -np.log1p(-np.asarray(t, dtype=float)) / self.beta

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.beta * np.maximum(x, 0.0)), 0.0)

    def isf(self, u):
        return -np.log(np.asarray(u, dtype=float)) / self.beta

    def params_dict(self):
        return {"family": "exponential", "beta": self.beta}


@dataclass(frozen=True)
class Normal(Marginal1D):
    """Scalar Gaussian with mean mu and standard deviation sigma."""

    mu: float
    sigma: float
    family = "normal"

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise InvalidParameterError(f"normal sigma must be > 0, got {self.sigma}")

    def quantile(self, t):
        return self.mu + self.sigma * ndtri(np.asarray(t, dtype=float))

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def isf(self, u):
        return self.mu - self.sigma * ndtri(np.asarray(u, dtype=float))

    def params_dict(self):
        return {"family": "normal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Lognormal(Marginal1D):
    """exp(N(mu, sigma^2)); all moments finite for any sigma > 0."""

    mu: float
    sigma: float
    family = "lognormal"

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise InvalidParameterError(f"lognormal sigma must be > 0, got {self.sigma}")

    def quantile(self, t):
        return np.exp(self.mu + self.sigma * ndtri(np.asarray(t, dtype=float)))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.maximum(x, 1e-300)
        return np.where(x > 0, ndtr((np.log(safe) - self.mu) / self.sigma), 0.0)

    def isf(self, u):
        return np.exp(self.mu - self.sigma * ndtri(np.asarray(u, dtype=float)))

    def params_dict(self):
        return {"family": "lognormal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Weibull(Marginal1D):
    """Weibull with shape k and scale lam: F(x) = 1 - exp(-(x/lam)^k)."""

    k: float
    lam: float
    family = "weibull"

    def __post_init__(self):
        if not np.isfinite(self.k) or self.k <= 0:
            raise InvalidParameterError(f"weibull shape must be > 0, got {self.k}")
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise InvalidParameterError(f"weibull scale must be > 0, got {self.lam}")

    def quantile(self, t):
        return self.lam * (-np.log1p(-np.asarray(t, dtype=float))) ** (1.0 / self.k)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (np.maximum(x, 0.0) / self.lam) ** self.k
        return np.where(x > 0, -np.expm1(-z), 0.0)

    def isf(self, u):
        return self.lam * (-np.log(np.asarray(u, dtype=float))) ** (1.0 / self.k)

    def params_dict(self):
        return {"family": "weibull", "k": self.k, "lam": self.lam}


@dataclass(frozen=True)
class Pareto(Marginal1D):
    """Pareto with tail index alpha and minimum x_m.

    alpha > 2 is required so the second moment (hence the quadratic transport
    cost) is finite.
    """

    alpha: float
    xm: float
    family = "pareto"

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 2.0:
            raise InvalidParameterError(
                f"pareto alpha must be > 2 for a finite second moment, got {self.alpha}"
            )
        if not np.isfinite(self.xm) or self.xm <= 0:
            raise InvalidParameterError(f"pareto x_m must be > 0, got {self.xm}")

    def quantile(self, t):
        return self.xm * (1.0 - np.asarray(t, dtype=float)) ** (-1.0 / self.alpha)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        ratio = self.xm / np.maximum(x, self.xm)
        return np.where(x > self.xm, 1.0 - ratio**self.alpha, 0.0)

    def isf(self, u):
        return self.xm * np.asarray(u, dtype=float) ** (-1.0 / self.alpha)

    def params_dict(self):
        return {"family": "pareto", "alpha": self.alpha, "xm": self.xm}


class Empirical(Marginal1D):
    """Piecewise-linear quantile through order statistics.

    Order statistic i sits at plotting position (i + 0.5)/n; the quantile is
    linearly interpolated between positions and extended flat beyond the
    extreme order statistics, so it stays monotone and bounded.
    """

    family = "empirical"
    __slots__ = ("values", "positions")

    def __init__(self, sample):
        xs = np.sort(np.asarray(sample, dtype=float).reshape(-1))
        if xs.size < 1:
            raise InvalidParameterError("empirical marginal needs at least one point")
        if not np.all(np.isfinite(xs)):
            raise InvalidParameterError("empirical sample has non-finite entries")
        self.values = xs
        self.positions = (np.arange(xs.size) + 0.5) / xs.size
        self.values.flags.writeable = False
        self.positions.flags.writeable = False

    def quantile(self, t):
        return np.interp(np.asarray(t, dtype=float), self.positions, self.values)

    def cdf(self, x):
        return np.interp(np.asarray(x, dtype=float), self.values, self.positions)

    def params_dict(self):
        return {"family": "empirical", "sample": self.values.tolist()}

    def __repr__(self) -> str:
        return f"Empirical(n={self.values.size})"


@dataclass(frozen=True)
class Product1D:
    """Ordered product of independent 1-D marginals."""

    marginals: tuple

    def __post_init__(self):
        if len(self.marginals) == 0:
            raise InvalidParameterError("product needs at least one marginal")
        for m in self.marginals:
            if not isinstance(m, Marginal1D):
                raise InvalidParameterError(f"not a 1-D marginal: {m!r}")

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def all_exponential(self) -> bool:
        return all(isinstance(m, Exponential) for m in self.marginals)


DistributionSpec = (
    GaussianParams | EllipticalParams | WishartParams | Product1D | Marginal1D
)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_gaussian(p: GaussianParams, n: int, seed: Seed) -> np.ndarray:
    """n i.i.d. rows of N(mean, cov), drawn as mean + psd_sqrt(cov) z."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    z = rng.standard_normal((int(n), p.dim))
    return p.mean + z @ psd_sqrt(p.cov).mat


def sample_elliptical(p: EllipticalParams, n: int, seed: Seed) -> np.ndarray:
    """n i.i.d. rows with covariance exactly equal to the dispersion matrix.

    The gaussian generator delegates to sample_gaussian (same seed gives the
    same output).  The student_t generator draws z / sqrt(w/nu) and rescales
    by sqrt((nu-2)/nu) so the covariance is the dispersion, not its
    nu/(nu-2) inflation.
    """
    if p.generator == "gaussian":
        return sample_gaussian(GaussianParams(p.location, p.dispersion), n, seed)
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    z = rng.standard_normal((int(n), p.dim))
    w = rng.chisquare(p.nu, int(n))
    radial = np.sqrt((p.nu - 2.0) / w)
    return p.location + (z @ psd_sqrt(p.dispersion).mat) * radial[:, None]


def sample_wishart(p: WishartParams, n: int, seed: Seed) -> np.ndarray:
    """n stacked d x d draws from W_d(scale, dof) via Bartlett decomposition.

    The Bartlett factor is lower triangular with sqrt(chi2(dof - i)) on the
    diagonal and standard normals below; it is valid for any real dof >= d,
    which sidesteps evaluating the multivariate gamma function entirely.
    """
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    d = p.dim
    a = np.tril(rng.standard_normal((int(n), d, d)), k=-1)
    for i in range(d):
        a[:, i, i] = np.sqrt(rng.chisquare(p.dof - i, int(n)))
    lower = np.linalg.cholesky(p.scale.mat)
    b = np.matmul(lower, a)
    w = np.matmul(b, np.transpose(b, (0, 2, 1)))
    return 0.5 * (w + np.transpose(w, (0, 2, 1)))


def sample_wishart_gram(p: WishartParams, n: int, seed: Seed) -> np.ndarray:
    """Gram-construction sampler Z^T Z for integer dof; used as a cross-check."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if p.dof != int(p.dof):
        raise InvalidParameterError(
            f"gram construction needs integer dof, got {p.dof}"
        )
    rng = make_rng(seed)
    rows = int(p.dof)
    z = rng.standard_normal((int(n), rows, p.dim))
    y = z @ np.linalg.cholesky(p.scale.mat).T
    w = np.einsum("npi,npj->nij", y, y)
    return 0.5 * (w + np.transpose(w, (0, 2, 1)))


def sample_marginal(m: Marginal1D, n: int, seed: Seed) -> np.ndarray:
    """n i.i.d. scalar draws by inverse-cdf sampling."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    return m.sample(int(n), make_rng(seed))


def sample_product(p: Product1D, n: int, seed: Seed) -> np.ndarray:
    """n x d draws of a product law; one uniform block, column-wise quantiles."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    u = np.clip(rng.random((int(n), p.dim)), _U_LO, _U_HI)
    cols = [m.quantile(u[:, i]) for i, m in enumerate(p.marginals)]
    return np.column_stack(cols)


def sample_distribution(spec: DistributionSpec, n: int, seed: Seed) -> np.ndarray:
    """Dispatch sampler: (n, d) for vector laws, (n, d, d) for Wishart, (n,) for 1-D."""
    if isinstance(spec, GaussianParams):
        return sample_gaussian(spec, n, seed)
    if isinstance(spec, EllipticalParams):
        return sample_elliptical(spec, n, seed)
    if isinstance(spec, WishartParams):
        return sample_wishart(spec, n, seed)
    if isinstance(spec, Product1D):
        return sample_product(spec, n, seed)
    if isinstance(spec, Marginal1D):
        return sample_marginal(spec, n, seed)
    raise InvalidParameterError(f"not a distribution spec: {spec!r}")


# ---------------------------------------------------------------------------
# quantile / cdf entry points
# ---------------------------------------------------------------------------

def quantile(m: Marginal1D, t):
    """Quantile F^{-1}(t) for t in the open interval (0, 1)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise InvalidParameterError("quantile argument must lie strictly in (0, 1)")
    out = m.quantile(arr)
    return float(out) if np.isscalar(t) or arr.ndim == 0 else out


def cdf(m: Marginal1D, x):
    """Cumulative distribution function of a 1-D marginal."""
    out = m.cdf(np.asarray(x, dtype=float))
    arr = np.asarray(x)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out
