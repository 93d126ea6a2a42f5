"""Algebraic optimality certificates for candidate Monge maps.

For the quadratic cost a candidate map produced from the reduced problem is
promoted to the exact Monge and Kantorovich optimum when an explicit potential
exists; for the families handled here that existence reduces to finite
algebraic checks: symmetric positive definite linear part (affine and
congruence maps) or monotonicity (1-D maps).  Failing maps are still feasible
transports, so a failed certificate downgrades the value to an upper bound
rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .distributions import (
    EllipticalParams,
    GaussianParams,
    Marginal1D,
    Product1D,
    WishartParams,
    sample_distribution,
)
from .errors import InvalidParameterError
from .orbit_transport import (
    AffineMap,
    CongruenceMap,
    DiagMap,
    QuantileMap,
    apply_map,
)
from .rng import derive_seed, make_rng

SLACK = -1e-10
PUSHFORWARD_TOL = 1e-8
KS_SAMPLES = 10_000
KS_ALPHA = 0.01
_PROBE_SEED = 90210
_KS_SEED = 31337


def ks_critical_value(n0: int, n1: int, alpha: float = KS_ALPHA) -> float:
    """Asymptotic two-sample Kolmogorov-Smirnov critical value."""
    c = math.sqrt(-math.log(alpha / 2.0) / 2.0)
    return c * math.sqrt((n0 + n1) / (n0 * n1))


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one certificate check with its witness value."""

    passed: bool
    value: float
    label: str


@dataclass(frozen=True)
class CertificateReport:
    """Certificate checks for one map; verdict is certified only if every
    applicable check passed."""

    family: str
    spd_check: CheckResult | None = None
    monotonicity_check: CheckResult | None = None
    pushforward_check: CheckResult | None = None

    @property
    def verdict(self) -> str:
        checks = [
            c
            for c in (self.spd_check, self.monotonicity_check, self.pushforward_check)
            if c is not None
        ]
        if checks and all(c.passed for c in checks):
            return "certified"
        return "upper_bound_only"


def _with_pushforward(report: CertificateReport, check: CheckResult) -> CertificateReport:
    return CertificateReport(
        family=report.family,
        spd_check=report.spd_check,
        monotonicity_check=report.monotonicity_check,
        pushforward_check=check,
    )


def certify_affine(mp: AffineMap, family: str = "gaussian") -> CertificateReport:
    """Certificate for an affine candidate: linear part SPD.

    With T > 0 the potential -||x||^2 + 2 m1.x + (x - m0)' T (x - m0) has
    Hessian -2I + 2T >= -2I, which is exactly the convexity condition the
    quadratic cost requires.
    """
    min_eig = float(np.linalg.eigvalsh(mp.linear)[0])
    return CertificateReport(
        family=family,
        spd_check=CheckResult(passed=min_eig > 0.0, value=min_eig, label="min_eigenvalue"),
    )


def certify_congruence(
    mp: CongruenceMap,
    family: str = "wishart",
    n_probes: int = 100,
    probe_seed: int = _PROBE_SEED,
) -> CertificateReport:
    """Certificate for a congruence candidate: factor SPD plus operator probe.

    Beyond the eigenvalue check, the quadratic form <H, T H T> (which equals
    ||T^{1/2} H T^{1/2}||_F^2 for SPD T) is probed on random symmetric H and
    must stay above the -1e-10 slack.
    """
    eigs = np.linalg.eigvalsh(mp.t)
    min_eig = float(eigs[0])
    rng = make_rng(probe_seed)
    d = mp.dim
    worst = np.inf
    for _ in range(n_probes):
        z = rng.standard_normal((d, d))
        h = 0.5 * (z + z.T)
        h /= max(np.linalg.norm(h), 1e-300)
        worst = min(worst, float(np.einsum("ij,ij->", h, mp.t @ h @ mp.t)))
    passed = min_eig > 0.0 and worst >= SLACK
    value = min(min_eig, worst) if min_eig <= 0.0 or worst < SLACK else min_eig
    return CertificateReport(
        family=family,
        spd_check=CheckResult(passed=passed, value=value, label="min_eigenvalue_and_probe"),
    )


def _monotone_slopes(fn, grid: np.ndarray) -> float:
    values = np.asarray(fn(grid), dtype=float)
    dx = np.diff(grid)
    keep = dx > 0
    if not np.any(keep):
        raise InvalidParameterError("monotonicity probe grid must be increasing")
    slopes = np.diff(values)[keep] / dx[keep]
    return float(np.min(slopes))


def certify_monotone(mp, probe_grid: int = 1024, grid=None, family: str = "quantile1d") -> CertificateReport:
    """Certificate for 1-D (or coordinate-wise) candidates: nondecreasing map.

    DiagMap passes iff all ratios are positive.  Quantile maps are probed on
    a quantile-spaced grid; finite-difference slopes must stay above the
    -1e-10 slack.  A plain callable can be certified by passing the probe
    grid explicitly.  The grid is a probe, not a proof.
    """
    if probe_grid < 2:
        raise InvalidParameterError(f"probe_grid must be >= 2, got {probe_grid}")
    if isinstance(mp, DiagMap):
        min_ratio = float(np.min(mp.ratios))
        return CertificateReport(
            family=family,
            monotonicity_check=CheckResult(
                passed=min_ratio > 0.0, value=min_ratio, label="min_ratio"
            ),
        )
    if isinstance(mp, (list, tuple)):
        reports = [certify_monotone(m, probe_grid=probe_grid, family=family) for m in mp]
        worst = min(r.monotonicity_check.value for r in reports)
        passed = all(r.monotonicity_check.passed for r in reports)
        return CertificateReport(
            family=family,
            monotonicity_check=CheckResult(passed=passed, value=worst, label="min_slope"),
        )
    if isinstance(mp, QuantileMap):
        ts = (np.arange(probe_grid) + 0.5) / probe_grid
        grid = np.unique(np.asarray(mp.source.quantile(ts), dtype=float))
        fn = lambda xs: apply_map(mp, xs)
    else:
        if grid is None:
            raise InvalidParameterError(
                "certifying a plain callable needs an explicit probe grid"
            )
        grid = np.sort(np.asarray(grid, dtype=float))
        fn = mp
    min_slope = _monotone_slopes(fn, grid)
    return CertificateReport(
        family=family,
        monotonicity_check=CheckResult(
            passed=min_slope >= SLACK, value=min_slope, label="min_slope"
        ),
    )


def pushforward_residual(mp, a, b) -> float:
    """How far the candidate map is from pushing law a onto law b.

    Gaussian/elliptical: max of relative Frobenius residual of T S0 T - S1
    and the mean-image error; Wishart: relative Frobenius residual of
    t S0 t - S1; 1-D and product laws: two-sample KS statistic between mapped
    draws of a and draws of b (n = 10^4, fixed seed).
    """
    if isinstance(mp, AffineMap) and isinstance(a, (GaussianParams, EllipticalParams)):
        cov0 = a.cov.mat if isinstance(a, GaussianParams) else a.dispersion.mat
        cov1 = b.cov.mat if isinstance(b, GaussianParams) else b.dispersion.mat
        m0 = a.mean if isinstance(a, GaussianParams) else a.location
        m1 = b.mean if isinstance(b, GaussianParams) else b.location
        cov_resid = np.linalg.norm(mp.linear @ cov0 @ mp.linear - cov1) / np.linalg.norm(cov1)
        mean_resid = np.linalg.norm(apply_map(mp, m0) - m1)
        return float(max(cov_resid, mean_resid))
    if isinstance(mp, CongruenceMap) and isinstance(a, WishartParams):
        resid = np.linalg.norm(mp.t @ a.scale.mat @ mp.t - b.scale.mat)
        return float(resid / np.linalg.norm(b.scale.mat))
    if isinstance(a, Marginal1D):
        x = sample_distribution(a, KS_SAMPLES, derive_seed(_KS_SEED, 0))
        y = sample_distribution(b, KS_SAMPLES, derive_seed(_KS_SEED, 1))
        return float(ks_2samp(np.asarray(apply_map(mp, x)), y).statistic)
    if isinstance(a, Product1D):
        x = sample_distribution(a, KS_SAMPLES, derive_seed(_KS_SEED, 0))
        y = sample_distribution(b, KS_SAMPLES, derive_seed(_KS_SEED, 1))
        mapped = apply_map(mp, x)
        stats = [
            ks_2samp(mapped[:, i], y[:, i]).statistic for i in range(x.shape[1])
        ]
        return float(max(stats))
    raise InvalidParameterError(
        f"pushforward residual undefined for map {type(mp).__name__} with {type(a).__name__}"
    )


def certify_map(mp, family: str, a=None, b=None) -> CertificateReport:
    """Run every applicable check for a map, including the push-forward check
    when the family parameters are supplied."""
    if isinstance(mp, AffineMap):
        report = certify_affine(mp, family=family)
    elif isinstance(mp, CongruenceMap):
        report = certify_congruence(mp, family=family)
    elif isinstance(mp, (DiagMap, QuantileMap, list, tuple)):
        report = certify_monotone(mp, family=family)
    else:
        raise InvalidParameterError(f"cannot certify map of type {type(mp).__name__}")
    if a is None or b is None:
        return report
    resid = pushforward_residual(mp, a, b)
    if isinstance(mp, (AffineMap, CongruenceMap)):
        threshold = PUSHFORWARD_TOL
        label = "relative_residual"
    else:
        threshold = ks_critical_value(KS_SAMPLES, KS_SAMPLES)
        label = "ks_statistic"
    return _with_pushforward(
        report, CheckResult(passed=resid < threshold, value=resid, label=label)
    )
