"""Dense symmetric-matrix kernels.

Everything the closed forms need from linear algebra lives here: a validated
SPD matrix type, eigendecomposition-based PSD square roots, an SVD wrapper
with checked invariants, and the trace-optimal orthogonal alignment
Q* = V U^T that maximizes tr(M Q) over the orthogonal group.

All operations are pure functions on immutable inputs; tolerances follow the
double-precision budget: construction checks at 1e-12, algebraic identities at
1e-9/1e-10, condition-number warning above 1e8 and failure above 1e12.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    IllConditionedError,
    InvalidParameterError,
    SpectrumError,
)
from .rng import Seed, make_rng

SYMMETRY_RTOL = 1e-12
SPD_FLOOR_RATIO = 1e-10
ORTHOGONALITY_TOL = 1e-10
COND_WARN = 1e8
COND_FAIL = 1e12


def _as_square(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    return m


class SpdMatrix:
    """Symmetric positive-definite matrix with a validated spectrum.

    The constructor symmetrizes its input (rejecting relative asymmetry above
    1e-12) and fails unless the smallest eigenvalue exceeds
    ``spd_floor_ratio * largest eigenvalue``.  Instances are immutable.
    """

    __slots__ = ("mat", "eigvals", "dim")

    def __init__(self, mat, spd_floor_ratio: float = SPD_FLOOR_RATIO):
        m = _as_square(mat, "SpdMatrix input")
        scale = np.linalg.norm(m)
        asym = np.linalg.norm(m - m.T)
        if asym > SYMMETRY_RTOL * max(scale, 1e-300):
            raise InvalidParameterError(
                f"matrix not symmetric: relative asymmetry {asym / max(scale, 1e-300):.3e} "
                f"exceeds {SYMMETRY_RTOL:.0e}"
            )
        m = 0.5 * (m + m.T)
        try:
            eig = np.linalg.eigvalsh(m)
        except np.linalg.LinAlgError as exc:
            raise SpectrumError(f"eigensolver failed: {exc}") from exc
        floor = spd_floor_ratio * max(float(eig[-1]), 0.0)
        if float(eig[0]) <= floor:
            raise InvalidParameterError(
                f"matrix is not positive definite: min eigenvalue {eig[0]:.6e} "
                f"<= floor {floor:.6e} (ratio {spd_floor_ratio:.0e})"
            )
        m.flags.writeable = False
        self.mat = m
        self.eigvals = eig
        self.dim = m.shape[0]

    @property
    def cond(self) -> float:
        return float(self.eigvals[-1] / self.eigvals[0])

    def __repr__(self) -> str:
        return f"SpdMatrix(dim={self.dim}, cond={self.cond:.3e})"


def as_spd(x) -> SpdMatrix:
    """Coerce an array or SpdMatrix to SpdMatrix."""
    return x if isinstance(x, SpdMatrix) else SpdMatrix(x)


@dataclass(frozen=True)
class SvdTriple:
    """Validated SVD factors: u @ diag(sigma) @ vt with sigma nonincreasing."""

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray

    def __post_init__(self):
        for q, name in ((self.u, "u"), (self.vt, "vt")):
            resid = np.max(np.abs(q.T @ q - np.eye(q.shape[0])))
            if resid > ORTHOGONALITY_TOL:
                raise InvalidParameterError(
                    f"SvdTriple.{name} not orthogonal: residual {resid:.3e}"
                )
        if np.any(np.diff(self.sigma) > 1e-12 * max(self.sigma[0], 1.0)):
            raise InvalidParameterError("SvdTriple.sigma must be nonincreasing")
        if np.any(self.sigma < -1e-300):
            raise InvalidParameterError("SvdTriple.sigma must be nonnegative")

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.vt


def svd(a) -> SvdTriple:
    """Full SVD of a square matrix, with reconstruction checked to 1e-10.

    Downstream code never relies on u or vt individually (they are not unique
    under repeated singular values), only on products such as ``vt.T @ u.T``.
    """
    m = _as_square(a)
    try:
        u, s, vt = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"SVD failed to converge: {exc}") from exc
    triple = SvdTriple(u=u, sigma=s, vt=vt)
    scale = max(np.linalg.norm(m), 1e-300)
    resid = np.linalg.norm(triple.reconstruct() - m) / scale
    if resid > 1e-10:
        raise SpectrumError(f"SVD reconstruction residual {resid:.3e} exceeds 1e-10")
    return triple


def singular_values(a) -> np.ndarray:
    """Singular values of a square matrix, nonincreasing."""
    m = _as_square(a)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"SVD failed to converge: {exc}") from exc


def _eigh(a: SpdMatrix):
    try:
        return np.linalg.eigh(a.mat)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver failed: {exc}") from exc


def psd_sqrt(a: SpdMatrix) -> SpdMatrix:
    """Principal (PSD) square root S with S @ S = a.

    Eigenvalues below the SPD floor are clamped to the floor before the root
    is taken, which keeps the operation stable near the semidefinite boundary.
    """
    a = as_spd(a)
    w, v = _eigh(a)
    floor = SPD_FLOOR_RATIO * float(w[-1])
    w = np.maximum(w, floor)
    s = (v * np.sqrt(w)) @ v.T
    return SpdMatrix(0.5 * (s + s.T))


def psd_inv_sqrt(a: SpdMatrix) -> SpdMatrix:
    """Symmetric S with S @ a @ S = I (inverse principal root).

    Warns above condition number 1e8 and refuses above 1e12.
    """
    a = as_spd(a)
    if a.cond > COND_FAIL:
        raise IllConditionedError(
            f"condition number {a.cond:.3e} exceeds {COND_FAIL:.0e}"
        )
    if a.cond > COND_WARN:
        warnings.warn(
            f"inverse square root of ill-conditioned matrix (cond {a.cond:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    w, v = _eigh(a)
    floor = SPD_FLOOR_RATIO * float(w[-1])
    w = np.maximum(w, floor)
    s = (v / np.sqrt(w)) @ v.T
    return SpdMatrix(0.5 * (s + s.T))


def sqrt_psd_array(a, floor: float = 0.0) -> np.ndarray:
    """Principal root of a symmetric positive *semi*definite array.

    Eigenvalues below ``floor`` (and small negatives from round-off) are
    clamped to ``floor``.  Used for the continuous extension of the Gaussian
    cost to semidefinite covariances, where SpdMatrix would rightly refuse.
    """
    m = _as_square(a)
    m = 0.5 * (m + m.T)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver failed: {exc}") from exc
    w = np.maximum(w, floor)
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def trace_align(m) -> np.ndarray:
    """Orthogonal Q* = V U^T maximizing tr(M Q), where M = U diag(sigma) V^T.

    By the trace inequality tr(M Q) <= sum(sigma(M)) for orthogonal Q, and
    Q* attains the bound: tr(M Q*) = sum(sigma).  Any valid SVD yields an
    optimizer, so ties under repeated singular values are harmless.
    """
    triple = svd(m)
    q = triple.vt.T @ triple.u.T
    resid = np.max(np.abs(q.T @ q - np.eye(q.shape[0])))
    if resid > ORTHOGONALITY_TOL:
        raise SpectrumError(f"aligned factor lost orthogonality: residual {resid:.3e}")
    return q


def haar_orthogonal(dim: int, seed: Seed) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with R-diagonal sign fix."""
    if dim < 1:
        raise InvalidParameterError(f"dim must be >= 1, got {dim}")
    rng = make_rng(seed)
    z = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    signs = np.where(np.diagonal(r) < 0.0, -1.0, 1.0)
    return q * signs
