"""Core diversified-projection estimator and a PC benchmark.

Factors are estimated cross-sectionally, f_hat_t = W'x_t / N, so the whole
factor matrix is F_hat = X'W / N.  Loadings follow by time-series least
squares and residuals by subtraction.  Two algebraic identities hold for
every fit regardless of model correctness: W'U_hat = 0 and U_hat F_hat = 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, NumericalWarning
from .weights import WeightMatrix


@dataclass(frozen=True)
class PanelData:
    """Observed N x T panel: rows are series, columns are time points."""

    X: np.ndarray
    series_ids: list[str] | None = None
    time_ids: list[str] | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        object.__setattr__(self, "X", X)
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionError("panel must have at least one series and one time point")
        if not np.all(np.isfinite(X)):
            raise ValueError("panel contains non-finite entries")

    @property
    def n_series(self) -> int:
        return self.X.shape[0]

    @property
    def n_periods(self) -> int:
        return self.X.shape[1]


def as_matrix(panel) -> np.ndarray:
    """Accept either a PanelData or a bare N x T array."""
    if isinstance(panel, PanelData):
        return panel.X
    return np.atleast_2d(np.asarray(panel, dtype=float))


@dataclass(frozen=True)
class FactorFit:
    """Estimated factors, loadings and residuals of one projection fit."""

    factors: np.ndarray           # T x R, row t = f_hat_t'
    loadings: np.ndarray          # N x R
    residuals: np.ndarray         # N x T
    gram: np.ndarray              # R x R, F'F/T
    weights: WeightMatrix | None = None

    @property
    def n_factors(self) -> int:
        return self.factors.shape[1]

    def common_component(self) -> np.ndarray:
        return self.loadings @ self.factors.T


@dataclass(frozen=True)
class SpaceDistance:
    """Operator-norm distances between estimated and true factor spaces."""

    proj_overlap: float        # ||P_Fhat P_F - P_F||
    adjusted_distance: float   # ||P_{Fhat M} - P_F|| with M = (HH')^+ H


def pseudo_inverse(a: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """SVD pseudo-inverse zeroing singular values below rank_tol * sigma_max."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return a.T.copy()
    return np.linalg.pinv(a, rcond=rank_tol)


def estimate_factors(panel, weights: WeightMatrix | np.ndarray) -> np.ndarray:
    """Diversified projection F_hat = X'W / N (T x R)."""
    X = as_matrix(panel)
    W = weights.values if isinstance(weights, WeightMatrix) else np.asarray(weights, dtype=float)
    if W.shape[0] != X.shape[0]:
        raise DimensionError(
            f"weights have {W.shape[0]} rows but panel has {X.shape[0]} series"
        )
    return X.T @ W / X.shape[0]


def estimate_loadings(panel, factors: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Least-squares loadings B_hat = (sum_t x_t f_t')(sum_t f_t f_t')^{-1}.

    Falls back to the pseudo-inverse with a warning when the factor gram is
    singular to `rank_tol` (this is routine when the working number of
    factors exceeds the true rank in noiseless data).
    """
    X = as_matrix(panel)
    F = np.asarray(factors, dtype=float)
    if F.shape[0] != X.shape[1]:
        raise DimensionError("factors and panel disagree on the number of periods")
    gram = F.T @ F
    eigs = np.linalg.eigvalsh(gram)
    if eigs[-1] <= 0 or eigs[0] <= rank_tol * eigs[-1]:
        warnings.warn(
            "factor gram matrix is singular to tolerance; using a pseudo-inverse",
            NumericalWarning,
            stacklevel=2,
        )
        return X @ F @ pseudo_inverse(gram, rank_tol)
    return np.linalg.solve(gram, F.T @ X.T).T


def residuals(panel, loadings: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """U_hat = X - B_hat F_hat' (N x T)."""
    X = as_matrix(panel)
    B = np.asarray(loadings, dtype=float)
    F = np.asarray(factors, dtype=float)
    if B.shape[0] != X.shape[0] or F.shape[0] != X.shape[1] or B.shape[1] != F.shape[1]:
        raise DimensionError("inconsistent shapes for residual computation")
    return X - B @ F.T


def common_component(loadings: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """Estimated common component B_hat F_hat' (N x T)."""
    return np.asarray(loadings, dtype=float) @ np.asarray(factors, dtype=float).T


def fit(panel, weights: WeightMatrix | np.ndarray, rank_tol: float = 1e-10) -> FactorFit:
    """Full diversified-projection fit: factors, loadings, residuals, gram."""
    X = as_matrix(panel)
    F = estimate_factors(X, weights)
    B = estimate_loadings(X, F, rank_tol)
    U = X - B @ F.T
    W = weights if isinstance(weights, WeightMatrix) else WeightMatrix(np.asarray(weights, dtype=float))
    return FactorFit(factors=F, loadings=B, residuals=U, gram=F.T @ F / F.shape[0], weights=W)


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip column signs so the entry of largest magnitude is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def pc_factors(panel, n_factors: int) -> FactorFit:
    """Benchmark principal-components estimator.

    F_hat is sqrt(T) times the top eigenvectors of X'X (computed through the
    SVD of X, which uses whichever gram matrix is smaller), normalized so
    that F'F/T = I.  Loadings follow by least squares and residuals by
    subtraction.  The W'U_hat = 0 identity of the projection fit does not
    apply here; U_hat F_hat = 0 does.
    """
    X = as_matrix(panel)
    n, t = X.shape
    if n_factors > min(n, t):
        raise DimensionError(
            f"R={n_factors} exceeds min(N, T)={min(n, t)}"
        )
    _, _, vt = np.linalg.svd(X, full_matrices=False)
    F = np.sqrt(t) * _canonical_signs(vt[:n_factors].T)
    B = X @ F / t  # (F'F)^{-1} = I/T by normalization
    return FactorFit(factors=F, loadings=B, residuals=X - B @ F.T, gram=F.T @ F / t, weights=None)


def transform_matrix(weights: WeightMatrix | np.ndarray, loadings_true: np.ndarray, rank_tol: float = 1e-10):
    """Simulation diagnostic H = W'B / N with its singular values.

    Returns (H, singular_values, rank).  A rank below the number of true
    factors means the weights diversified away part of the factor space.
    """
    W = weights.values if isinstance(weights, WeightMatrix) else np.asarray(weights, dtype=float)
    B = np.asarray(loadings_true, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if W.shape[0] != B.shape[0]:
        raise DimensionError("weights and loadings disagree on the number of series")
    H = W.T @ B / W.shape[0]
    svals = np.linalg.svd(H, compute_uv=False) if min(H.shape) > 0 else np.zeros(0)
    rank = int(np.sum(svals > rank_tol * svals[0])) if svals.size and svals[0] > 0 else 0
    return H, svals, rank


def _projector(a: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the column space of `a` (T x T)."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.size == 0:
        return np.zeros((a.shape[0], a.shape[0]))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    keep = s > (rank_tol * s[0] if s.size and s[0] > 0 else 0)
    u = u[:, keep]
    return u @ u.T


_MAX_DIAGNOSTIC_T = 2000


def space_distance(factors_est: np.ndarray, factors_true: np.ndarray, transform: np.ndarray) -> SpaceDistance:
    """Operator-norm distances between span(F_hat) and span(F).

    `transform` is the R x r matrix H = W'B/N; the adjusted distance rotates
    F_hat by M = (HH')^+ H before comparing projectors.  Formed explicitly
    as T x T matrices, so the diagnostic path is restricted to T <= 2000.
    """
    F_est = np.asarray(factors_est, dtype=float)
    F_true = np.asarray(factors_true, dtype=float)
    if F_est.shape[0] != F_true.shape[0]:
        raise DimensionError("factor matrices disagree on the number of periods")
    if F_est.shape[0] > _MAX_DIAGNOSTIC_T:
        raise DimensionError(
            f"space_distance is a desk-scale diagnostic; T <= {_MAX_DIAGNOSTIC_T} required"
        )
    H = np.asarray(transform, dtype=float)
    P_est = _projector(F_est)
    P_true = _projector(F_true)
    overlap = float(np.linalg.norm(P_est @ P_true - P_true, 2))
    M = pseudo_inverse(H @ H.T) @ H
    P_adj = _projector(F_est @ M)
    adjusted = float(np.linalg.norm(P_adj - P_true, 2))
    return SpaceDistance(proj_overlap=overlap, adjusted_distance=adjusted)
