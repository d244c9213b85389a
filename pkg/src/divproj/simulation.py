"""Seeded data-generating processes for the Monte Carlo studies.

The panel is X = B F' + U with loadings driven by characteristics
z_i = sin(h_i) plus noise, scaled by N^{-(1-alpha)/2} so `alpha` controls
factor strength; U carries AR(1)-profile serial correlation through a
Toeplitz time covariance and block-diagonal cross-sectional correlation.

RNG streams are counter-based (Philox) and keyed by (seed, replication,
stream), so parallel and serial runs of the same experiment draw identical
numbers.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .projection import PanelData, transform_matrix
from .weights import WeightMatrix


def rep_rng(seed: int, replication: int = 0, stream: int = 0) -> np.random.Generator:
    """A counter-based generator for one (seed, replication, stream) cell."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replication), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SimConfig:
    """Parameters of the simulated factor panel."""

    n_series: int
    n_periods: int
    n_factors_true: int
    n_factors_working: int
    alpha_strength: float = 1.0
    rho_T: float = 0.0
    rho_N: float = 0.7
    n_blocks: int = 3
    block_size: int = 4
    seed: int = 0
    scheme: str = "sieve"
    replications: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha_strength <= 1.0):
            raise ValueError("alpha_strength must lie in (0, 1]")
        if abs(self.rho_T) >= 1 or abs(self.rho_N) >= 1:
            raise ValueError("serial and block correlations must lie in (-1, 1)")
        if self.block_size * self.n_blocks > self.n_series:
            raise ValueError("correlated blocks do not fit into N series")
        if self.n_factors_true < 0 or self.n_factors_working < 0:
            raise ValueError("factor counts must be non-negative")


@dataclass(frozen=True)
class SimOutput:
    """One simulated panel plus the oracle quantities used in diagnostics."""

    panel: PanelData
    F_true: np.ndarray       # T x r
    B_true: np.ndarray       # N x r
    U_true: np.ndarray       # N x T
    z_chars: np.ndarray      # length N
    H_oracle: np.ndarray | None = None   # R x r, once weights are chosen
    nu_min: float | None = None

    def with_oracle(self, weights: WeightMatrix | np.ndarray) -> "SimOutput":
        """Attach H = W'B/N and its smallest nonzero singular value."""
        H, svals, rank = transform_matrix(weights, self.B_true)
        nu = float(svals[rank - 1]) if rank > 0 else 0.0
        return dataclasses.replace(self, H_oracle=H, nu_min=nu)


@lru_cache(maxsize=64)
def _ar1_sqrt(rho: float, n: int) -> np.ndarray:
    """Symmetric square root of the Toeplitz correlation (rho^|i-j|)."""
    if rho == 0.0:
        out = np.eye(n)
    else:
        idx = np.arange(n)
        cov = rho ** np.abs(idx[:, None] - idx[None, :])
        eigval, eigvec = np.linalg.eigh(cov)
        out = (eigvec * np.sqrt(np.clip(eigval, 0.0, None))) @ eigvec.T
    out.flags.writeable = False
    return out


def cross_section_cov(config: SimConfig) -> np.ndarray:
    """The true idiosyncratic covariance: block-diagonal (A, ..., A, I)."""
    n = config.n_series
    sigma = np.eye(n)
    b = config.block_size
    idx = np.arange(b)
    block = config.rho_N ** np.abs(idx[:, None] - idx[None, :])
    for k in range(config.n_blocks):
        sigma[k * b : (k + 1) * b, k * b : (k + 1) * b] = block
    return sigma


def true_idio_cov(config: SimConfig) -> np.ndarray:
    """Covariance of u_t: the block matrix times the AR(1) stationary variance."""
    return cross_section_cov(config) / (1.0 - config.rho_T**2)


@lru_cache(maxsize=64)
def _cross_section_sqrt(rho_N: float, block_size: int, n_blocks: int, n: int) -> np.ndarray:
    if rho_N == 0.0:
        out = np.eye(n)
    else:
        idx = np.arange(block_size)
        block = rho_N ** np.abs(idx[:, None] - idx[None, :])
        eigval, eigvec = np.linalg.eigh(block)
        block_sqrt = (eigvec * np.sqrt(np.clip(eigval, 0.0, None))) @ eigvec.T
        out = np.eye(n)
        for k in range(n_blocks):
            lo = k * block_size
            out[lo : lo + block_size, lo : lo + block_size] = block_sqrt
    out.flags.writeable = False
    return out


def loading_scale(n_series: int, alpha_strength: float) -> float:
    """Factor-strength multiplier N^{-(1-alpha)/2}."""
    return float(n_series ** (-(1.0 - alpha_strength) / 2.0))


def draw_loadings(z: np.ndarray, noise: np.ndarray, alpha_strength: float) -> np.ndarray:
    """Loadings b[i, k] = (z_i^k + 0.5 * noise[i, k]) * N^{-(1-alpha)/2}."""
    n, r = noise.shape
    if r == 0:
        return np.zeros((n, 0))
    powers = np.arange(1, r + 1)
    raw = z[:, None] ** powers[None, :] + 0.5 * noise
    return raw * loading_scale(n, alpha_strength)


def draw_idiosyncratic(config: SimConfig, ubar: np.ndarray) -> np.ndarray:
    """Color iid noise: U = Sigma_N^{1/2} Ubar Sigma_T^{1/2}.

    The serial block realizes a stationary AR(1) with unit innovation
    variance: Sigma_T = (rho^|t-s|) / (1 - rho^2).  Serial correlation
    therefore raises the noise level, which is what degrades eigenvector-
    based factor estimates in the forecasting study while leaving the
    cross-sectional projections unaffected.
    """
    n, t = ubar.shape
    out = ubar
    if config.rho_N != 0.0:
        out = _cross_section_sqrt(config.rho_N, config.block_size, config.n_blocks, n) @ out
    if config.rho_T != 0.0:
        out = out @ _ar1_sqrt(config.rho_T, t)
        out = out / np.sqrt(1.0 - config.rho_T**2)
    return np.array(out)


def generate_panel(config: SimConfig, replication: int = 0, rng: np.random.Generator | None = None) -> SimOutput:
    """Simulate one replication of the factor panel.

    The draw order is fixed (characteristics, loading noise, factors,
    idiosyncratic noise) so a shared `rng` can be used to append further
    model-specific draws deterministically.
    """
    if rng is None:
        rng = rep_rng(config.seed, replication)
    n, t, r = config.n_series, config.n_periods, config.n_factors_true
    h = rng.standard_normal(n)
    z = np.sin(h)
    gamma = rng.standard_normal((n, r))
    F = rng.standard_normal((t, r))
    ubar = rng.standard_normal((n, t))
    B = draw_loadings(z, gamma, config.alpha_strength)
    U = draw_idiosyncratic(config, ubar)
    X = B @ F.T + U
    return SimOutput(panel=PanelData(X), F_true=F, B_true=B, U_true=U, z_chars=z)
