"""Factor-augmented forecasting and rolling out-of-sample evaluation.

The augmented regression projects a lead of the target series on estimated
factors plus observed predictors; the rolling evaluator re-estimates the
factors inside every moving window so competing factor estimators can be
compared on identical data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, InsufficientDataError, NumericalWarning
from .projection import estimate_factors, pc_factors, pseudo_inverse
from .weights import WeightMatrix, rolling_window_weights


@dataclass(frozen=True)
class AugmentedRegression:
    """OLS fit of y_{t+h} on z_t = (factors_t, observables_t)."""

    delta_hat: np.ndarray     # length R + p, factor block first
    lead: int
    design_gram: np.ndarray   # (R+p) x (R+p)
    n_factors: int


@dataclass(frozen=True)
class RollingForecastReport:
    """Out-of-sample forecasts over a moving window."""

    forecasts: np.ndarray
    realized: np.ndarray
    mse: float


def fit_augmented(y, observables, factors, lead: int = 1) -> AugmentedRegression:
    """Regress y_{t+h} on z_t = (f_hat_t', g_t')' over t = 1..T-h.

    `observables` may be None (factors only).  A near-singular design gram
    is resolved by a pseudo-inverse with a warning; duplicated factor
    columns therefore leave fitted values unchanged.
    """
    y = np.asarray(y, dtype=float).ravel()
    F = np.atleast_2d(np.asarray(factors, dtype=float))
    if F.shape[0] != y.size:
        raise DimensionError("factors and target series disagree on the number of periods")
    if observables is None:
        Z = F
    else:
        G = np.asarray(observables, dtype=float)
        if G.ndim == 1:
            G = G[:, None]
        if G.shape[0] != y.size:
            raise DimensionError("observables and target series disagree on the number of periods")
        Z = np.hstack([F, G])
    t, k = Z.shape
    if lead < 0:
        raise ValueError("lead must be non-negative")
    if t - lead < k + 1:
        raise InsufficientDataError(
            f"need T - h >= R + p + 1, got T={t}, h={lead}, R+p={k}"
        )
    Z_in = Z[: t - lead]
    y_lead = y[lead:]
    gram = Z_in.T @ Z_in
    rhs = Z_in.T @ y_lead
    eigs = np.linalg.eigvalsh(gram)
    if eigs[-1] <= 0 or eigs[0] <= 1e-10 * eigs[-1]:
        warnings.warn(
            "augmented design gram is singular to tolerance; using a pseudo-inverse",
            NumericalWarning,
            stacklevel=2,
        )
        delta = pseudo_inverse(gram) @ rhs
    else:
        delta = np.linalg.solve(gram, rhs)
    return AugmentedRegression(delta_hat=delta, lead=lead, design_gram=gram, n_factors=F.shape[1])


def predict(model: AugmentedRegression, factors_T, observables_T=None) -> float:
    """Point forecast delta_hat'(f_T', g_T')'."""
    f = np.asarray(factors_T, dtype=float).ravel()
    z = f if observables_T is None else np.concatenate([f, np.asarray(observables_T, dtype=float).ravel()])
    if z.size != model.delta_hat.size:
        raise DimensionError(
            f"predictor vector has length {z.size}, model expects {model.delta_hat.size}"
        )
    return float(model.delta_hat @ z)


class FixedWeightScheme:
    """Window factor estimates from one fixed diversified weight matrix."""

    def __init__(self, weights: WeightMatrix):
        self.weights = weights

    @property
    def n_factors(self) -> int:
        return self.weights.n_working_factors

    def factors(self, X, start: int, window: int) -> np.ndarray:
        return estimate_factors(X[:, start : start + window], self.weights)


class PCScheme:
    """Window factor estimates from principal components (benchmark)."""

    def __init__(self, n_factors: int):
        self.n_factors = n_factors

    def factors(self, X, start: int, window: int) -> np.ndarray:
        return pc_factors(X[:, start : start + window], self.n_factors).factors


class RollingWeightScheme:
    """Trimmed-PCA weights re-learned from the observations preceding each window.

    `history` is the pre-sample panel sitting immediately before column 0
    of the forecast panel; for the window starting at column t the weights
    are learned from the `window` observations ending at column t - 1 of
    the combined (history, panel) series.
    """

    def __init__(self, history: np.ndarray, n_factors: int, epsilon: float = 1.0):
        self.history = np.atleast_2d(np.asarray(history, dtype=float))
        self.n_factors = n_factors
        self.epsilon = epsilon

    def factors(self, X, start: int, window: int) -> np.ndarray:
        t_pre = self.history.shape[1]
        lo = t_pre + start - window
        if lo < 0:
            raise InsufficientDataError(
                f"weight history needs {window - start} pre-sample columns, have {t_pre}"
            )
        combined = np.hstack([self.history, X[:, :start]]) if start > 0 else self.history
        hist_win = combined[:, lo : t_pre + start]
        W = rolling_window_weights(hist_win, self.n_factors, self.epsilon)
        return estimate_factors(X[:, start : start + window], W)


def rolling_forecast(
    y,
    X,
    window: int,
    steps: int,
    scheme,
    h: int = 1,
    extra=None,
    include_intercept: bool = True,
    include_lag: bool = True,
) -> RollingForecastReport:
    """One-step-ahead (or h-step) forecasts over `steps` moving windows.

    For each t = 0..steps-1 the factors are re-estimated on columns
    t..t+window-1 of X, the augmented regression of y_{s+h} on
    (f_hat_s, 1, y_s, extra_s) is refit inside the window, and y at
    position t+window-1+h is forecast from the window's last observation.

    `scheme` is an object with a ``factors(X, start, window)`` method (see
    :class:`FixedWeightScheme`, :class:`PCScheme`,
    :class:`RollingWeightScheme`) or a bare callable with that signature.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if h < 1:
        raise ValueError("h must be at least 1")
    needed = window + steps - 1 + h
    if y.size < needed or X.shape[1] < window + steps - 1:
        raise InsufficientDataError(
            f"need {needed} observations of y and {window + steps - 1} columns of X, "
            f"got {y.size} and {X.shape[1]}"
        )
    if extra is not None:
        extra = np.asarray(extra, dtype=float)
        if extra.ndim == 1:
            extra = extra[:, None]
        if extra.shape[0] < window + steps - 1:
            raise InsufficientDataError("extra observables are shorter than the forecast span")

    factors_of = scheme.factors if hasattr(scheme, "factors") else scheme
    forecasts = np.empty(steps)
    realized = np.empty(steps)
    for t in range(steps):
        y_win = y[t : t + window]
        F = factors_of(X, t, window)
        obs_cols = []
        if include_intercept:
            obs_cols.append(np.ones(window))
        if include_lag:
            obs_cols.append(y_win)
        if extra is not None:
            obs_cols.append(extra[t : t + window])
        obs = np.column_stack(obs_cols) if obs_cols else None
        model = fit_augmented(y_win, obs, F, lead=h)
        last_obs = obs[-1] if obs is not None else None
        forecasts[t] = predict(model, F[-1], last_obs)
        realized[t] = y[t + window - 1 + h]
    err = forecasts - realized
    return RollingForecastReport(forecasts=forecasts, realized=realized, mse=float(np.mean(err**2)))
