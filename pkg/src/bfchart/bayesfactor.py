"""Log Bayes factor of the one-step predictive error density vs the target.

For target N(mu, V) and a filter with pre-update quantities (m, P, S):

    lbf(y) = p/2 log(delta) + 1/2 log det V - p/2 log(delta + P)
             - 1/2 log det S + 1/2 (y-mu)' V^{-1} (y-mu)
             - delta (y-m)' S^{-1} (y-m) / (2 (delta + P))

A value of 0 means the predictive and target densities assign the same
likelihood to y; the chart monitors this statistic over time.  The log form
is canonical; the plain ratio is its exponential and overflows for large
quadratic forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dwr import FilterState
from .exceptions import CovarianceNotReady, DimensionMismatch
from .linalg import as_spd, chol_log_det, chol_quad_form, cholesky, is_spd


@dataclass(frozen=True)
class TargetSpec:
    """Target error density N(mu, V) with cached factorisation of V."""

    mu: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        v = as_spd(self.V)
        if mu.shape != (v.shape[0],):
            raise DimensionMismatch(
                f"target mean shape {mu.shape} does not match V dim {v.shape[0]}"
            )
        chol = cholesky(v)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_logdet", chol_log_det(chol))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @property
    def logdet(self) -> float:
        return self._logdet

    @property
    def chol(self) -> np.ndarray:
        return self._chol


def lbf_terms(
    y,
    m: np.ndarray,
    p_scale: float,
    s_chol: np.ndarray,
    s_logdet: float,
    delta: float,
    target: TargetSpec,
) -> float:
    """The log Bayes factor from explicit pre-update components."""
    obs = np.asarray(y, dtype=float)
    p = target.dim
    if obs.shape != (p,):
        raise DimensionMismatch(f"observation shape {obs.shape} does not match dim {p}")
    q_target = chol_quad_form(target.chol, obs - target.mu)
    q_pred = chol_quad_form(s_chol, obs - m)
    denom = delta + p_scale
    return (
        0.5 * p * math.log(delta)
        + 0.5 * target.logdet
        - 0.5 * p * math.log(denom)
        - 0.5 * s_logdet
        + 0.5 * q_target
        - 0.5 * delta * q_pred / denom
    )


def _state_chol(state: FilterState) -> tuple[np.ndarray, float]:
    s = state.S
    if s is None or not is_spd(s):
        raise CovarianceNotReady(
            f"innovation covariance is not positive definite at t={state.t}"
        )
    chol = cholesky(s)
    return chol, chol_log_det(chol)


def lbf(y, state: FilterState, target: TargetSpec) -> float:
    """Log Bayes factor of y against the state's pre-update quantities."""
    s_chol, s_logdet = _state_chol(state)
    return lbf_terms(y, state.m, state.P, s_chol, s_logdet, state.delta, target)


def bf(y, state: FilterState, target: TargetSpec) -> float:
    """Plain Bayes factor exp(lbf); raises OverflowError when unrepresentable."""
    value = lbf(y, state, target)
    out = math.exp(value) if value < 709.0 else math.inf
    if not math.isfinite(out):
        raise OverflowError(
            f"Bayes factor exponent {value:.1f} exceeds the floating point range; "
            "use the log form"
        )
    return out


def lbf_series(data, state: FilterState, target: TargetSpec) -> np.ndarray:
    """Score then advance the filter for each observation, in order.

    The state must already be warm (S positive definite).  The returned
    sequence is aligned with the input; the state ends advanced len(data)
    steps.
    """
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return np.empty(0)
    out = np.empty(len(arr))
    for i, y in enumerate(arr.reshape(len(arr), -1)):
        out[i] = lbf(y, state, target)
        state.step(y)
    return out
