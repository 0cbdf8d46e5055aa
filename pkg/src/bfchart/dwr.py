"""Multivariate discount-weighted local level filter.

The filter keeps a posterior mean vector ``m``, a scalar scale ``P`` and a
running innovation covariance estimate ``S``.  For an observation y the
one-step forecast error is e = y - m, after which

    m <- (delta m + P y) / (delta + P)
    P <- 1 / (delta + P)
    S <- running mean of delta e e' / (delta + P_prev)

The one-step forecast error density is N(0, (delta + P) S / delta).  ``P``
converges to the data-free limit (sqrt(delta^2 + 4) - delta) / 2 and ``S``
estimates the measurement covariance.

``S`` is held as a running sum divided by t for O(p^2) per-step cost and is
re-symmetrized every step; floating point drift would otherwise accumulate
in the outer-product updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .exceptions import CovarianceNotReady, DimensionMismatch, InvalidConfig
from .linalg import is_spd

#: default prior scale; small so the first observation dominates the prior mean
DEFAULT_PRIOR_SCALE = 1e-3


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 < delta <= 1.0:
        raise InvalidConfig(f"discount factor must lie in (0, 1], got {delta}")
    return delta


@dataclass(frozen=True)
class DwrConfig:
    """Dimension, discount factor and prior for the filter."""

    dim: int
    delta: float
    m0: np.ndarray | None = None
    prior_scale: float = DEFAULT_PRIOR_SCALE

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InvalidConfig(f"dimension must be >= 1, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "delta", _check_delta(self.delta))
        if float(self.prior_scale) <= 0.0:
            raise InvalidConfig(f"prior scale must be > 0, got {self.prior_scale}")
        object.__setattr__(self, "prior_scale", float(self.prior_scale))
        m0 = np.zeros(self.dim) if self.m0 is None else np.asarray(self.m0, float)
        if m0.shape != (self.dim,):
            raise DimensionMismatch(
                f"prior mean of shape {m0.shape} does not match dim {self.dim}"
            )
        object.__setattr__(self, "m0", m0.copy())


@dataclass
class FilterState:
    """Sequential filter state; one logical owner advances it in time order."""

    delta: float
    t: int
    m: np.ndarray
    P: float
    sum_outer: np.ndarray

    @property
    def S(self) -> np.ndarray | None:
        """Innovation covariance estimate after t observations; None at t=0."""
        if self.t == 0:
            return None
        return self.sum_outer / self.t

    def step(self, y) -> np.ndarray:
        """Absorb one observation, returning the one-step forecast error."""
        obs = np.asarray(y, dtype=float)
        if obs.shape != self.m.shape:
            raise DimensionMismatch(
                f"observation of shape {obs.shape} does not match dim {self.m.shape}"
            )
        e = obs - self.m
        denom = self.delta + self.P
        acc = self.sum_outer + (self.delta / denom) * np.outer(e, e)
        self.sum_outer = 0.5 * (acc + acc.T)
        self.m = (self.delta * self.m + self.P * obs) / denom
        self.P = 1.0 / denom
        self.t += 1
        return e

    def copy(self) -> "FilterState":
        return FilterState(self.delta, self.t, self.m.copy(), self.P, self.sum_outer.copy())


@dataclass(frozen=True)
class ForecastErrorDensity:
    """Parameters of the zero-mean normal one-step forecast error density."""

    mean: np.ndarray
    cov: np.ndarray


def init(config: DwrConfig) -> FilterState:
    """Fresh filter state from a validated configuration."""
    return FilterState(
        delta=config.delta,
        t=0,
        m=config.m0.copy(),
        P=config.prior_scale,
        sum_outer=np.zeros((config.dim, config.dim)),
    )


def forecast_error_density(state: FilterState) -> ForecastErrorDensity:
    """N(0, (delta + P) S / delta); refuses until S is positive definite.

    No regularization is applied while S is rank deficient: scoring against
    a patched covariance would silently bias the Bayes factors.
    """
    s = state.S
    if s is None or not is_spd(s):
        raise CovarianceNotReady(
            f"innovation covariance is not positive definite at t={state.t}"
        )
    cov = (state.delta + state.P) * s / state.delta
    return ForecastErrorDensity(mean=np.zeros_like(state.m), cov=cov)


def steady_state_scale(delta: float) -> float:
    """Limit of the P recursion: (sqrt(delta^2 + 4) - delta) / 2.

    The limit is the positive solution of the fixed point P = 1/(delta + P).
    """
    delta = _check_delta(delta)
    return (math.sqrt(delta * delta + 4.0) - delta) / 2.0


def scale_sequence(delta: float, p0: float = DEFAULT_PRIOR_SCALE, n: int = 200) -> np.ndarray:
    """The data-free trajectory P_1..P_n of the scale recursion."""
    delta = _check_delta(delta)
    if p0 <= 0.0:
        raise InvalidConfig(f"prior scale must be > 0, got {p0}")
    out = np.empty(n)
    scale = float(p0)
    for t in range(n):
        scale = 1.0 / (delta + scale)
        out[t] = scale
    return out


def steady_state_mean(m0, errors, delta: float) -> np.ndarray:
    """Steady-state approximation of the posterior mean: m0 + P/(delta+P) sum(e)."""
    p_lim = steady_state_scale(delta)
    gain = p_lim / (delta + p_lim)
    m0 = np.asarray(m0, dtype=float)
    total = np.zeros_like(m0)
    for e in errors:
        total = total + np.asarray(e, dtype=float)
    return m0 + gain * total


@dataclass(frozen=True)
class FilterPath:
    """Vectorized filter run over a full series.

    ``errors[t]``, ``m_pre[t]``, ``p_pre[t]`` and ``s_pre[t]`` are the
    quantities in force when observation t arrived (s_pre[0] is the zero
    matrix); ``final`` is the state after the last observation.
    """

    delta: float
    errors: np.ndarray
    m_pre: np.ndarray
    p_pre: np.ndarray
    s_pre: np.ndarray
    s_post: np.ndarray
    final: FilterState

    @property
    def warmup(self) -> int | None:
        """First index t whose pre-update covariance s_pre[t] is solidly SPD.

        Requires the smallest eigenvalue to clear a relative threshold, not
        just a Cholesky success: a barely positive definite early estimate
        would make the standardization and Bayes factors numerically wild.
        """
        for t in range(1, self.errors.shape[0]):
            s = self.s_pre[t]
            w = np.linalg.eigvalsh(s)
            if w[0] > 0.0 and w[0] > 1e-8 * w[-1]:
                return t
        return None


def run_filter(config: DwrConfig, data) -> FilterPath:
    """Run the filter over ``data`` (n x dim) via the accelerated kernel."""
    y = np.ascontiguousarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[1] != config.dim:
        raise DimensionMismatch(
            f"data of shape {y.shape} does not match dim {config.dim}"
        )
    e, m_pre, p_pre, s_post, m_fin, p_fin = _accel.filter_path(
        y, config.delta, config.m0, config.prior_scale
    )
    n, p = y.shape
    s_pre = np.concatenate([np.zeros((1, p, p)), s_post[:-1]], axis=0)
    final = FilterState(
        delta=config.delta, t=n, m=m_fin, P=p_fin, sum_outer=s_post[-1] * n
    )
    return FilterPath(
        delta=config.delta,
        errors=e,
        m_pre=m_pre,
        p_pre=p_pre,
        s_pre=s_pre,
        s_post=s_post,
        final=final,
    )
