"""Hot numeric kernels with numba acceleration and pure-numpy fallbacks.

The numba-compiled paths are used whenever numba imports cleanly.  Setting
the environment variable ``BFCHART_NO_NUMBA=1`` before import forces the
pure-numpy fallbacks; ``benchmarks/bench_kernels.py`` times both paths.

Both paths consume the same noise arrays in the same order, so results are
reproducible per seed within either path.
"""

from __future__ import annotations

import math
import os

import numpy as np

_FORCED_OFF = os.environ.get("BFCHART_NO_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
)

try:
    if _FORCED_OFF:
        raise ImportError("numba disabled via BFCHART_NO_NUMBA")
    from numba import njit

    USING_NUMBA = True
except ImportError:
    USING_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator stand-in
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# discount filter path
# ---------------------------------------------------------------------------


def _filter_path_loop(y, delta, m0, p0):
    """Run the discount local-level recursions over a whole series.

    Returns (e, m_pre, p_pre, s_post, m_final, p_final) where the ``_pre``
    arrays hold the pre-update quantities used to score observation t and
    s_post[t] is the innovation covariance estimate after t+1 observations.
    """
    n, p = y.shape
    e = np.empty((n, p))
    m_pre = np.empty((n, p))
    p_pre = np.empty(n)
    s_post = np.empty((n, p, p))
    m = m0.copy()
    scale = p0
    acc = np.zeros((p, p))
    for t in range(n):
        p_pre[t] = scale
        denom = delta + scale
        for i in range(p):
            m_pre[t, i] = m[i]
            e[t, i] = y[t, i] - m[i]
        w = delta / denom
        for i in range(p):
            for j in range(p):
                acc[i, j] += w * e[t, i] * e[t, j]
        inv_t = 1.0 / (t + 1.0)
        for i in range(p):
            for j in range(i, p):
                s = 0.5 * (acc[i, j] + acc[j, i]) * inv_t
                s_post[t, i, j] = s
                s_post[t, j, i] = s
        for i in range(p):
            m[i] = (delta * m[i] + scale * y[t, i]) / denom
        scale = 1.0 / denom
    return e, m_pre, p_pre, s_post, m, scale


def _filter_path_np(y, delta, m0, p0):
    n, p = y.shape
    e = np.empty((n, p))
    m_pre = np.empty((n, p))
    p_pre = np.empty(n)
    s_post = np.empty((n, p, p))
    m = m0.astype(float).copy()
    scale = float(p0)
    acc = np.zeros((p, p))
    for t in range(n):
        p_pre[t] = scale
        m_pre[t] = m
        err = y[t] - m
        e[t] = err
        denom = delta + scale
        acc += (delta / denom) * np.outer(err, err)
        s = 0.5 * (acc + acc.T) / (t + 1.0)
        s_post[t] = s
        m = (delta * m + scale * y[t]) / denom
        scale = 1.0 / denom
    return e, m_pre, p_pre, s_post, m, scale


# ---------------------------------------------------------------------------
# log Bayes factor path
# ---------------------------------------------------------------------------


def _fwd_quad_loop(L, d, w):
    """Quadratic form d' (L L')^{-1} d via forward substitution."""
    p = d.shape[0]
    acc = 0.0
    for i in range(p):
        s = d[i]
        for j in range(i):
            s -= L[i, j] * w[j]
        w[i] = s / L[i, i]
        acc += w[i] * w[i]
    return acc


def _lbf_path_loop(y, m_pre, p_pre, s_pre, delta, mu, l_target, logdet_target, start):
    """Score each observation from ``start`` on with the log Bayes factor.

    s_pre[t] must be positive definite for every t >= start.  Entries before
    ``start`` are NaN.
    """
    n, p = y.shape
    out = np.full(n, np.nan)
    w = np.empty(p)
    d = np.empty(p)
    half_p = 0.5 * p
    base = half_p * math.log(delta) + 0.5 * logdet_target
    for t in range(start, n):
        for i in range(p):
            d[i] = y[t, i] - mu[i]
        q_target = _fwd_quad_loop(l_target, d, w)
        ls = np.linalg.cholesky(s_pre[t])
        logdet_s = 0.0
        for i in range(p):
            logdet_s += math.log(ls[i, i])
        logdet_s *= 2.0
        for i in range(p):
            d[i] = y[t, i] - m_pre[t, i]
        q_pred = _fwd_quad_loop(ls, d, w)
        denom = delta + p_pre[t]
        out[t] = (
            base
            - half_p * math.log(denom)
            - 0.5 * logdet_s
            + 0.5 * q_target
            - 0.5 * delta * q_pred / denom
        )
    return out


def _lbf_path_np(y, m_pre, p_pre, s_pre, delta, mu, l_target, logdet_target, start):
    from scipy.linalg import solve_triangular

    n, p = y.shape
    out = np.full(n, np.nan)
    base = 0.5 * p * math.log(delta) + 0.5 * logdet_target
    dt = y[start:] - mu
    wt = solve_triangular(l_target, dt.T, lower=True, check_finite=False)
    q_target = np.sum(wt * wt, axis=0)
    for k, t in enumerate(range(start, n)):
        ls = np.linalg.cholesky(s_pre[t])
        logdet_s = 2.0 * np.sum(np.log(np.diag(ls)))
        d = y[t] - m_pre[t]
        w = solve_triangular(ls, d, lower=True, check_finite=False)
        denom = delta + p_pre[t]
        out[t] = (
            base
            - 0.5 * p * math.log(denom)
            - 0.5 * logdet_s
            + 0.5 * q_target[k]
            - 0.5 * delta * (w @ w) / denom
        )
    return out


# ---------------------------------------------------------------------------
# EWMA paths and run lengths
# ---------------------------------------------------------------------------


def _ewma_path_loop(x, lam, z0):
    n = x.shape[0]
    z = np.empty(n)
    prev = z0
    for t in range(n):
        prev = lam * x[t] + (1.0 - lam) * prev
        z[t] = prev
    return z


def _ewma_path_np(x, lam, z0):
    from scipy.signal import lfilter

    if x.shape[0] == 0:
        return np.empty(0)
    z, _ = lfilter([lam], [1.0, -(1.0 - lam)], x, zi=[(1.0 - lam) * z0])
    return z


def _rl_chunk_loop(noise, x, z, phi, icept, lam, ucl, lcl):
    """Advance the AR(1)+EWMA recursion through one noise chunk.

    Returns (steps_consumed, signalled, x_end, z_end); on a signal the step
    count is the within-chunk index of the crossing (1-based).
    """
    n = noise.shape[0]
    for k in range(n):
        x = icept + phi * x + noise[k]
        z = lam * x + (1.0 - lam) * z
        if z > ucl or z < lcl:
            return k + 1, True, x, z
    return n, False, x, z


def _rl_chunk_np(noise, x, z, phi, icept, lam, ucl, lcl):
    from scipy.signal import lfilter

    n = noise.shape[0]
    xs, _ = lfilter([1.0], [1.0, -phi], icept + noise, zi=[phi * x])
    zs, _ = lfilter([lam], [1.0, -(1.0 - lam)], xs, zi=[(1.0 - lam) * z])
    hit = (zs > ucl) | (zs < lcl)
    if hit.any():
        k = int(np.argmax(hit))
        return k + 1, True, float(xs[k]), float(zs[k])
    return n, False, float(xs[-1]), float(zs[-1])


if USING_NUMBA:
    filter_path = njit(cache=True)(_filter_path_loop)
    _fwd_quad = njit(cache=True)(_fwd_quad_loop)

    @njit(cache=True)
    def lbf_path(y, m_pre, p_pre, s_pre, delta, mu, l_target, logdet_target, start):
        n, p = y.shape
        out = np.full(n, np.nan)
        w = np.empty(p)
        d = np.empty(p)
        half_p = 0.5 * p
        base = half_p * math.log(delta) + 0.5 * logdet_target
        for t in range(start, n):
            for i in range(p):
                d[i] = y[t, i] - mu[i]
            q_target = _fwd_quad(l_target, d, w)
            ls = np.linalg.cholesky(s_pre[t])
            logdet_s = 0.0
            for i in range(p):
                logdet_s += math.log(ls[i, i])
            logdet_s *= 2.0
            for i in range(p):
                d[i] = y[t, i] - m_pre[t, i]
            q_pred = _fwd_quad(ls, d, w)
            denom = delta + p_pre[t]
            out[t] = (
                base
                - half_p * math.log(denom)
                - 0.5 * logdet_s
                + 0.5 * q_target
                - 0.5 * delta * q_pred / denom
            )
        return out

    ewma_path = njit(cache=True)(_ewma_path_loop)
    run_length_chunk = njit(cache=True)(_rl_chunk_loop)
else:
    filter_path = _filter_path_np
    lbf_path = _lbf_path_np
    ewma_path = _ewma_path_np
    run_length_chunk = _rl_chunk_np
