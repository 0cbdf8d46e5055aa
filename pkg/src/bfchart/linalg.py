"""Small dense SPD-matrix kernels and reproducible multivariate normal sampling.

Every covariance handled by the package is a small (p x p, p typically 2-10)
symmetric positive definite matrix.  Determinants and quadratic forms go
through a Cholesky factorisation, never an explicit inverse.  Inputs are
symmetrized as (m + m')/2 before factorisation to absorb I/O rounding;
asymmetry beyond an absolute 1e-10 is rejected.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DimensionMismatch, NotPositiveDefinite

#: absolute tolerance on |m - m'| before a matrix is rejected as asymmetric
SYM_ATOL = 1e-10


def as_spd(m) -> np.ndarray:
    """Return a validated, symmetrized float64 copy of ``m``.

    Raises DimensionMismatch for non-square input and NotPositiveDefinite
    for non-finite or materially asymmetric input.  Positive definiteness
    itself is only checked where a factorisation is actually taken.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    if a.size and np.max(np.abs(a - a.T)) > SYM_ATOL:
        raise NotPositiveDefinite("matrix is not symmetric to within 1e-10")
    return 0.5 * (a + a.T)


def cholesky(m) -> np.ndarray:
    """Lower-triangular L with L L' = m; NotPositiveDefinite on failure."""
    a = as_spd(m)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefinite(str(err)) from err


def is_spd(m) -> bool:
    """True if ``m`` passes the symmetry check and factorizes."""
    try:
        cholesky(m)
    except (NotPositiveDefinite, DimensionMismatch):
        return False
    return True


def log_det(m) -> float:
    """log det(m) as twice the sum of log Cholesky pivots."""
    L = cholesky(m)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def chol_log_det(L: np.ndarray) -> float:
    """log det from an already-computed lower Cholesky factor."""
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def chol_quad_form(L: np.ndarray, x: np.ndarray) -> float:
    """x' (L L')^{-1} x from an already-computed lower Cholesky factor."""
    w = solve_triangular(L, x, lower=True, check_finite=False)
    return float(w @ w)


def quad_form(x, m) -> float:
    """x' m^{-1} x via one triangular solve, never an explicit inverse."""
    v = np.asarray(x, dtype=float)
    L = cholesky(m)
    if v.shape != (L.shape[0],):
        raise DimensionMismatch(
            f"vector of length {v.shape} does not match matrix dim {L.shape[0]}"
        )
    return chol_quad_form(L, v)


def sym_inv_sqrt(m) -> np.ndarray:
    """Spectral inverse square root R with R m R = I; R is symmetric."""
    a = as_spd(m)
    w, u = np.linalg.eigh(a)
    if w[0] <= 0.0:
        raise NotPositiveDefinite("matrix has non-positive eigenvalues")
    r = (u / np.sqrt(w)) @ u.T
    return 0.5 * (r + r.T)


def sample_mvn(mean, cov, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from N(mean, cov) as mean + L z, deterministic per rng."""
    if n < 1:
        raise DimensionMismatch(f"sample count must be >= 1, got {n}")
    mu = np.asarray(mean, dtype=float)
    L = cholesky(cov)
    if mu.shape != (L.shape[0],):
        raise DimensionMismatch(
            f"mean of shape {mu.shape} does not match covariance dim {L.shape[0]}"
        )
    z = rng.standard_normal((int(n), L.shape[0]))
    return mu + z @ L.T


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic PCG64 stream for ``seed``; extra keys derive independent
    child streams, e.g. ``make_rng(seed, rep)`` for replication ``rep``."""
    if key:
        return np.random.default_rng([int(seed), *(int(k) for k in key)])
    return np.random.default_rng(int(seed))
