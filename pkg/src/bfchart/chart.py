"""Modified EWMA control chart for a serially correlated statistic.

The chart smooths the monitored statistic with z = lam x + (1 - lam) z and
compares it against time-invariant limits mu_z +/- c sigma_z, where
sigma_z^2 is the asymptotic EWMA variance under AR(1) dependence:

    sigma_z^2 = sigma^2 lam (1 + phi (1 - lam))
                / [(1 - phi^2) (2 - lam) (1 - phi (1 - lam))]

The limit multiplier c is calibrated by Monte-Carlo bisection so that the
in-control average run length matches a target (370.4 by default elsewhere).
Replications derive independent RNG streams from (seed, replication index),
so calibration is deterministic under a fixed seed and independent of any
scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _accel
from .exceptions import BracketFailure, InvalidConfig, NonStationary, TooShort
from .linalg import make_rng

#: hard cap on a single simulated run length; beyond it the run is censored
RUN_LENGTH_CAP = 10**7

_CHUNK = 2048


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 < lam <= 1.0:
        raise InvalidConfig(f"EWMA smoothing parameter must lie in (0, 1], got {lam}")
    return lam


@dataclass(frozen=True)
class Ar1Model:
    """Stationary AR(1): x_t = intercept + phi x_{t-1} + nu_t, nu ~ N(0, sigma2)."""

    intercept: float
    phi: float
    sigma2: float

    def __post_init__(self):
        if abs(self.phi) >= 1.0:
            raise NonStationary(f"autoregressive coefficient {self.phi} has modulus >= 1")
        if self.sigma2 <= 0.0:
            raise InvalidConfig(f"innovation variance must be > 0, got {self.sigma2}")

    @property
    def mean(self) -> float:
        """Stationary mean intercept / (1 - phi)."""
        return self.intercept / (1.0 - self.phi)

    @property
    def variance(self) -> float:
        """Stationary variance sigma2 / (1 - phi^2)."""
        return self.sigma2 / (1.0 - self.phi**2)

    def centered(self) -> "Ar1Model":
        """Same dynamics with the stationary mean removed."""
        return Ar1Model(0.0, self.phi, self.sigma2)


@dataclass(frozen=True)
class ChartConfig:
    """EWMA smoothing, center and derived control limits."""

    lam: float
    c: float
    mu_z: float
    sigma_z: float

    def __post_init__(self):
        object.__setattr__(self, "lam", _check_lambda(self.lam))
        if self.c <= 0.0:
            raise InvalidConfig(f"limit multiplier must be > 0, got {self.c}")
        if self.sigma_z <= 0.0:
            raise InvalidConfig(f"sigma_z must be > 0, got {self.sigma_z}")

    @property
    def ucl(self) -> float:
        return self.mu_z + self.c * self.sigma_z

    @property
    def lcl(self) -> float:
        return self.mu_z - self.c * self.sigma_z


@dataclass(frozen=True)
class ChartPoint:
    t: int
    x: float
    z: float
    out_of_control: bool


class RunLength(NamedTuple):
    length: int
    censored: bool


def ewma_update(z_prev: float, x: float, lam: float) -> float:
    """One smoothing step lam x + (1 - lam) z_prev."""
    lam = _check_lambda(lam)
    return lam * x + (1.0 - lam) * z_prev


def asymptotic_sigma_z2(lam: float, ar: Ar1Model) -> float:
    """Asymptotic EWMA variance under AR(1) dependence; sigma2 lam/(2-lam) at phi=0."""
    lam = _check_lambda(lam)
    damp = ar.phi * (1.0 - lam)
    if abs(damp) >= 1.0:
        raise InvalidConfig(f"|phi (1 - lam)| must be < 1, got {damp}")
    num = ar.sigma2 * lam * (1.0 + damp)
    den = (1.0 - ar.phi**2) * (2.0 - lam) * (1.0 - damp)
    return num / den


def fit_ar1(x, include_intercept: bool = True) -> Ar1Model:
    """OLS of x_t on (1, x_{t-1}); sigma2 = RSS / (n - 1 - k)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 10:
        raise TooShort(f"need at least 10 values to fit an AR(1), got {arr.size}")
    resp = arr[1:]
    lagged = arr[:-1]
    if include_intercept:
        design = np.column_stack([np.ones_like(lagged), lagged])
    else:
        design = lagged[:, None]
    coef, _, _, _ = np.linalg.lstsq(design, resp, rcond=None)
    resid = resp - design @ coef
    k = design.shape[1]
    dof = arr.size - 1 - k
    if dof <= 0:
        raise TooShort(f"not enough degrees of freedom ({dof}) for the residual variance")
    sigma2 = float(resid @ resid) / dof
    phi = float(coef[-1])
    intercept = float(coef[0]) if include_intercept else 0.0
    if abs(phi) >= 1.0:
        raise NonStationary(f"fitted autoregressive coefficient {phi} has modulus >= 1")
    if sigma2 <= 0.0:
        raise NonStationary("residual variance collapsed to zero; series is deterministic")
    return Ar1Model(intercept=intercept, phi=phi, sigma2=sigma2)


def design_chart(ar: Ar1Model, lam: float, c: float, center: float = 0.0) -> ChartConfig:
    """Time-invariant limits center +/- c sigma_z from the asymptotic variance."""
    sigma_z = math.sqrt(asymptotic_sigma_z2(lam, ar))
    return ChartConfig(lam=lam, c=c, mu_z=float(center), sigma_z=sigma_z)


def run_chart(x, config: ChartConfig, z0: float | None = None) -> list[ChartPoint]:
    """Smooth a statistic sequence and label every point against the limits.

    Monitoring continues past signals; all points are returned.  z0 defaults
    to the chart center.
    """
    arr = np.asarray(x, dtype=float)
    start = config.mu_z if z0 is None else float(z0)
    if arr.size == 0:
        return []
    z = _accel.ewma_path(np.ascontiguousarray(arr), config.lam, start)
    ucl, lcl = config.ucl, config.lcl
    return [
        ChartPoint(t=t, x=float(arr[t]), z=float(z[t]),
                   out_of_control=bool(z[t] > ucl or z[t] < lcl))
        for t in range(arr.size)
    ]


def simulate_run_length(
    config: ChartConfig,
    ar: Ar1Model,
    rng: np.random.Generator,
    cap: int = RUN_LENGTH_CAP,
) -> RunLength:
    """First time the EWMA of a stationary AR(1) stream leaves the limits.

    The AR(1) state starts from its stationary distribution and the EWMA
    from the chart center; runs longer than ``cap`` are censored at ``cap``.
    """
    sigma = math.sqrt(ar.sigma2)
    x = ar.mean + math.sqrt(ar.variance) * rng.standard_normal()
    z = config.mu_z
    total = 0
    while total < cap:
        chunk = min(_CHUNK, cap - total)
        noise = sigma * rng.standard_normal(chunk)
        steps, signalled, x, z = _accel.run_length_chunk(
            noise, x, z, ar.phi, ar.intercept, config.lam, config.ucl, config.lcl
        )
        total += int(steps)
        if signalled:
            return RunLength(total, False)
    return RunLength(cap, True)


def estimate_arl(
    config: ChartConfig,
    ar: Ar1Model,
    reps: int,
    seed: int,
    cap: int = RUN_LENGTH_CAP,
) -> tuple[float, float, int]:
    """Mean run length over seeded replications: (mean, standard error, censored)."""
    lengths = np.empty(reps)
    censored = 0
    for rep in range(reps):
        rl = simulate_run_length(config, ar, make_rng(seed, rep), cap=cap)
        lengths[rep] = rl.length
        censored += rl.censored
    mean = float(lengths.mean())
    se = float(lengths.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.inf
    return mean, se, censored


@dataclass(frozen=True)
class CalibrationResult:
    c: float
    arl: float
    arl_se: float
    evaluations: int


def calibrate_c(
    lam: float,
    ar: Ar1Model,
    target_arl: float,
    reps: int = 10**4,
    seed: int = 0,
    lo: float = 0.5,
    hi: float = 6.0,
    rel_tol: float = 0.02,
    width_tol: float = 1e-3,
) -> CalibrationResult:
    """Bisection on the limit multiplier c until the simulated ARL hits target.

    Terminates when the estimated ARL is within ``rel_tol`` of the target or
    the bracket width falls below ``width_tol``.  All candidate evaluations
    reuse the same replication seed schedule (common random numbers), which
    keeps the estimated ARL monotone in c and the whole search deterministic.
    """
    if target_arl <= 1.0:
        raise InvalidConfig(f"target ARL must exceed 1, got {target_arl}")
    if reps < 1:
        raise InvalidConfig(f"replication count must be >= 1, got {reps}")
    lam = _check_lambda(lam)
    # runs far beyond the target carry no information for calibration
    cap = min(RUN_LENGTH_CAP, max(10_000, int(100 * target_arl)))
    centered = ar

    def evaluate(c: float, n: int) -> tuple[float, float]:
        cfg = design_chart(centered, lam, c, center=centered.mean)
        mean, se, _ = estimate_arl(cfg, centered, n, seed, cap=cap)
        return mean, se

    bracket_reps = max(200, reps // 100)
    lo_arl, _ = evaluate(lo, bracket_reps)
    if lo_arl > target_arl:
        raise BracketFailure(
            f"ARL at c={lo} is already {lo_arl:.1f} > target {target_arl}"
        )
    hi_arl, _ = evaluate(hi, bracket_reps)
    if hi_arl < target_arl:
        raise BracketFailure(
            f"ARL at c={hi} is only {hi_arl:.1f} < target {target_arl}"
        )

    evaluations = 2
    mid, mid_arl, mid_se = 0.5 * (lo + hi), math.nan, math.nan
    while hi - lo >= width_tol:
        mid = 0.5 * (lo + hi)
        mid_arl, mid_se = evaluate(mid, reps)
        evaluations += 1
        if abs(mid_arl - target_arl) <= rel_tol * target_arl:
            return CalibrationResult(mid, mid_arl, mid_se, evaluations)
        if mid_arl < target_arl:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    mid_arl, mid_se = evaluate(mid, reps)
    return CalibrationResult(mid, mid_arl, mid_se, evaluations + 1)
