"""Two-phase monitoring workflow.

Phase I fits the discount filter over a grid of discount factors on
historical data, selects the discount whose MSSE is closest to 1, fits an
AR(1) to the resulting log-Bayes-factor series, and calibrates the EWMA
limit multiplier by Monte Carlo to a target in-control ARL.  Phase II
scores new observations against the frozen Phase I components (posterior
mean, covariance estimate, and the steady-state scale limit) and runs the
modified EWMA chart over the centered statistic.

The fitted AR(1) stationary mean is removed from the statistic before
charting, so the chart center is 0 unless ``recenter`` additionally pins
the center to the realized Phase I EWMA mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel, bayesfactor
from .bayesfactor import TargetSpec
from .chart import (
    Ar1Model,
    ChartConfig,
    ChartPoint,
    calibrate_c,
    design_chart,
    fit_ar1,
)
from .diagnostics import FitReport, fit_report
from .dwr import DwrConfig, FilterState, run_filter, steady_state_scale
from .exceptions import DegenerateFit, DimensionMismatch, SchemaMismatch, TooShort
from .linalg import as_spd, cholesky, chol_log_det

SCHEMA_VERSION = 1

#: default discount factor grid searched in Phase I
DELTA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

#: minimum Phase I length; below this AR(1) fitting and the positive
#: definiteness of the covariance estimate are unreliable
MIN_PHASE1 = 30

#: consecutive same-side EWMA points that trigger a concentration warning
RUN_WARNING = 8


def difference(data) -> np.ndarray:
    """First-order difference along time; output is one row shorter."""
    y = np.asarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] < 2:
        raise TooShort(f"need at least 2 observations to difference, got {y.shape[0]}")
    return np.diff(y, axis=0)


def estimate_target(data, zero_mean: bool = False) -> TargetSpec:
    """Sample mean and covariance (divisor n-1) as the target density.

    ``zero_mean`` forces the target mean to zero, the convention for
    dispersion-only monitoring of a differenced series.
    """
    y = np.asarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n, p = y.shape
    if n < p + 2:
        raise TooShort(f"need at least dim + 2 = {p + 2} observations, got {n}")
    mu = np.zeros(p) if zero_mean else y.mean(axis=0)
    cov = np.cov(y, rowvar=False, ddof=1).reshape(p, p)
    return TargetSpec(mu=mu, V=cov)


@dataclass(frozen=True)
class GridEntry:
    """Fit diagnostics for one discount factor candidate."""

    delta: float
    report: FitReport


@dataclass(frozen=True)
class FittedModel:
    """Frozen Phase I components sufficient to monitor new data."""

    delta: float
    m_opt: np.ndarray
    s_opt: np.ndarray
    p_star: float
    target: TargetSpec
    ar: Ar1Model
    chart: ChartConfig
    lbf_offset: float
    recenter: bool
    difference: bool
    n_phase1: int
    warmup: int
    prior_scale: float
    fit: FitReport
    grid: tuple[GridEntry, ...] = ()
    phase1_z: np.ndarray = field(default_factory=lambda: np.empty(0))

    def to_dict(self) -> dict:
        p = self.m_opt.shape[0]
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "bfchart-model",
            "delta": self.delta,
            "p_star": self.p_star,
            "lbf_offset": self.lbf_offset,
            "recenter": self.recenter,
            "difference": self.difference,
            "n_phase1": self.n_phase1,
            "warmup": self.warmup,
            "prior_scale": self.prior_scale,
            "m_opt": self.m_opt.tolist(),
            "s_opt": {"dim": p, "data": self.s_opt.reshape(-1).tolist()},
            "target": {
                "mu": self.target.mu.tolist(),
                "v": {"dim": p, "data": self.target.V.reshape(-1).tolist()},
            },
            "ar": {
                "intercept": self.ar.intercept,
                "phi": self.ar.phi,
                "sigma2": self.ar.sigma2,
            },
            "chart": {
                "lam": self.chart.lam,
                "c": self.chart.c,
                "mu_z": self.chart.mu_z,
                "sigma_z": self.chart.sigma_z,
            },
            "fit": _report_dict(self.fit),
            "grid": [
                {"delta": g.delta, **_report_dict(g.report)} for g in self.grid
            ],
            "phase1_z": self.phase1_z.tolist(),
        }

    @staticmethod
    def from_dict(doc: dict) -> "FittedModel":
        if not isinstance(doc, dict) or doc.get("kind") != "bfchart-model":
            raise SchemaMismatch("not a bfchart model document")
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(
                f"unsupported schema version {doc.get('schema_version')!r}"
            )
        try:
            target = TargetSpec(
                mu=np.array(doc["target"]["mu"], dtype=float),
                V=_mat_from(doc["target"]["v"]),
            )
            ar = Ar1Model(**doc["ar"])
            chart = ChartConfig(**doc["chart"])
            return FittedModel(
                delta=float(doc["delta"]),
                m_opt=np.array(doc["m_opt"], dtype=float),
                s_opt=_mat_from(doc["s_opt"]),
                p_star=float(doc["p_star"]),
                target=target,
                ar=ar,
                chart=chart,
                lbf_offset=float(doc["lbf_offset"]),
                recenter=bool(doc["recenter"]),
                difference=bool(doc["difference"]),
                n_phase1=int(doc["n_phase1"]),
                warmup=int(doc["warmup"]),
                prior_scale=float(doc["prior_scale"]),
                fit=_report_from(doc["fit"]),
                grid=tuple(
                    GridEntry(float(g["delta"]), _report_from(g)) for g in doc["grid"]
                ),
                phase1_z=np.array(doc["phase1_z"], dtype=float),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise SchemaMismatch(f"malformed model document: {err}") from err


def _report_dict(report: FitReport) -> dict:
    return {
        "msse": report.msse.tolist(),
        "mae": report.mae.tolist(),
        "mape": [None if math.isnan(v) else v for v in report.mape],
        "n": report.n,
    }


def _report_from(doc: dict) -> FitReport:
    return FitReport(
        msse=np.array(doc["msse"], dtype=float),
        mae=np.array(doc["mae"], dtype=float),
        mape=np.array(
            [math.nan if v is None else float(v) for v in doc["mape"]], dtype=float
        ),
        n=int(doc["n"]),
    )


def _mat_from(doc: dict) -> np.ndarray:
    dim = int(doc["dim"])
    data = np.array(doc["data"], dtype=float)
    if data.size != dim * dim:
        raise SchemaMismatch(f"matrix payload of size {data.size} is not {dim}x{dim}")
    return data.reshape(dim, dim)


@dataclass(frozen=True)
class MonitorResult:
    """Chart output for one monitored stream."""

    points: tuple[ChartPoint, ...]
    signals: tuple[int, ...]
    lbf: np.ndarray
    warnings: tuple[str, ...]


def phase1(
    data,
    *,
    target: TargetSpec | None = None,
    deltas=DELTA_GRID,
    lam: float = 0.05,
    target_arl: float = 370.4,
    seed: int = 0,
    recenter: bool = False,
    apply_difference: bool = False,
    calib_reps: int = 10**4,
    prior_scale: float = 1e-3,
    m0=None,
) -> FittedModel:
    """Fit, diagnose and calibrate on historical data; returns the frozen model.

    For each discount factor candidate the filter is run over the data and
    the candidate minimizing the mean |MSSE - 1| across coordinates wins.
    """
    y = np.asarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if apply_difference:
        y = difference(y)
    n, p = y.shape
    if n < MIN_PHASE1:
        raise TooShort(f"Phase I needs at least {MIN_PHASE1} observations, got {n}")
    if target is None:
        target = estimate_target(y, zero_mean=apply_difference)
    if target.dim != p:
        raise DimensionMismatch(
            f"target dim {target.dim} does not match data dim {p}"
        )

    candidates = []
    for delta in deltas:
        config = DwrConfig(dim=p, delta=float(delta), m0=m0, prior_scale=prior_scale)
        path = run_filter(config, y)
        w = path.warmup
        if w is None or n - w < 10:
            continue
        # the first scored points right after S turns positive definite are
        # numerically wild; give the estimate a short settling period
        w = max(w, 10)
        covs = [
            (config.delta + path.p_pre[t]) * path.s_pre[t] / config.delta
            for t in range(w, n)
        ]
        report = fit_report(path.errors[w:], covs, y[w:])
        candidates.append((report.msse_score, float(delta), path, w, report))
    if not candidates:
        raise DegenerateFit(
            "no discount factor candidate produced a positive definite "
            "covariance estimate"
        )
    _, delta_opt, path, warmup, report = min(candidates, key=lambda c: (c[0], c[1]))

    lbf_all = _accel.lbf_path(
        np.ascontiguousarray(y),
        path.m_pre,
        path.p_pre,
        np.ascontiguousarray(path.s_pre),
        delta_opt,
        target.mu,
        target.chol,
        target.logdet,
        warmup,
    )
    lbf_vals = lbf_all[warmup:]
    ar = fit_ar1(lbf_vals, include_intercept=True)
    lbf_offset = ar.mean
    statistic = lbf_vals - lbf_offset
    centered_ar = ar.centered()

    calib = calibrate_c(lam, centered_ar, target_arl, reps=calib_reps, seed=seed)
    phase1_z = _accel.ewma_path(np.ascontiguousarray(statistic), lam, 0.0)
    center = float(phase1_z.mean()) if recenter else 0.0
    chart = design_chart(centered_ar, lam, calib.c, center=center)

    return FittedModel(
        delta=delta_opt,
        m_opt=path.final.m.copy(),
        s_opt=as_spd(path.final.S),
        p_star=steady_state_scale(delta_opt),
        target=target,
        ar=ar,
        chart=chart,
        lbf_offset=lbf_offset,
        recenter=recenter,
        difference=apply_difference,
        n_phase1=n,
        warmup=warmup,
        prior_scale=prior_scale,
        fit=report,
        grid=tuple(
            GridEntry(d, r) for _, d, _, _, r in sorted(candidates, key=lambda c: c[1])
        ),
        phase1_z=phase1_z,
    )


def phase2(model: FittedModel, data, tracking: bool = False) -> MonitorResult:
    """Monitor new data against the frozen Phase I model.

    In the default frozen mode the statistic for each y depends only on the
    stored components, so observations are scored independently; the only
    sequential state is the EWMA.  With ``tracking`` the posterior mean and
    covariance estimate keep updating as new data arrive.
    """
    y = np.asarray(data, dtype=float)
    if y.size == 0:
        return MonitorResult((), (), np.empty(0), ())
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[1] != model.target.dim:
        raise DimensionMismatch(
            f"data dim {y.shape[1]} does not match model dim {model.target.dim}"
        )
    if model.difference:
        y = difference(y)
        if y.shape[0] == 0:
            return MonitorResult((), (), np.empty(0), ())

    if tracking:
        state = FilterState(
            delta=model.delta,
            t=model.n_phase1,
            m=model.m_opt.copy(),
            P=model.p_star,
            sum_outer=model.s_opt * model.n_phase1,
        )
        lbf_vals = bayesfactor.lbf_series(y, state, model.target)
    else:
        s_chol = cholesky(model.s_opt)
        s_logdet = chol_log_det(s_chol)
        lbf_vals = np.array(
            [
                bayesfactor.lbf_terms(
                    row, model.m_opt, model.p_star, s_chol, s_logdet,
                    model.delta, model.target,
                )
                for row in y
            ]
        )

    statistic = lbf_vals - model.lbf_offset
    z = _accel.ewma_path(np.ascontiguousarray(statistic), model.chart.lam,
                         model.chart.mu_z)
    ucl, lcl = model.chart.ucl, model.chart.lcl
    points = tuple(
        ChartPoint(t=t, x=float(statistic[t]), z=float(z[t]),
                   out_of_control=bool(z[t] > ucl or z[t] < lcl))
        for t in range(len(z))
    )
    signals = tuple(pt.t for pt in points if pt.out_of_control)
    warnings = tuple(_run_warnings(z, model.chart.mu_z))
    return MonitorResult(points, signals, lbf_vals, warnings)


def _run_warnings(z: np.ndarray, center: float):
    """Maximal runs of >= RUN_WARNING consecutive points on one side of center."""
    side = np.sign(z - center)
    start = 0
    for t in range(1, len(z) + 1):
        if t == len(z) or side[t] != side[start] or side[start] == 0:
            length = t - start
            if length >= RUN_WARNING and side[start] != 0:
                where = "above" if side[start] > 0 else "below"
                yield (
                    f"{length} consecutive EWMA values {where} center "
                    f"from t={start} to t={t - 1}"
                )
            start = t
