"""Log Bayes factor of predictive vs target error density."""

import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from bfchart.bayesfactor import TargetSpec, bf, lbf, lbf_series
from bfchart.dwr import DwrConfig, FilterState, init
from bfchart.exceptions import (
    CovarianceNotReady,
    DimensionMismatch,
    NotPositiveDefinite,
)
from bfchart.linalg import make_rng


def scalar_state(delta, p_scale, s, m=0.0, t=5):
    return FilterState(
        delta=delta,
        t=t,
        m=np.atleast_1d(np.asarray(m, dtype=float)),
        P=p_scale,
        sum_outer=np.atleast_2d(np.asarray(s, dtype=float)) * t,
    )


def random_state_and_target(rng, p):
    a = rng.standard_normal((p, p))
    s = a @ a.T + 0.5 * np.eye(p)
    b = rng.standard_normal((p, p))
    v = b @ b.T + 0.5 * np.eye(p)
    state = FilterState(
        delta=rng.uniform(0.2, 1.0),
        t=7,
        m=rng.standard_normal(p),
        P=rng.uniform(0.05, 1.5),
        sum_outer=s * 7,
    )
    target = TargetSpec(mu=rng.standard_normal(p), V=v)
    return state, target


def oracle_lbf(y, state, target):
    """Direct two-density log ratio via scipy's multivariate normal."""
    pred_cov = (state.delta + state.P) * state.S / state.delta
    log_pred = multivariate_normal.logpdf(y, mean=state.m, cov=pred_cov)
    log_target = multivariate_normal.logpdf(y, mean=target.mu, cov=target.V)
    return log_pred - log_target


class TestTargetSpec:
    def test_caches_determinant(self):
        target = TargetSpec(mu=[0.0, 0.0], V=[[1.0, 2.0], [2.0, 5.0]])
        assert target.logdet == pytest.approx(0.0, abs=1e-12)
        assert target.dim == 2

    def test_rejects_mean_mismatch(self):
        with pytest.raises(DimensionMismatch):
            TargetSpec(mu=[0.0], V=np.eye(2))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            TargetSpec(mu=[0.0, 0.0], V=[[1.0, 2.0], [2.0, 1.0]])


class TestLbf:
    def test_hand_case(self):
        state = scalar_state(delta=0.9, p_scale=0.1, s=1.0)
        target = TargetSpec(mu=[0.0], V=[[1.0]])
        value = lbf([1.0], state, target)
        assert value == pytest.approx(0.5 * math.log(0.9) + 0.05, abs=1e-12)
        assert value == pytest.approx(-0.0026803, abs=1e-7)

    def test_zero_when_densities_coincide(self):
        # S = delta V / (delta + P) and m = mu make the predictive density
        # exactly the target density, so the log ratio vanishes
        rng = make_rng(2)
        for _ in range(20):
            p = int(rng.integers(1, 5))
            a = rng.standard_normal((p, p))
            v = a @ a.T + 0.5 * np.eye(p)
            mu = rng.standard_normal(p)
            delta = rng.uniform(0.2, 1.0)
            p_scale = rng.uniform(0.05, 1.5)
            state = FilterState(
                delta=delta, t=3, m=mu.copy(), P=p_scale,
                sum_outer=3 * delta * v / (delta + p_scale),
            )
            target = TargetSpec(mu=mu, V=v)
            y = rng.standard_normal(p)
            assert abs(lbf(y, state, target)) < 1e-10

    def test_matches_density_ratio_oracle(self):
        rng = make_rng(3)
        for _ in range(200):
            p = int(rng.integers(1, 5))
            state, target = random_state_and_target(rng, p)
            y = rng.standard_normal(p) * 3.0
            value = lbf(y, state, target)
            expected = oracle_lbf(y, state, target)
            assert value == pytest.approx(expected, rel=1e-10, abs=1e-10)

    def test_invariant_under_coordinate_permutation(self):
        rng = make_rng(4)
        state, target = random_state_and_target(rng, 4)
        y = rng.standard_normal(4)
        perm = np.array([2, 0, 3, 1])
        permuted_state = FilterState(
            delta=state.delta,
            t=state.t,
            m=state.m[perm],
            P=state.P,
            sum_outer=state.sum_outer[np.ix_(perm, perm)],
        )
        permuted_target = TargetSpec(
            mu=target.mu[perm], V=target.V[np.ix_(perm, perm)]
        )
        assert lbf(y[perm], permuted_state, permuted_target) == pytest.approx(
            lbf(y, state, target), abs=1e-10
        )

    def test_refuses_cold_state(self):
        with pytest.raises(CovarianceNotReady):
            lbf([0.0], init(DwrConfig(dim=1, delta=0.9)), TargetSpec([0.0], [[1.0]]))

    def test_rejects_observation_mismatch(self):
        state = scalar_state(0.9, 0.1, 1.0)
        with pytest.raises(DimensionMismatch):
            lbf([0.0, 0.0], state, TargetSpec([0.0], [[1.0]]))


class TestBf:
    def test_identical_densities_give_one(self):
        mu = np.array([0.3, -0.2])
        v = np.array([[1.0, 0.4], [0.4, 2.0]])
        delta, p_scale = 0.8, 0.3
        state = FilterState(
            delta=delta, t=2, m=mu.copy(), P=p_scale,
            sum_outer=2 * delta * v / (delta + p_scale),
        )
        assert bf(mu + 0.5, state, TargetSpec(mu, v)) == pytest.approx(1.0, abs=1e-10)

    def test_exponentiates_hand_case(self):
        state = scalar_state(0.9, 0.1, 1.0)
        value = bf([1.0], state, TargetSpec([0.0], [[1.0]]))
        assert value == pytest.approx(0.9973233, abs=1e-7)

    def test_overflow_raises(self):
        # a huge target quadratic form pushes the exponent past the float range
        state = scalar_state(0.9, 0.1, 1.0)
        target = TargetSpec([0.0], [[1e-6]])
        with pytest.raises(OverflowError):
            bf([50.0], state, target)


class TestLbfSeries:
    def test_empty_input(self):
        state = scalar_state(0.9, 0.1, 1.0)
        out = lbf_series([], state, TargetSpec([0.0], [[1.0]]))
        assert out.shape == (0,)
        assert state.t == 5

    def test_alignment_and_state_advance(self):
        rng = make_rng(5)
        state, target = random_state_and_target(rng, 2)
        t0 = state.t
        data = rng.standard_normal((17, 2))
        out = lbf_series(data, state, target)
        assert out.shape == (17,)
        assert state.t == t0 + 17

    def test_scores_before_stepping(self):
        rng = make_rng(6)
        state, target = random_state_and_target(rng, 2)
        data = rng.standard_normal((5, 2))
        expected = []
        shadow = state.copy()
        for row in data:
            expected.append(lbf(row, shadow, target))
            shadow.step(row)
        np.testing.assert_allclose(lbf_series(data, state, target), expected)

    def test_in_control_study_is_roughly_symmetric(self):
        from bfchart.diagnostics import skewness
        from bfchart.simulate import scenario_lbf_study

        study = scenario_lbf_study(n=1000, warmup=100, delta=0.9, seed=0)
        assert abs(skewness(study["in_control"])) < 0.5
