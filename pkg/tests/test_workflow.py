"""Two-phase workflow: fitting, serialization, frozen monitoring."""

import numpy as np
import pytest

from bfchart.bayesfactor import TargetSpec
from bfchart.chart import asymptotic_sigma_z2
from bfchart.dwr import DwrConfig, steady_state_scale
from bfchart.exceptions import (
    DegenerateFit,
    DimensionMismatch,
    NotPositiveDefinite,
    SchemaMismatch,
    TooShort,
)
from bfchart.linalg import is_spd, make_rng
from bfchart.simulate import gen_local_level
from bfchart.workflow import (
    DELTA_GRID,
    FittedModel,
    difference,
    estimate_target,
    phase1,
    phase2,
)

SIGMA = np.array([[1.0, 2.0], [2.0, 5.0]])


@pytest.fixture(scope="module")
def fitted():
    """One shared Phase I fit on self-consistent in-control data."""
    config = DwrConfig(dim=2, delta=0.9)
    data = gen_local_level(config, SIGMA, 400, make_rng(50))
    model = phase1(
        data,
        deltas=(0.7, 0.8, 0.9),
        lam=0.05,
        target_arl=370.4,
        seed=1,
        calib_reps=500,
    )
    return model, data, config


class TestDifference:
    def test_hand_case(self):
        np.testing.assert_array_equal(
            difference([[1.0], [3.0], [6.0]]), [[2.0], [3.0]]
        )

    def test_constant_series(self):
        np.testing.assert_array_equal(difference(np.ones((4, 2))), np.zeros((3, 2)))

    def test_too_short(self):
        with pytest.raises(TooShort):
            difference([[1.0]])

    def test_inverts_cumulative_sum(self):
        rows = make_rng(51).standard_normal((30, 2))
        np.testing.assert_allclose(
            difference(np.cumsum(rows, axis=0)), rows[1:], atol=1e-12
        )

    def test_random_walk_becomes_white(self):
        walk = np.cumsum(make_rng(52).standard_normal((10**4, 2)), axis=0)
        from bfchart.diagnostics import lag1_autocorr

        diffed = difference(walk)
        for coord in range(2):
            assert abs(lag1_autocorr(diffed[:, coord])) < 0.05


class TestEstimateTarget:
    def test_sample_moments(self):
        from bfchart.simulate import gen_iid, reference_scenarios

        data = gen_iid(reference_scenarios()["in_control"], 10**4, make_rng(53))
        target = estimate_target(data)
        assert np.all(np.abs(target.mu) < 0.07)
        assert np.all(
            np.abs(np.diag(target.V) - np.diag(SIGMA)) < 0.05 * np.diag(SIGMA)
        )

    def test_matches_numpy_cov(self):
        data = make_rng(54).standard_normal((40, 3))
        target = estimate_target(data)
        np.testing.assert_allclose(target.V, np.cov(data, rowvar=False, ddof=1))
        np.testing.assert_allclose(target.mu, data.mean(axis=0))

    def test_zero_mean_flag(self):
        data = make_rng(55).standard_normal((40, 2)) + 5.0
        target = estimate_target(data, zero_mean=True)
        np.testing.assert_array_equal(target.mu, [0.0, 0.0])

    def test_constant_data_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            estimate_target(np.ones((20, 2)))

    def test_too_short(self):
        with pytest.raises(TooShort):
            estimate_target(np.ones((3, 2)))


class TestPhase1(object):
    def test_selected_model_is_adequate(self, fitted):
        model, _, _ = fitted
        assert model.delta in (0.7, 0.8, 0.9)
        assert is_spd(model.s_opt)
        assert np.all((model.fit.msse > 0.8) & (model.fit.msse < 1.2))
        assert model.p_star == pytest.approx(steady_state_scale(model.delta))
        assert model.n_phase1 == 400

    def test_selection_minimizes_msse_score(self, fitted):
        model, _, _ = fitted
        scores = {g.delta: g.report.msse_score for g in model.grid}
        assert scores[model.delta] == min(scores.values())

    def test_chart_limits_follow_asymptotic_variance(self, fitted):
        model, _, _ = fitted
        sigma_z2 = asymptotic_sigma_z2(model.chart.lam, model.ar.centered())
        assert model.chart.sigma_z == pytest.approx(np.sqrt(sigma_z2), rel=1e-12)
        assert model.chart.ucl == pytest.approx(
            model.chart.mu_z + model.chart.c * model.chart.sigma_z
        )

    def test_offset_is_stationary_mean_of_fit(self, fitted):
        model, _, _ = fitted
        assert model.lbf_offset == pytest.approx(model.ar.mean)
        assert model.chart.mu_z == 0.0  # recenter off

    def test_default_grid_constant(self):
        assert DELTA_GRID == tuple(round(0.1 * k, 1) for k in range(1, 10))

    def test_too_short_rejected(self):
        with pytest.raises(TooShort):
            phase1(np.zeros((10, 2)))

    def test_degenerate_data_rejected(self):
        with pytest.raises((DegenerateFit, NotPositiveDefinite)):
            phase1(np.ones((60, 2)), target=TargetSpec([1.0, 1.0], np.eye(2)),
                   deltas=(0.9,), calib_reps=200)

    def test_target_dim_checked(self, fitted):
        _, data, _ = fitted
        with pytest.raises(DimensionMismatch):
            phase1(data, target=TargetSpec([0.0], [[1.0]]), deltas=(0.9,),
                   calib_reps=200)

    def test_recenter_zeroes_phase1_ewma(self):
        config = DwrConfig(dim=2, delta=0.9)
        data = gen_local_level(config, SIGMA, 200, make_rng(56))
        model = phase1(data, deltas=(0.9,), seed=2, calib_reps=300, recenter=True)
        assert model.recenter
        centered = model.phase1_z - model.chart.mu_z
        assert abs(float(centered.mean())) < 1e-10


class TestSerialization:
    def test_round_trip(self, fitted):
        model, _, _ = fitted
        clone = FittedModel.from_dict(model.to_dict())
        assert clone.delta == model.delta
        np.testing.assert_array_equal(clone.m_opt, model.m_opt)
        np.testing.assert_array_equal(clone.s_opt, model.s_opt)
        np.testing.assert_array_equal(clone.target.V, model.target.V)
        assert clone.ar == model.ar
        assert clone.chart == model.chart
        assert clone.lbf_offset == model.lbf_offset
        assert clone.warmup == model.warmup
        np.testing.assert_array_equal(clone.phase1_z, model.phase1_z)
        np.testing.assert_array_equal(clone.fit.msse, model.fit.msse)
        assert len(clone.grid) == len(model.grid)

    def test_round_trip_survives_json(self, fitted):
        import json

        model, _, _ = fitted
        doc = json.loads(json.dumps(model.to_dict()))
        clone = FittedModel.from_dict(doc)
        np.testing.assert_array_equal(clone.s_opt, model.s_opt)

    def test_wrong_kind_rejected(self):
        with pytest.raises(SchemaMismatch):
            FittedModel.from_dict({"kind": "something-else", "schema_version": 1})

    def test_wrong_version_rejected(self, fitted):
        model, _, _ = fitted
        doc = model.to_dict()
        doc["schema_version"] = 99
        with pytest.raises(SchemaMismatch):
            FittedModel.from_dict(doc)

    def test_missing_field_rejected(self, fitted):
        model, _, _ = fitted
        doc = model.to_dict()
        del doc["ar"]
        with pytest.raises(SchemaMismatch):
            FittedModel.from_dict(doc)

    def test_malformed_matrix_rejected(self, fitted):
        model, _, _ = fitted
        doc = model.to_dict()
        doc["s_opt"]["data"] = [1.0, 2.0, 3.0]
        with pytest.raises(SchemaMismatch):
            FittedModel.from_dict(doc)


class TestPhase2:
    def test_empty_data(self, fitted):
        model, _, _ = fitted
        result = phase2(model, np.empty((0, 2)))
        assert result.points == ()
        assert result.signals == ()
        assert result.warnings == ()
        assert result.lbf.shape == (0,)

    def test_pure_function_of_model_and_data(self, fitted):
        model, _, config = fitted
        stream = gen_local_level(config, SIGMA, 60, make_rng(57))
        a = phase2(model, stream)
        b = phase2(model, stream)
        np.testing.assert_array_equal(a.lbf, b.lbf)
        assert a.signals == b.signals
        assert a.points == b.points

    def test_frozen_mode_scores_points_independently(self, fitted):
        model, _, config = fitted
        stream = gen_local_level(config, SIGMA, 40, make_rng(58))
        forward = phase2(model, stream).lbf
        reversed_lbf = phase2(model, stream[::-1]).lbf
        np.testing.assert_allclose(reversed_lbf, forward[::-1], atol=1e-12)

    def test_signals_match_flagged_points(self, fitted):
        model, _, _ = fitted
        shifted = gen_local_level(
            DwrConfig(dim=2, delta=model.delta), SIGMA, 80, make_rng(59)
        )
        shifted[:, 0] += 5.0 * np.sqrt(SIGMA[0, 0])
        result = phase2(model, shifted)
        flagged = tuple(p.t for p in result.points if p.out_of_control)
        assert result.signals == flagged
        assert result.signals  # a five-sigma shift must signal

    def test_tracking_mode_differs_from_frozen(self, fitted):
        model, _, config = fitted
        stream = gen_local_level(config, SIGMA, 60, make_rng(60))
        frozen = phase2(model, stream).lbf
        tracking = phase2(model, stream, tracking=True).lbf
        assert not np.allclose(frozen, tracking)

    def test_dim_mismatch(self, fitted):
        model, _, _ = fitted
        with pytest.raises(DimensionMismatch):
            phase2(model, np.zeros((5, 3)))

    def test_persistent_drift_yields_run_warning(self, fitted):
        model, _, config = fitted
        stream = gen_local_level(config, SIGMA, 60, make_rng(61))
        stream[:, 0] += 5.0 * np.sqrt(SIGMA[0, 0])
        result = phase2(model, stream)
        assert any("consecutive EWMA values" in w for w in result.warnings)

    def test_difference_flag_monitors_the_differenced_stream(self):
        config = DwrConfig(dim=2, delta=0.9)
        data = gen_local_level(config, SIGMA, 200, make_rng(62))
        model = phase1(data, deltas=(0.9,), seed=3, calib_reps=300,
                       apply_difference=True)
        assert model.difference
        np.testing.assert_array_equal(model.target.mu, [0.0, 0.0])
        stream = gen_local_level(config, SIGMA, 30, make_rng(63))
        result = phase2(model, stream)
        assert len(result.points) == 29  # one row lost to differencing
