"""Tests for the reweighted-ratio diffusion statistics.

Oracles, all independent of the simulation code:
- stationary law Beta(p, q) with p = 2 nu + 2 - 4a, q = 2a; at
  (a=1/3, nu=1) this is Beta(8/3, 2/3) with mean p/(p+q) = 0.8,
- ergodic clock rate beta = a/(nu - nu_c); 0.4 at (a=1/3, nu=1),
- drift at A = 1 is exactly -a (the diffusion coefficient vanishes
  there, so one Euler step from 1 is deterministic),
- moment identity at s = 0: value is x^{-nu} exactly,
- log-slope of the moment in s is -a nu once the transient from the
  A = 1 start has decayed (windows s >= 4 suffice in practice),
- exp(0) = 1 and Jensen give floor 1 for exponential moments; for
  p = 0.05 the large-t ceiling 2 e^{(p sigma)^2/2} Phi(p sigma) with
  sigma near 1.06 is about 1.044, so 1.2 is a safe common bound.
"""

import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleflow.algebra import DomainError, lambda_critical
from sleflow.weighted import (
    ConcentrationReport,
    WeightedPath,
    concentration_fraction,
    exp_moment,
    occupation_test,
    report_record,
    simulate_A_star,
    weighted_moment,
    write_path_csv,
    write_reports_json,
)
from sleflow import weighted as weighted_mod

A_THIRD = 1.0 / 3.0


@pytest.fixture(scope="module")
def long_path():
    return simulate_A_star(A_THIRD, 1.0, 1e4, seed=11)


@pytest.fixture(scope="module")
def nu0_path():
    return simulate_A_star(A_THIRD, A_THIRD, 1e4, seed=12)


def fit_log_slope(lam, s_values, n_paths, seed):
    vals = []
    ses = []
    for s in s_values:
        v, se = weighted_moment(A_THIRD, lam, 1.0, float(s), n_paths, seed=seed)
        vals.append(v)
        ses.append(se)
    vals = np.array(vals)
    w = (vals / np.array(ses)) ** 2
    design = np.vstack([s_values, np.ones_like(s_values)]).T
    weighted_design = design * w[:, None]
    coef = np.linalg.solve(design.T @ weighted_design, weighted_design.T @ np.log(vals))
    return float(coef[0])


class TestSimulate:
    def test_first_step_from_one_is_deterministic(self):
        step = 1e-3
        path = simulate_A_star(
            A_THIRD, 1.0, 2 * step, step=step, seed=3, obs_spacing=step
        )
        assert path.sGrid[0] == 0.0
        assert path.A[0] == 1.0
        assert path.L[0] == 0.0
        # noise coefficient sqrt(A(1-A)) vanishes at A=1, drift is -a
        assert path.A[1] == pytest.approx(1.0 - A_THIRD * step, abs=1e-15)

    def test_grid_covers_horizon_with_clamped_endpoint(self):
        path = simulate_A_star(A_THIRD, 0.7, 2.3, seed=4)
        assert path.sGrid[0] == 0.0
        assert path.sGrid[-1] == 2.3
        assert np.all(np.diff(path.sGrid) > 0)
        assert len(path) == path.A.shape[0] == path.L.shape[0]

    def test_long_run_mean_matches_stationary_beta_law(self, long_path):
        post = long_path.A[long_path.sGrid >= 100.0]
        assert abs(post.mean() - 0.8) < 0.02

    def test_long_run_clock_rate_near_beta(self, long_path):
        assert abs(long_path.L[-1] / long_path.sGrid[-1] - 0.4) < 0.03

    def test_ergodic_rate_median_over_30_seeds(self):
        seeds = weighted_mod._child_seeds(77, 30)
        _, u_out, _ = weighted_mod._run_batch(
            A_THIRD, 1.0, 1e-3, np.array([1e4]), seeds
        )
        deviation = np.abs(u_out[:, 0] / 1e4 - 0.4)
        assert float(np.median(deviation)) < 0.01

    def test_floor_flag_reported(self, long_path, nu0_path):
        # at nu=1 the process stays away from 0; at nu=nu_0 the floor binds
        assert long_path.floor_binds == 0
        assert nu0_path.floor_binds > 0

    def test_deterministic_given_seed(self):
        p1 = simulate_A_star(A_THIRD, 1.0, 10.0, seed=8)
        p2 = simulate_A_star(A_THIRD, 1.0, 10.0, seed=8)
        p3 = simulate_A_star(A_THIRD, 1.0, 10.0, seed=9)
        assert np.array_equal(p1.A, p2.A)
        assert np.array_equal(p1.L, p2.L)
        assert not np.array_equal(p1.A, p3.A)

    @settings(max_examples=10, deadline=None)
    @given(
        nu=st.floats(min_value=0.25, max_value=1.5),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    def test_path_invariants(self, nu, seed):
        path = simulate_A_star(A_THIRD, nu, 5.0, seed=seed)
        assert np.all(path.A >= 0.0)
        assert np.all(path.A <= 1.0)
        assert path.L[0] == 0.0
        assert np.all(np.diff(path.L) >= 0.0)

    def test_validation(self):
        with pytest.raises(DomainError):
            simulate_A_star(A_THIRD, 0.1, 10.0)  # nu below nu_c
        with pytest.raises(ValueError):
            simulate_A_star(A_THIRD, 1.0, 0.0)
        with pytest.raises(ValueError):
            simulate_A_star(A_THIRD, 1.0, 10.0, step=0.0)
        with pytest.raises(ValueError):
            simulate_A_star(A_THIRD, 1.0, 1e-4, step=1e-3)
        with pytest.raises(ValueError):
            simulate_A_star(A_THIRD, 1.0, 10.0, step=1e-2, obs_spacing=1e-3)


class TestOccupation:
    def test_distance_small_at_nu_one(self, long_path):
        assert occupation_test(long_path, 100.0) < 0.02

    def test_distance_small_at_nu_zero_point(self, nu0_path):
        # second parameter point: Beta(4/3, 2/3)
        assert occupation_test(nu0_path, 100.0) < 0.02

    def test_distance_is_a_proportion(self, long_path):
        d = occupation_test(long_path, 5000.0)
        assert 0.0 <= d <= 1.0

    def test_insufficient_window_raises(self):
        path = simulate_A_star(A_THIRD, 1.0, 150.0, seed=2)
        with pytest.raises(ValueError, match="insufficient samples"):
            occupation_test(path, 100.0)
        with pytest.raises(ValueError):
            occupation_test(path, -1.0)


class TestWeightedMoment:
    def test_s_zero_is_exact(self):
        value, se = weighted_moment(A_THIRD, 1.0, 2.0, 0.0, 10, seed=1)
        assert value == pytest.approx(0.5, rel=1e-15)
        assert se == 0.0

    def test_log_slope_matches_minus_a_nu(self):
        s_values = np.arange(4.0, 17.0, 3.0)
        slope = fit_log_slope(1.0, s_values, 2000, seed=5)
        assert abs(slope - (-A_THIRD)) < 0.03 * A_THIRD

    def test_lambda_zero_recovers_hitting_exponent(self):
        # nu(0) = nu_0 = 4a - 1 = 1/3, slope -a nu_0 = -1/9
        s_values = np.arange(6.0, 21.0, 3.5)
        slope = fit_log_slope(0.0, s_values, 1500, seed=5)
        target = -A_THIRD * A_THIRD
        assert abs(slope - target) < 0.05 * abs(target)

    def test_x_enters_only_through_prefactor(self):
        v2, _ = weighted_moment(A_THIRD, 1.0, 2.0, 3.0, 400, seed=9)
        v1, _ = weighted_moment(A_THIRD, 1.0, 1.0, 3.0, 400, seed=9)
        assert v2 / v1 == pytest.approx(0.5, rel=1e-12)

    def test_error_bar_is_sane(self):
        value, se = weighted_moment(A_THIRD, 1.0, 1.0, 4.0, 1000, seed=13)
        assert 0.0 < se < value

    def test_deterministic_given_seed(self):
        r1 = weighted_moment(A_THIRD, 0.5, 1.0, 2.0, 300, seed=6)
        r2 = weighted_moment(A_THIRD, 0.5, 1.0, 2.0, 300, seed=6)
        assert r1 == r2

    def test_validation(self):
        with pytest.raises(DomainError):
            weighted_moment(A_THIRD, lambda_critical(A_THIRD), 1.0, 1.0, 10)
        with pytest.raises(ValueError):
            weighted_moment(A_THIRD, 1.0, 0.5, 1.0, 10)
        with pytest.raises(ValueError):
            weighted_moment(A_THIRD, 1.0, 1.0, -1.0, 10)
        with pytest.raises(ValueError):
            weighted_moment(A_THIRD, 1.0, 1.0, 1.0, 1)


class TestExpMoment:
    def test_tiny_p_gives_one(self):
        value, _ = exp_moment(A_THIRD, 1.0, 1e-12, 4.0, 200, seed=2)
        assert value == pytest.approx(1.0, abs=1e-9)

    def test_jensen_floor(self):
        for t in (1.0, 16.0):
            value, _ = exp_moment(A_THIRD, 1.0, 0.05, t, 400, seed=3)
            assert value >= 1.0

    def test_bounded_with_decelerating_growth(self):
        # bounded approach to the CLT ceiling: increments over a geometric
        # t-grid must shrink, and everything stays below a common constant
        values = []
        for t in (1.0, 4.0, 16.0, 64.0):
            v, _ = exp_moment(A_THIRD, 1.0, 0.05, t, 1500, seed=21)
            values.append(v)
        values = np.array(values)
        assert np.all(values < 1.2)
        increments = np.diff(values)
        assert np.all(increments[1:] < increments[:-1])

    def test_validation(self):
        with pytest.raises(ValueError):
            exp_moment(A_THIRD, 1.0, 0.0, 4.0, 100)
        with pytest.raises(ValueError):
            exp_moment(A_THIRD, 1.0, 0.05, 0.5, 100)
        with pytest.raises(ValueError):
            exp_moment(A_THIRD, 1.0, 0.05, 4.0, 1)


class TestConcentration:
    def test_huge_envelope_captures_everything(self):
        report = concentration_fraction(A_THIRD, 1.0, 50.0, 1.0, 25.0, 150, seed=31)
        assert report.fraction == 1.0

    def test_zero_envelope_captures_nothing(self):
        report = concentration_fraction(A_THIRD, 1.0, 0.0, 0.0, 50.0, 150, seed=31)
        assert report.fraction <= 0.01

    def test_monotone_in_u_and_c(self):
        fractions = [
            concentration_fraction(A_THIRD, 1.0, u, 1.0, 50.0, 200, seed=31).fraction
            for u in (0.5, 1.0, 2.0, 4.0)
        ]
        assert fractions == sorted(fractions)
        low_c = concentration_fraction(A_THIRD, 1.0, 1.0, 0.25, 50.0, 200, seed=31)
        high_c = concentration_fraction(A_THIRD, 1.0, 1.0, 2.0, 50.0, 200, seed=31)
        assert low_c.fraction <= high_c.fraction

    def test_calibrated_envelope_holds_uniformly(self):
        # u=2, c=1 keeps at least 95% of paths at every probed horizon
        for t in (25.0, 50.0, 100.0):
            report = concentration_fraction(A_THIRD, 1.0, 2.0, 1.0, t, 400, seed=31)
            assert report.fraction >= 0.95

    def test_report_fields(self):
        report = concentration_fraction(A_THIRD, 1.0, 2.0, 1.0, 25.0, 64, seed=7)
        assert isinstance(report, ConcentrationReport)
        assert report.nSamples == 64
        assert report.t == 25.0
        assert 0.0 <= report.fraction <= 1.0
        expected_se = np.sqrt(report.fraction * (1 - report.fraction) / 64)
        assert report.se == pytest.approx(expected_se, abs=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            concentration_fraction(A_THIRD, 1.0, -1.0, 1.0, 10.0, 10)
        with pytest.raises(ValueError):
            concentration_fraction(A_THIRD, 1.0, 1.0, -1.0, 10.0, 10)
        with pytest.raises(ValueError):
            concentration_fraction(A_THIRD, 1.0, 1.0, 1.0, 0.0, 10)
        with pytest.raises(ValueError):
            concentration_fraction(A_THIRD, 1.0, 1.0, 1.0, 10.0, 0)


class TestInputOutput:
    def test_path_csv_roundtrip(self, tmp_path):
        path = simulate_A_star(A_THIRD, 1.0, 3.0, seed=5)
        target = tmp_path / "path.csv"
        write_path_csv(path, target)
        lines = target.read_text().strip().splitlines()
        assert lines[0] == "s,A,L"
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        assert np.array_equal(rows[:, 0], path.sGrid)
        assert np.array_equal(rows[:, 1], path.A)
        assert np.array_equal(rows[:, 2], path.L)

    def test_csv_accepts_open_file(self):
        path = simulate_A_star(A_THIRD, 1.0, 1.0, seed=5)
        buf = io.StringIO()
        write_path_csv(path, buf)
        assert buf.getvalue().startswith("s,A,L")

    def test_report_record_echoes_parameters(self):
        report = concentration_fraction(A_THIRD, 1.0, 2.0, 1.0, 10.0, 32, seed=1)
        record = report_record(A_THIRD, 1.0, report)
        assert set(record) == {
            "a", "nu", "u", "c", "t", "fraction", "nSamples", "se",
        }
        assert record["a"] == A_THIRD
        assert record["nSamples"] == 32

    def test_reports_json_roundtrip(self, tmp_path):
        report = concentration_fraction(A_THIRD, 1.0, 2.0, 1.0, 10.0, 32, seed=1)
        target = tmp_path / "reports.json"
        write_reports_json([report_record(A_THIRD, 1.0, report)], target)
        loaded = json.loads(target.read_text())
        assert len(loaded) == 1
        assert loaded[0]["fraction"] == report.fraction
