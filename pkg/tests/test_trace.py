"""Tests for the backward-flow trace and the collision angle.

Oracles:
- zero driver: gamma(t) = i sqrt(2 a t) exactly (vertical slit), and a
  constant driver of value v translates it to v + i sqrt(2 a t),
- angle formula: theta(k) = pi (1 - r) / (1 + r) with r = sqrt(1-16/k^2);
  k=5 gives exactly pi/4 since r = 3/5, k=100 gives 1.2576e-3 rad,
- geometry: distance from (1,0) to the vertical slit at 0 is 1,
- Koebe sandwich: distance and conformal-radius proxy agree within a
  factor [1/6, 6] (slack over the exact factor-4 bound).
"""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleflow.algebra import DomainError
from sleflow.driving import BrownianDriver, ConstantDriver, SqrtSingularDriver
from sleflow.flow import FlowConfig, conformal_radius, evolve
from sleflow.trace import (
    AngleEstimate,
    TraceCurve,
    backward_trace,
    collision_angle,
    collision_angle_formula,
    distance_to_trace,
    write_trace_csv,
)

A_THIRD = 1.0 / 3.0


def slit_curve(a=A_THIRD, y0=1e-6, tmax=10.0, n=40):
    grid = np.geomspace(1e-3, tmax, n)
    return backward_trace(ConstantDriver(0.0, horizon=tmax), a, grid, y0)


class TestBackwardTrace:
    def test_zero_driver_is_vertical_slit(self):
        curve = slit_curve()
        exact = 1j * np.sqrt(2.0 * A_THIRD * curve.times)
        assert np.max(np.abs(curve.points - exact)) <= 2.0 * curve.y0
        assert not curve.aborted.any()

    @settings(max_examples=10, deadline=None)
    @given(
        a=st.floats(min_value=0.26, max_value=0.49),
        value=st.floats(min_value=-3.0, max_value=3.0),
    )
    def test_constant_driver_translates_the_slit(self, a, value):
        grid = np.array([0.1, 1.0, 4.0])
        curve = backward_trace(ConstantDriver(value, horizon=4.0), a, grid, 1e-6)
        exact = value + 1j * np.sqrt(2.0 * a * grid)
        assert np.max(np.abs(curve.points - exact)) <= 2e-6

    def test_points_stay_in_upper_half_plane(self):
        grid = np.linspace(0.01, 0.999, 60)
        curve = backward_trace(SqrtSingularDriver(k=5.0), 2.0, grid, 1e-6)
        assert np.all(curve.points.imag > 0.0)
        assert np.all(np.isfinite(curve.points))

    def test_height_collapses_at_collision_time(self):
        grid = np.array([0.9, 0.99, 0.999, 0.9999])
        curve = backward_trace(SqrtSingularDriver(k=5.0), 2.0, grid, 1e-6)
        heights = curve.points.imag
        assert np.all(np.diff(heights) < 0.0)
        # local scale decays like (1-t)^{3/8}; two decades give ~5.6x
        assert 3.0 < heights[1] / heights[3] < 9.0
        assert heights[3] < 0.2

    def test_step_refinement_stability(self):
        grid = np.array([0.25, 0.5, 0.9])
        coarse = backward_trace(SqrtSingularDriver(k=5.0), 2.0, grid, 1e-6)
        fine = backward_trace(
            SqrtSingularDriver(k=5.0), 2.0, grid, 1e-6, step_scale=0.01
        )
        assert np.max(np.abs(coarse.points - fine.points)) < 1e-6

    def test_grid_times_integrate_independently(self):
        coarse_grid = np.linspace(0.1, 0.9, 5)
        dense_grid = np.linspace(0.1, 0.9, 9)  # shares every coarse time
        drv = SqrtSingularDriver(k=6.0)
        coarse = backward_trace(drv, 2.0, coarse_grid, 1e-6)
        dense = backward_trace(drv, 2.0, dense_grid, 1e-6)
        assert np.array_equal(coarse.points, dense.points[::2])

    def test_brownian_trace_deterministic(self):
        drv = BrownianDriver(seed=14, horizon=1.0)
        grid = np.linspace(0.05, 1.0, 10)
        c1 = backward_trace(drv, A_THIRD, grid, 1e-4)
        c2 = backward_trace(drv, A_THIRD, grid, 1e-4)
        c3 = backward_trace(BrownianDriver(seed=15, horizon=1.0), A_THIRD, grid, 1e-4)
        assert np.array_equal(c1.points, c2.points)
        assert not np.array_equal(c1.points, c3.points)
        assert np.all(c1.points.imag >= 0.0)

    def test_validation(self):
        drv = ConstantDriver(0.0, horizon=1.0)
        with pytest.raises(DomainError):
            backward_trace(drv, A_THIRD, [0.5], 0.0)  # y0 must be positive
        with pytest.raises(DomainError):
            backward_trace(drv, 0.0, [0.5], 1e-6)
        with pytest.raises(DomainError):
            backward_trace(drv, A_THIRD, [], 1e-6)
        with pytest.raises(DomainError):
            backward_trace(drv, A_THIRD, [0.5, 0.4], 1e-6)
        with pytest.raises(DomainError):
            backward_trace(drv, A_THIRD, [0.5, 2.0], 1e-6)  # beyond horizon


class TestCollisionAngle:
    def test_formula_exact_at_k5(self):
        # r = 3/5, so theta = pi (2/5) / (8/5) = pi/4
        assert collision_angle_formula(5.0) == pytest.approx(math.pi / 4.0, rel=1e-15)

    def test_formula_large_k(self):
        assert collision_angle_formula(100.0) == pytest.approx(1.2576e-3, rel=1e-3)

    def test_formula_rejects_no_collision_regime(self):
        with pytest.raises(DomainError):
            collision_angle_formula(4.0)
        with pytest.raises(DomainError):
            collision_angle(3.5)

    def test_estimate_at_k5_within_two_percent(self):
        est = collision_angle(5.0)
        assert isinstance(est, AngleEstimate)
        assert abs(est.theta_hat - math.pi / 4.0) < 0.02 * (math.pi / 4.0)
        assert est.theta_formula == pytest.approx(math.pi / 4.0, rel=1e-15)
        assert 0.0 < est.theta_hat < math.pi

    @pytest.mark.parametrize("k", [4.5, 6.0, 8.0])
    def test_estimate_within_five_percent(self, k):
        est = collision_angle(k)
        assert abs(est.theta_hat - est.theta_formula) < 0.05 * est.theta_formula
        assert est.residual < 0.01

    def test_normalization_bridge_requires_a_two(self):
        with pytest.raises(DomainError):
            collision_angle(5.0, a=1.9)

    def test_window_validation(self):
        with pytest.raises(DomainError):
            collision_angle(5.0, fitWindow=(0.999, 0.99))
        with pytest.raises(DomainError):
            collision_angle(5.0, fitWindow=(0.0, 0.99))


class TestDistance:
    def test_distance_to_vertical_slit(self):
        curve = slit_curve(tmax=1.0)
        assert distance_to_trace(1.0, curve) == pytest.approx(1.0, abs=2e-3)

    def test_non_increasing_as_curve_extends(self):
        curve = slit_curve(tmax=10.0, n=60)
        dists = []
        for n in (10, 30, 60):
            sub = TraceCurve(
                a=curve.a,
                times=curve.times[:n],
                points=curve.points[:n],
                y0=curve.y0,
                aborted=curve.aborted[:n],
            )
            dists.append(distance_to_trace(-2.0, sub))
        assert dists[0] >= dists[1] >= dists[2]

    def test_single_point_and_aborted_exclusion(self):
        pts = np.array([0.0 + 1.0j, 10.0 + 0.0j])
        curve = TraceCurve(
            a=A_THIRD,
            times=np.array([0.1, 0.2]),
            points=pts,
            y0=1e-6,
            aborted=np.array([False, True]),
        )
        # the aborted second point must not shrink the distance
        assert distance_to_trace(10.0, curve) == pytest.approx(math.sqrt(101.0))
        all_bad = TraceCurve(
            a=A_THIRD,
            times=curve.times,
            points=pts,
            y0=1e-6,
            aborted=np.array([True, True]),
        )
        with pytest.raises(DomainError):
            distance_to_trace(0.0, all_bad)

    def test_koebe_sandwich_on_brownian_run(self):
        driver = BrownianDriver(seed=14, horizon=1.0)
        checkpoints = (0.25, 0.5, 1.0)
        run = evolve(driver, [1.5, 2.5], FlowConfig(a=A_THIRD, frame_times=checkpoints))
        grid = np.linspace(1e-4, 1.0, 400)
        curve = backward_trace(driver, A_THIRD, grid, 1e-4)
        assert not curve.aborted.any()
        checked = 0
        for frame_idx, t_c in enumerate(checkpoints):
            keep = grid <= t_c + 1e-12
            sub = TraceCurve(
                a=curve.a,
                times=curve.times[keep],
                points=curve.points[keep],
                y0=curve.y0,
                aborted=curve.aborted[keep],
            )
            frame = run.frames[frame_idx]
            for point_idx, x in enumerate((1.5, 2.5)):
                if frame.points[point_idx].swallowed:
                    continue
                ratio = distance_to_trace(x, sub) / conformal_radius(frame, point_idx)
                assert 1.0 / 6.0 < ratio < 6.0
                checked += 1
        assert checked >= 4


class TestCsv:
    def test_roundtrip(self, tmp_path):
        curve = slit_curve(tmax=1.0, n=5)
        target = tmp_path / "curve.csv"
        write_trace_csv(curve, target)
        lines = target.read_text().strip().splitlines()
        assert lines[0] == "t,re,im"
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        assert np.array_equal(rows[:, 0], curve.times)
        assert np.array_equal(rows[:, 1] + 1j * rows[:, 2], curve.points)

    def test_accepts_open_file(self):
        curve = slit_curve(tmax=1.0, n=3)
        buf = io.StringIO()
        write_trace_csv(curve, buf)
        assert buf.getvalue().startswith("t,re,im")
