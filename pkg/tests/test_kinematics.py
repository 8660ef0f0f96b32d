import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from neurotrack.kinematics import (
    Pose,
    ReferenceProfile,
    Segment,
    VelocityPair,
    integrate_closed_loop,
    integrate_pose,
    pose_error,
    reference_state,
    sample_reference,
    unicycle_derivative,
    wrap_angle,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
angles = st.floats(-50.0, 50.0, allow_nan=False)


class TestWrapAngle:
    def test_examples(self):
        assert wrap_angle(0.0) == 0.0
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-3 * math.pi / 2) == pytest.approx(math.pi / 2)

    def test_minus_pi_maps_to_pi(self):
        assert wrap_angle(-math.pi) == math.pi

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
    def test_non_finite(self, bad):
        with pytest.raises(ValueError):
            wrap_angle(bad)

    @given(angles)
    def test_range_and_congruence(self, a):
        r = wrap_angle(a)
        assert -math.pi < r <= math.pi
        k = (a - r) / (2 * math.pi)
        assert k == pytest.approx(round(k), abs=1e-9)


def test_pose_theta_is_wrapped():
    assert Pose(1.0, 2.0, 3 * math.pi).theta == pytest.approx(math.pi)


@pytest.mark.parametrize(
    "q, eta, expected",
    [
        (Pose(0, 0, 0), VelocityPair(1, 0), (1, 0, 0)),
        (Pose(0, 0, math.pi / 2), VelocityPair(1, 0), (0, 1, 0)),
        (Pose(5, -2, 0.3), VelocityPair(0, 2), (0, 0, 2)),
    ],
)
def test_unicycle_derivative(q, eta, expected):
    assert unicycle_derivative(q, eta) == pytest.approx(expected, abs=1e-15)


class TestPoseError:
    def test_identity(self):
        q = Pose(1, 2, 0.5)
        assert pose_error(q, q).as_tuple() == (0.0, 0.0, 0.0)

    def test_zero_heading_is_plain_difference(self):
        e = pose_error(Pose(1, 2, 0.3), Pose(0, 0, 0))
        assert e.as_tuple() == pytest.approx((1, 2, 0.3))

    def test_quarter_turn(self):
        e = pose_error(Pose(1, 0, math.pi / 2), Pose(0, 0, math.pi / 2))
        assert e.as_tuple() == pytest.approx((0, -1, 0), abs=1e-15)

    @given(finite, finite, angles, finite, finite, angles)
    def test_planar_norm_preserved(self, xr, yr, tr, x, y, t):
        e = pose_error(Pose(xr, yr, tr), Pose(x, y, t))
        assert math.hypot(e.ex, e.ey) == pytest.approx(math.hypot(xr - x, yr - y), rel=1e-12, abs=1e-9)

    @given(finite, finite, angles)
    def test_self_error_zero(self, x, y, t):
        q = Pose(x, y, t)
        assert pose_error(q, q).as_tuple() == (0.0, 0.0, 0.0)


class TestReferenceState:
    def test_straight_line(self):
        prof = ReferenceProfile(Pose(0, 0, 0), [(10.0, 0.5, 0.0)])
        pose, eta = reference_state(prof, 2.0)
        assert pose.as_tuple() == pytest.approx((1, 0, 0))
        assert (eta.v, eta.w) == (0.5, 0.0)

    def test_arc_closed_form(self):
        # x = (v/w) sin(wt), y = (v/w)(1 - cos(wt)) with v/w = 1, wt = pi/2
        prof = ReferenceProfile(Pose(0, 0, 0), [(10.0, 0.5, 0.5)])
        pose, eta = reference_state(prof, math.pi)
        assert pose.as_tuple() == pytest.approx((1, 1, math.pi / 2), abs=1e-14)
        assert (eta.v, eta.w) == (0.5, 0.5)

    def test_boundary_t0(self):
        start = Pose(1.0, -2.0, 0.7)
        prof = ReferenceProfile(start, [(3.0, 0.4, -0.2), (2.0, 0.1, 0.3)])
        pose, eta = reference_state(prof, 0.0)
        assert pose == start
        assert (eta.v, eta.w) == (0.4, -0.2)

    def test_out_of_range(self):
        prof = ReferenceProfile.circle(0.25, 0.1, 5.0)
        with pytest.raises(IndexError):
            reference_state(prof, 5.1)
        with pytest.raises(IndexError):
            reference_state(prof, -0.1)

    def test_continuity_across_segments(self):
        prof = ReferenceProfile(Pose(0.3, 0.1, 2.0), [(1.7, 0.4, 0.9), (2.3, 0.2, -1.4), (1.0, 0.3, 0.0)])
        for boundary in (1.7, 4.0):
            before, _ = reference_state(prof, boundary - 1e-13)
            after, _ = reference_state(prof, boundary)
            assert abs(before.x - after.x) < 1e-12
            assert abs(before.y - after.y) < 1e-12
            assert abs(wrap_angle(before.theta - after.theta)) < 1e-12

    def test_rejects_nonpositive_speed_or_duration(self):
        with pytest.raises(ValueError):
            ReferenceProfile(Pose(0, 0, 0), [(1.0, 0.0, 0.1)])
        with pytest.raises(ValueError):
            ReferenceProfile(Pose(0, 0, 0), [(0.0, 0.3, 0.1)])
        with pytest.raises(ValueError):
            ReferenceProfile(Pose(0, 0, 0), [])

    def test_tiny_turn_rate_matches_straight_line(self):
        a, _ = reference_state(ReferenceProfile(Pose(0, 0, 0.4), [Segment(5.0, 0.3, 1e-12)]), 5.0)
        b, _ = reference_state(ReferenceProfile(Pose(0, 0, 0.4), [Segment(5.0, 0.3, 0.0)]), 5.0)
        assert a.x == pytest.approx(b.x, abs=1e-10)
        assert a.y == pytest.approx(b.y, abs=1e-10)

    def test_repeated(self):
        prof = ReferenceProfile(Pose(0, 0, 0), [(2.0, 0.3, 0.2)]).repeated(3)
        assert prof.duration == pytest.approx(6.0)
        assert len(prof.segments) == 3


def _arc_error(dt, horizon=10.0, v=0.5, w=0.5):
    q = Pose(0.0, 0.0, 0.0)
    for _ in range(int(round(horizon / dt))):
        q = integrate_pose(q, VelocityPair(v, w), dt)
    exact, _ = reference_state(ReferenceProfile.circle(v, w, horizon), horizon)
    return math.hypot(q.x - exact.x, q.y - exact.y)


class TestIntegratePose:
    def test_straight_line_exact(self):
        q = integrate_pose(Pose(0, 0, 0), VelocityPair(1, 0), 0.1)
        assert q.as_tuple() == pytest.approx((0.1, 0, 0), abs=1e-16)

    @given(finite, finite, angles, st.floats(1e-4, 1.0))
    def test_rest(self, x, y, t, dt):
        q = Pose(x, y, t)
        assert integrate_pose(q, VelocityPair(0, 0), dt) == q

    def test_arc_accuracy_at_1ms(self):
        assert _arc_error(1e-3) < 1e-9

    def test_fourth_order(self):
        coarse, fine = _arc_error(0.2), _arc_error(0.1)
        assert 12.0 <= coarse / fine <= 20.0

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            integrate_pose(Pose(0, 0, 0), VelocityPair(1, 0), 0.0)


class TestClosedLoop:
    def test_constant_law_matches_integrate_pose(self):
        q = Pose(0.2, -0.1, 0.7)
        eta = VelocityPair(0.4, -0.3)
        a = integrate_closed_loop(q, lambda t, p: eta, 0.0, 0.05)
        b = integrate_pose(q, eta, 0.05)
        assert a.as_tuple() == pytest.approx(b.as_tuple(), abs=1e-15)

    @staticmethod
    def _heading_decay_error(dt, horizon=2.0):
        # w = -theta gives theta(t) = theta0 * exp(-t)
        q = Pose(0.0, 0.0, 1.0)
        for k in range(int(round(horizon / dt))):
            q = integrate_closed_loop(q, lambda t, p: VelocityPair(1.0, -p.theta), k * dt, dt)
        return abs(q.theta - math.exp(-horizon))

    def test_fourth_order(self):
        assert 12.0 <= self._heading_decay_error(0.2) / self._heading_decay_error(0.1) <= 20.0

    def test_time_argument_is_stage_time(self):
        seen = []

        def law(t, p):
            seen.append(t)
            return VelocityPair(0.0, 0.0)

        integrate_closed_loop(Pose(0, 0, 0), law, 1.0, 0.1)
        assert seen == pytest.approx([1.0, 1.05, 1.05, 1.1])


def test_sample_reference_matches_scalar():
    prof = ReferenceProfile(Pose(0.3, 0.1, 2.0), [(1.7, 0.4, 0.9), (2.3, 0.2, -1.4), (1.0, 0.3, 0.0)])
    times = [0.0, 0.5, 1.7, 2.2, 3.999, 4.0, 5.0]
    rows = sample_reference(prof, times)
    for t, row in zip(times, rows):
        pose, eta = reference_state(prof, t)
        assert row[:2] == pytest.approx((pose.x, pose.y), abs=1e-12)
        assert abs(wrap_angle(row[2] - pose.theta)) < 1e-12
        assert -math.pi < row[2] <= math.pi
        assert (row[3], row[4]) == (eta.v, eta.w)
    with pytest.raises(IndexError):
        sample_reference(prof, [5.1])
