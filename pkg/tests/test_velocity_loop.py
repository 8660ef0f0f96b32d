import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neurotrack.harness.config import parse_config
from neurotrack.harness.runner import run_scenario
from neurotrack.kinematics import VelocityPair
from neurotrack.mlp import init_net, mlp_forward, zero_net
from neurotrack.velocity_loop import (
    FeatureScales,
    LoopConfig,
    LoopState,
    PidGains,
    PidState,
    build_features,
    compose_command,
    feedback_error_learning_step,
    mix,
    pid_step,
    velocity_loop_step,
)

SIZES = (6, 12, 2)
DT = 1e-3


class TestPid:
    def test_zero_gains(self):
        u, _ = pid_step(PidState(), PidGains(0, 0, 0), 3.7, DT)
        assert u == 0.0

    def test_proportional(self):
        u, _ = pid_step(PidState(), PidGains(2, 0, 0), 0.3, DT)
        assert u == pytest.approx(0.6)

    def test_trapezoid_from_rest(self):
        # e0 = 0, then e = 1 twice: areas 0.05 and 0.05 + 0.1
        g = PidGains(0, 1, 0)
        u1, s = pid_step(PidState(), g, 1.0, 0.1)
        u2, s = pid_step(s, g, 1.0, 0.1)
        assert (u1, u2) == pytest.approx((0.05, 0.15))

    def test_derivative(self):
        u, _ = pid_step(PidState(prev_error=0.2), PidGains(0, 0, 0.5), 0.3, 0.1)
        assert u == pytest.approx(0.5)

    def test_anti_windup(self):
        g = PidGains(0, 10, 0)
        s = PidState()
        for _ in range(1000):
            u, s = pid_step(s, g, 5.0, 0.01, windup_limit=12.0)
        assert u == pytest.approx(12.0)
        assert g.ki * s.integral == pytest.approx(12.0)
        # unwinds as soon as the error reverses (first trapezoid averages to 0)
        for _ in range(2):
            u, s = pid_step(s, g, -5.0, 0.01, windup_limit=12.0)
        assert u == pytest.approx(12.0 - 0.5)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            pid_step(PidState(), PidGains(1, 0, 0), 1.0, 0.0)

    def test_negative_gain(self):
        with pytest.raises(ValueError):
            PidGains(-1, 0, 0)


class TestFeatures:
    def test_zeros(self):
        x = build_features(VelocityPair(0, 0), (0, 0), VelocityPair(0, 0), FeatureScales())
        assert x.tolist() == [0.0] * 6

    def test_normalization(self):
        sc = FeatureScales(v=0.7, w=0.3, dv=2.0, dw=4.0)
        x = build_features(VelocityPair(0.7, 0), (0, 0), VelocityPair(0, 0), sc)
        assert x[0] == 1.0

    def test_regression_vector(self):
        x = build_features(VelocityPair(0.25, 0.1), (0.5, -0.2), VelocityPair(0.2, 0.15), FeatureScales())
        assert x.tolist() == pytest.approx([0.5, 0.2, 0.5, -0.2, 0.4, 0.3], rel=1e-15)

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            FeatureScales(v=0.0)


class TestCompose:
    @pytest.mark.parametrize(
        "u_fb, u_ff, expected",
        [((1, 0), (2, 0), (3, 3)), ((10, 0), (5, 0), (12, 12)), ((0, 2), (0, 0), (2, -2))],
    )
    def test_examples(self, u_fb, u_ff, expected):
        c = compose_command(u_fb, u_ff, 12.0)
        assert (c.u1, c.u2) == expected

    def test_mix(self):
        assert mix(1.0, 0.25) == (1.25, 0.75)

    @given(*(st.floats(-1e6, 1e6) for _ in range(4)), st.floats(0.1, 100))
    def test_bounded(self, a, b, c, d, limit):
        u = compose_command((a, b), (c, d), limit)
        assert abs(u.u1) <= limit and abs(u.u2) <= limit


class TestFeedbackErrorLearning:
    net = init_net(SIZES, seed=2)
    x = np.array([0.5, 0.2, 0.1, -0.1, 0.4, 0.3])

    def test_no_residual(self):
        assert feedback_error_learning_step(self.net, self.x, (0.0, 0.0), 0.1).equals(self.net)

    def test_zero_rate(self):
        assert feedback_error_learning_step(self.net, self.x, (1.0, -1.0), 0.0).equals(self.net)

    def test_skipped_when_saturated(self):
        assert feedback_error_learning_step(self.net, self.x, (1.0, 0.0), 0.1, saturated=True).equals(self.net)

    @settings(max_examples=50)
    @given(st.integers(0, 2**31 - 1), st.floats(1e-6, 1.0), st.floats(1e-4, 1e-1))
    def test_ascent_direction(self, seed, eps, lr):
        net = init_net(SIZES, seed=seed)
        before = mlp_forward(net, self.x)[0]
        after = mlp_forward(feedback_error_learning_step(net, self.x, (eps, 0.0), lr), self.x)[0]
        assert after > before


def _pid_only_cfg(**kw):
    return LoopConfig(learning=False, **kw)


def _drive(cfg, net, steps=300, seed=0):
    """Run the loop open-ended against a synthetic first-order 'plant'."""
    rng = np.random.default_rng(seed)
    state = LoopState(net=net)
    meas = VelocityPair(0.0, 0.0)
    cmds = []
    for k in range(steps):
        eta_c = VelocityPair(0.3 + 0.1 * math.sin(0.01 * k), 0.2 * math.cos(0.013 * k))
        u, state = velocity_loop_step(cfg, state, eta_c, meas, DT)
        cmds.append((u.u1, u.u2))
        v = meas.v + DT * (0.05 * (u.u1 + u.u2) - 2.0 * meas.v) + 1e-4 * rng.normal()
        w = meas.w + DT * (0.2 * (u.u1 - u.u2) - 3.0 * meas.w)
        meas = VelocityPair(v, w)
    return cmds, state


class TestLoopStep:
    def test_at_rest_zero_command(self):
        eta = VelocityPair(0.4, -0.1)
        u, _ = velocity_loop_step(_pid_only_cfg(), LoopState(net=zero_net(SIZES)), eta, eta, DT)
        assert (u.u1, u.u2) == (0.0, 0.0)

    def test_zero_net_no_learning_is_pid_only(self):
        cfg = _pid_only_cfg()
        cmds, _ = _drive(cfg, zero_net(SIZES))
        # reference: the two PIDs alone, mixed and clamped
        rng = np.random.default_rng(0)
        sv, sw = PidState(), PidState()
        meas = VelocityPair(0.0, 0.0)
        for k, got in enumerate(cmds):
            eta_c = VelocityPair(0.3 + 0.1 * math.sin(0.01 * k), 0.2 * math.cos(0.013 * k))
            a, sv = pid_step(sv, cfg.pid_v, eta_c.v - meas.v, DT, cfg.anti_windup)
            b, sw = pid_step(sw, cfg.pid_w, eta_c.w - meas.w, DT, cfg.anti_windup)
            u = compose_command((a, b), (0.0, 0.0), cfg.command_limit)
            assert got == (u.u1, u.u2)
            v = meas.v + DT * (0.05 * (u.u1 + u.u2) - 2.0 * meas.v) + 1e-4 * rng.normal()
            w = meas.w + DT * (0.2 * (u.u1 - u.u2) - 3.0 * meas.w)
            meas = VelocityPair(v, w)

    def test_commands_bounded_and_learning_counted(self):
        cfg = LoopConfig(pid_v=PidGains(400, 100, 0), learning_rate=1e-2, command_limit=5.0)
        cmds, state = _drive(cfg, init_net(SIZES, seed=1), steps=500)
        assert all(abs(a) <= 5.0 and abs(b) <= 5.0 for a, b in cmds)
        assert state.saturated_steps > 0
        assert state.learning_steps + state.saturated_steps == 500

    def test_deterministic(self):
        cfg = LoopConfig()
        assert _drive(cfg, init_net(SIZES, seed=3))[0] == _drive(cfg, init_net(SIZES, seed=3))[0]

    def test_all_zero_gains_rejected(self):
        with pytest.raises(ValueError):
            LoopConfig(pid_v=PidGains(), pid_w=PidGains())


FULL_A = """
sim.mode = full-dynamics
initial.x = 0.3
initial.theta = -5 deg
"""

GOLDEN_U1 = [-8.326032727168188, -7.7519617448791145, -7.252644458065436, -6.826035720955306,
             -6.461574016698058, -6.1502275976197955, -5.884274168390121, -5.657111593738487,
             -5.463095751917569, -5.297401732398713, -5.155905070415248]
GOLDEN_U2 = [-9.239778505457084, -8.585423405788355, -8.041935698525162, -7.576723027957157,
             -7.178536932138729, -6.837745057348907, -6.546099043283061, -6.296535813126575,
             -6.083007254455241, -5.900334304345739, -5.744081981243559]


def test_golden_command_prefix():
    log = run_scenario(parse_config(FULL_A + "sim.duration = 0.01\n"))
    assert log["u1"].tolist() == pytest.approx(GOLDEN_U1, rel=1e-12)
    assert log["u2"].tolist() == pytest.approx(GOLDEN_U2, rel=1e-12)


def test_learning_reduces_feedback_workload():
    cfg = parse_config(
        """
        sim.mode = full-dynamics
        sim.duration = 30
        reference.segments = 5 0.3 0.2; 5 0.15 -0.2
        reference.cycles = 3
        """
    )
    log = run_scenario(cfg)
    t, ufb = log["t"], np.abs(log["u_fb1"])
    first = ufb[t < 10.0].mean()
    last = ufb[t >= 20.0].mean()
    assert last < first
    assert log.learning_steps + log.saturated_steps == len(log)
