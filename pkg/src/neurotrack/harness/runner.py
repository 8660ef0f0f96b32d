"""Closed-loop scenario execution: outer tracking loop around the inner velocity loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..kinematics import Pose, VelocityPair, closed_loop_step, pose_error, sample_reference, wrap_angle
from ..mlp import MlpNet, init_net, zero_net
from ..plant import PlantState, step_plant
from ..tracking import control_for, error_dynamics, lyapunov_gradient, lyapunov_value, scalar_law
from ..velocity_loop import N_FEATURES, LoopState, velocity_loop_step
from .config import KINEMATIC, ScenarioConfig

__all__ = ["COLUMNS", "SimLog", "run_scenario", "initial_net"]

COLUMNS = (
    "t", "x", "y", "theta", "x_r", "y_r", "theta_r",
    "e_x", "e_y", "e_theta", "v_r", "w_r", "v_c", "w_c", "v", "w",
    "e_c_norm", "u_fb1", "u_fb2", "u_ff1", "u_ff2", "u1", "u2",
    "V_lyap", "Vdot_lyap",
)
_IDX = {name: i for i, name in enumerate(COLUMNS)}


@dataclass
class SimLog:
    """Per-step records, one row per sample time, columns as in ``COLUMNS``."""

    data: np.ndarray
    mode: str = KINEMATIC
    learning_steps: int = 0
    saturated_steps: int = 0
    final_net: MlpNet | None = field(default=None, repr=False)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, _IDX[name]]

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def ep_norm(self) -> np.ndarray:
        return np.sqrt(self["e_x"] ** 2 + self["e_y"] ** 2 + self["e_theta"] ** 2)

    @property
    def ec_v(self) -> np.ndarray:
        return self["v_c"] - self["v"]

    @property
    def ec_w(self) -> np.ndarray:
        return self["w_c"] - self["w"]


def initial_net(cfg: ScenarioConfig) -> MlpNet:
    sizes = (N_FEATURES, *cfg.net.hidden, 2)
    if cfg.net.init == "zero":
        return zero_net(sizes)
    return init_net(sizes, seed=cfg.seed, scale=cfg.net.init_scale)


def run_scenario(cfg: ScenarioConfig, net: MlpNet | None = None) -> SimLog:
    """Simulate ``cfg`` and return the full time series.

    Each step samples the reference, computes the posture error and the
    tracking command, then either closes the loop directly on the unicycle
    (kinematic-ideal, with the control law re-evaluated at every RK4 stage)
    or passes the command through the velocity loop and the DC-motor plant
    (full-dynamics, motor voltages held over the step).
    ``net`` overrides the configured initial feedforward network.
    """
    dt = cfg.dt
    n = cfg.steps
    ref = cfg.reference
    K = cfg.gains
    variant = cfg.variant
    control = control_for(variant)
    kinematic = cfg.mode == KINEMATIC
    t_end = ref.duration
    h = 0.5 * dt

    # reference at every half step; row 2k is t = k*dt
    R = sample_reference(ref, np.minimum(np.arange(2 * n + 1) * h, t_end)).tolist()

    rows = np.zeros((n + 1, len(COLUMNS)))
    q = cfg.initial_pose
    if kinematic:
        law = scalar_law(variant, K)

        def rate(s, x, y, th):
            xr, yr, thr, vr, wr = R[round(s / h)]
            dx, dy = xr - x, yr - y
            c, sn = math.cos(th), math.sin(th)
            return law(c * dx + sn * dy, -sn * dx + c * dy, wrap_angle(thr - th), vr, wr)

    else:
        params = cfg.plant_params()
        plant = PlantState.at_rest(q, params)
        loop_cfg = cfg.loop
        loop = LoopState(net=initial_net(cfg) if net is None else net)
        disturbance = cfg.disturbance

    for k in range(n + 1):
        t = k * dt
        xr, yr, thr, vr, wr = R[2 * k]
        q_r = Pose(xr, yr, thr)
        eta_r = VelocityPair(vr, wr)
        e = pose_error(q_r, q)
        eta_c = control(e, eta_r, K)
        V = lyapunov_value(e, K, variant)
        g = lyapunov_gradient(e, K, variant)
        de = error_dynamics(e, eta_r, eta_c)
        Vdot = g[0] * de[0] + g[1] * de[1] + g[2] * de[2]

        if kinematic:
            v, w = eta_c.v, eta_c.w
            u_fb = u_ff = (0.0, 0.0)
            u1 = u2 = 0.0
        else:
            v, w = plant.v, plant.w
            cmd, loop = velocity_loop_step(loop_cfg, loop, eta_c, VelocityPair(v, w), dt)
            u_fb, u_ff = loop.u_fb, loop.u_ff
            u1, u2 = cmd.u1, cmd.u2

        ecv = eta_c.v - v
        ecw = eta_c.w - w
        rows[k] = (
            t, q.x, q.y, q.theta, q_r.x, q_r.y, q_r.theta,
            e.ex, e.ey, e.etheta, eta_r.v, eta_r.w, eta_c.v, eta_c.w, v, w,
            (ecv * ecv + ecw * ecw) ** 0.5, u_fb[0], u_fb[1], u_ff[0], u_ff[1], u1, u2,
            V, Vdot,
        )

        if k == n:
            break
        if kinematic:
            q = Pose(*closed_loop_step(q.x, q.y, q.theta, rate, t, dt, (v, w)))
        else:
            plant = step_plant(plant, cmd, disturbance, params, dt, t)
            q = plant.pose

    if kinematic:
        return SimLog(rows, cfg.mode)
    return SimLog(rows, cfg.mode, loop.learning_steps, loop.saturated_steps, loop.net)


def pose_from_row(log: SimLog, k: int) -> Pose:
    return Pose(log["x"][k], log["y"][k], log["theta"][k])
