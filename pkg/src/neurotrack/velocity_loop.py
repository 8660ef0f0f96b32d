"""Inner velocity loop: PID feedback plus a neural feedforward term.

Both controllers act on body channels (linear ``v`` and angular ``w``).
Their sum is mixed into motor voltages as ``u_R = u_v + u_w`` and
``u_L = u_v - u_w`` and clamped to the command limit.

The net is trained online by feedback-error learning: after every step
the PID output is used as the output error of the net, so the
feedforward term gradually takes over whatever the PID still has to
supply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kinematics import VelocityPair
from .mlp import MlpNet, mlp_forward, mlp_gradient, sgd_update
from .plant import CommandPair

__all__ = [
    "PidGains",
    "PidState",
    "FeatureScales",
    "LoopConfig",
    "LoopState",
    "pid_step",
    "build_features",
    "mix",
    "compose_command",
    "feedback_error_learning_step",
    "velocity_loop_step",
]

N_FEATURES = 6


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise ValueError(f"PID gain {name} must be >= 0, got {val}")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0  # integral of error, error-units * s
    prev_error: float = 0.0


def pid_step(
    state: PidState, g: PidGains, error: float, dt: float, windup_limit: float | None = None
) -> tuple[float, PidState]:
    """One PID update with trapezoidal integration.

    ``windup_limit`` bounds the integral contribution ``ki * integral``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    integral = state.integral + 0.5 * (error + state.prev_error) * dt
    if windup_limit is not None and g.ki > 0:
        cap = windup_limit / g.ki
        integral = min(cap, max(-cap, integral))
    u = g.kp * error + g.ki * integral + g.kd * (error - state.prev_error) / dt
    return u, PidState(integral, error)


@dataclass(frozen=True)
class FeatureScales:
    v: float = 0.5  # m/s
    w: float = 0.5  # rad/s
    dv: float = 1.0  # m/s^2
    dw: float = 1.0  # rad/s^2

    def __post_init__(self):
        for name in ("v", "w", "dv", "dw"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"feature scale {name} must be > 0, got {val}")


def build_features(
    eta_c: VelocityPair,
    eta_c_rate: tuple[float, float],
    eta_meas: VelocityPair,
    scales: FeatureScales,
) -> np.ndarray:
    """Normalized regressor ``(v_c, w_c, dv_c, dw_c, v, w)`` for the net."""
    return np.array(
        [
            eta_c.v / scales.v,
            eta_c.w / scales.w,
            eta_c_rate[0] / scales.dv,
            eta_c_rate[1] / scales.dw,
            eta_meas.v / scales.v,
            eta_meas.w / scales.w,
        ]
    )


def mix(u_v: float, u_w: float) -> tuple[float, float]:
    return (u_v + u_w, u_v - u_w)


def compose_command(u_fb: tuple[float, float], u_ff: tuple[float, float], limit: float) -> CommandPair:
    if not limit > 0:
        raise ValueError("command limit must be > 0")
    ur, ul = mix(u_fb[0] + u_ff[0], u_fb[1] + u_ff[1])
    return CommandPair(min(limit, max(-limit, ur)), min(limit, max(-limit, ul)))


def feedback_error_learning_step(
    net: MlpNet,
    features,
    u_fb: tuple[float, float],
    lr: float,
    saturated: bool = False,
) -> MlpNet:
    """Nudge the net output toward ``u_ff + u_fb``; no-op while saturated."""
    if saturated or lr == 0.0 or (u_fb[0] == 0.0 and u_fb[1] == 0.0):
        return net
    grads = mlp_gradient(net, features, np.array(u_fb, dtype=float))
    return sgd_update(net, grads, lr)


@dataclass(frozen=True)
class LoopConfig:
    pid_v: PidGains = field(default_factory=lambda: PidGains(20.0, 100.0, 0.0))
    pid_w: PidGains = field(default_factory=lambda: PidGains(4.0, 20.0, 0.0))
    anti_windup: float = 12.0
    scales: FeatureScales = field(default_factory=FeatureScales)
    learning_rate: float = 1e-3
    learning: bool = True
    command_limit: float = 12.0

    def __post_init__(self):
        if not self.command_limit > 0:
            raise ValueError("command_limit must be > 0")
        if not self.anti_windup > 0:
            raise ValueError("anti_windup must be > 0")
        if not (math.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ValueError("learning_rate must be >= 0")
        if all(g == 0 for g in (*_gains(self.pid_v), *_gains(self.pid_w))):
            raise ValueError("PID gains are all zero")


def _gains(g: PidGains):
    return (g.kp, g.ki, g.kd)


@dataclass(frozen=True)
class LoopState:
    net: MlpNet
    pid_v: PidState = PidState()
    pid_w: PidState = PidState()
    prev_eta_c: VelocityPair | None = None
    u_fb: tuple[float, float] = (0.0, 0.0)
    u_ff: tuple[float, float] = (0.0, 0.0)
    learning_steps: int = 0
    saturated_steps: int = 0


def velocity_loop_step(
    cfg: LoopConfig,
    state: LoopState,
    eta_c: VelocityPair,
    eta_meas: VelocityPair,
    dt: float,
) -> tuple[CommandPair, LoopState]:
    ufb_v, pid_v = pid_step(state.pid_v, cfg.pid_v, eta_c.v - eta_meas.v, dt, cfg.anti_windup)
    ufb_w, pid_w = pid_step(state.pid_w, cfg.pid_w, eta_c.w - eta_meas.w, dt, cfg.anti_windup)
    u_fb = (ufb_v, ufb_w)

    prev = state.prev_eta_c
    rate = (0.0, 0.0) if prev is None else ((eta_c.v - prev.v) / dt, (eta_c.w - prev.w) / dt)
    x = build_features(eta_c, rate, eta_meas, cfg.scales)
    out = mlp_forward(state.net, x)
    u_ff = (float(out[0]), float(out[1]))

    ur, ul = mix(u_fb[0] + u_ff[0], u_fb[1] + u_ff[1])
    saturated = abs(ur) > cfg.command_limit or abs(ul) > cfg.command_limit
    command = compose_command(u_fb, u_ff, cfg.command_limit)

    net = state.net
    learned = 0
    if cfg.learning and not saturated:
        net = feedback_error_learning_step(net, x, u_fb, cfg.learning_rate)
        learned = 1
    new_state = replace(
        state,
        net=net,
        pid_v=pid_v,
        pid_w=pid_w,
        prev_eta_c=eta_c,
        u_fb=u_fb,
        u_ff=u_ff,
        learning_steps=state.learning_steps + learned,
        saturated_steps=state.saturated_steps + int(saturated),
    )
    return command, new_state
