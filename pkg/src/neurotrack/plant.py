"""Differential-drive robot driven by two armature-voltage controlled DC motors.

Motor model (armature inductance neglected), per wheel::

    tau = n * kt * (u - n * ke * omega_wheel) / R + tau_disturbance

Rigid body with viscous friction::

    m_eff * dv/dt = (tau_R + tau_L) / r - f_v * v
    I_eff * dw/dt = b * (tau_R - tau_L) / r - f_w * w

where ``m_eff = m + (J_R + J_L) / r**2`` and ``I_eff = I + (J_R + J_L) b**2 / r**2``
fold the rotor+wheel inertia (referred to the wheel axis) into the body.
Commands are in volts; ``u1`` drives the right wheel, ``u2`` the left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

from .kinematics import Pose, VelocityPair, wrap_angle

__all__ = [
    "MotorParams",
    "PlantParams",
    "PlantState",
    "CommandPair",
    "Disturbance",
    "NO_DISTURBANCE",
    "plant_derivative",
    "step_plant",
    "wheel_to_body",
    "body_to_wheel",
    "perturb_params",
]


def _require_positive(obj, names):
    for name in names:
        val = getattr(obj, name)
        if not (math.isfinite(val) and val > 0):
            raise ValueError(f"{type(obj).__name__}.{name} must be positive, got {val}")


@dataclass(frozen=True)
class MotorParams:
    kt: float = 0.05  # N*m/A
    ke: float = 0.05  # V*s/rad
    resistance: float = 1.0  # ohm
    gear_ratio: float = 20.0
    rotor_inertia: float = 5e-4  # kg*m^2, referred to the wheel axis

    def __post_init__(self):
        _require_positive(self, [f.name for f in fields(self)])


@dataclass(frozen=True)
class PlantParams:
    mass: float = 10.0
    inertia_z: float = 0.5
    wheel_radius: float = 0.05
    half_track: float = 0.20
    right: MotorParams = field(default_factory=MotorParams)
    left: MotorParams = field(default_factory=MotorParams)
    friction_linear: float = 2.0  # N*s/m
    friction_angular: float = 0.4  # N*m*s/rad
    command_limit: float = 12.0  # V

    def __post_init__(self):
        _require_positive(
            self,
            [
                "mass",
                "inertia_z",
                "wheel_radius",
                "half_track",
                "friction_linear",
                "friction_angular",
                "command_limit",
            ],
        )

    @property
    def effective_mass(self) -> float:
        r = self.wheel_radius
        return self.mass + (self.right.rotor_inertia + self.left.rotor_inertia) / (r * r)

    @property
    def effective_inertia(self) -> float:
        r, b = self.wheel_radius, self.half_track
        return self.inertia_z + (self.right.rotor_inertia + self.left.rotor_inertia) * b * b / (r * r)


@dataclass(frozen=True)
class CommandPair:
    u1: float  # right motor, V
    u2: float  # left motor, V


@dataclass(frozen=True)
class Disturbance:
    """Additive wheel torque bias, optionally active only on ``[start, end)``."""

    torque_right: float = 0.0
    torque_left: float = 0.0
    start: float | None = None
    end: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.torque_right) and math.isfinite(self.torque_left)):
            raise ValueError("disturbance torques must be finite")

    def at(self, t: float) -> tuple[float, float]:
        if self.start is not None and t < self.start:
            return (0.0, 0.0)
        if self.end is not None and t >= self.end:
            return (0.0, 0.0)
        return (self.torque_right, self.torque_left)


NO_DISTURBANCE = Disturbance()


def wheel_to_body(omega_r: float, omega_l: float, p: PlantParams) -> VelocityPair:
    r, b = p.wheel_radius, p.half_track
    return VelocityPair(r * (omega_r + omega_l) / 2.0, r * (omega_r - omega_l) / (2.0 * b))


def body_to_wheel(eta: VelocityPair, p: PlantParams) -> tuple[float, float]:
    r, b = p.wheel_radius, p.half_track
    return ((eta.v + b * eta.w) / r, (eta.v - b * eta.w) / r)


@dataclass(frozen=True)
class PlantState:
    pose: Pose
    v: float
    w: float
    omega_r: float
    omega_l: float

    @classmethod
    def from_body(cls, pose: Pose, v: float, w: float, p: PlantParams) -> "PlantState":
        wr, wl = body_to_wheel(VelocityPair(v, w), p)
        return cls(pose, v, w, wr, wl)

    @classmethod
    def at_rest(cls, pose: Pose, p: PlantParams) -> "PlantState":
        return cls(pose, 0.0, 0.0, 0.0, 0.0)

    @property
    def velocity(self) -> VelocityPair:
        return VelocityPair(self.v, self.w)

    def kinetic_energy(self, p: PlantParams) -> float:
        return 0.5 * p.effective_mass * self.v**2 + 0.5 * p.effective_inertia * self.w**2


def _rates(theta, v, w, u1, u2, tau_dr, tau_dl, p: PlantParams):
    r, b = p.wheel_radius, p.half_track
    om_r = (v + b * w) / r
    om_l = (v - b * w) / r
    mr, ml = p.right, p.left
    tau_r = mr.gear_ratio * mr.kt * (u1 - mr.gear_ratio * mr.ke * om_r) / mr.resistance + tau_dr
    tau_l = ml.gear_ratio * ml.kt * (u2 - ml.gear_ratio * ml.ke * om_l) / ml.resistance + tau_dl
    dv = ((tau_r + tau_l) / r - p.friction_linear * v) / p.effective_mass
    dw = (b * (tau_r - tau_l) / r - p.friction_angular * w) / p.effective_inertia
    return (v * math.cos(theta), v * math.sin(theta), w, dv, dw)


def plant_derivative(
    s: PlantState,
    u: CommandPair,
    d: Disturbance = NO_DISTURBANCE,
    p: PlantParams | None = None,
    t: float = 0.0,
) -> tuple[float, float, float, float, float]:
    """Rates ``(xdot, ydot, thetadot, vdot, wdot)`` of the plant state."""
    p = p or PlantParams()
    tdr, tdl = d.at(t)
    return _rates(s.pose.theta, s.v, s.w, u.u1, u.u2, tdr, tdl, p)


def step_plant(
    s: PlantState,
    u: CommandPair,
    d: Disturbance,
    p: PlantParams,
    dt: float,
    t: float = 0.0,
) -> PlantState:
    """Advance the plant one RK4 step with command and disturbance held."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    tdr, tdl = d.at(t)
    u1, u2 = u.u1, u.u2
    x, y, th, v, w = s.pose.x, s.pose.y, s.pose.theta, s.v, s.w
    h = 0.5 * dt
    k1 = _rates(th, v, w, u1, u2, tdr, tdl, p)
    k2 = _rates(th + h * k1[2], v + h * k1[3], w + h * k1[4], u1, u2, tdr, tdl, p)
    k3 = _rates(th + h * k2[2], v + h * k2[3], w + h * k2[4], u1, u2, tdr, tdl, p)
    k4 = _rates(th + dt * k3[2], v + dt * k3[3], w + dt * k3[4], u1, u2, tdr, tdl, p)
    c = dt / 6.0
    x += c * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    y += c * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    th += c * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    v += c * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    w += c * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4])
    return PlantState.from_body(Pose(x, y, wrap_angle(th)), v, w, p)


_BODY_FIELDS = {f.name for f in fields(PlantParams)} - {"right", "left"}
_MOTOR_FIELDS = {f.name for f in fields(MotorParams)}


def perturb_params(p: PlantParams, factors: Mapping[str, float]) -> PlantParams:
    """Scale parameters multiplicatively.

    Keys are body field names (``mass``, ``friction_linear``, ...), motor
    field names applied to both motors (``kt``, ``resistance``, ...), or
    ``right.<field>`` / ``left.<field>`` for one motor. ``friction`` scales
    both friction coefficients.
    """
    body: dict[str, float] = {}
    motors = {"right": {}, "left": {}}
    for key, factor in factors.items():
        if not math.isfinite(factor):
            raise ValueError(f"perturbation factor for {key} must be finite")
        if key == "friction":
            for k in ("friction_linear", "friction_angular"):
                body[k] = body.get(k, getattr(p, k)) * factor
        elif key in _BODY_FIELDS:
            body[key] = body.get(key, getattr(p, key)) * factor
        elif key in _MOTOR_FIELDS:
            for side in motors:
                cur = motors[side].get(key, getattr(getattr(p, side), key))
                motors[side][key] = cur * factor
        elif "." in key and key.split(".", 1)[0] in motors and key.split(".", 1)[1] in _MOTOR_FIELDS:
            side, name = key.split(".", 1)
            cur = motors[side].get(name, getattr(getattr(p, side), name))
            motors[side][name] = cur * factor
        else:
            raise KeyError(f"unknown plant parameter {key!r}")
    # the dataclass validators raise ValueError on nonpositive results
    return replace(
        p,
        right=replace(p.right, **motors["right"]),
        left=replace(p.left, **motors["left"]),
        **body,
    )
