"""Scenario description and its flat ``key = value`` text format.

One assignment per line, ``#`` starts a comment, nesting uses dotted keys.
Angle keys (``initial.theta``, ``reference.theta``) accept a ``deg``
suffix, e.g. ``initial.theta = -5 deg``. Every key has a default, so an
empty file is a valid scenario. Run ``neurotrack keys`` for the full list.

Reference trajectories are either the default circle (``reference.v``,
``reference.w``, stretched over ``sim.duration``) or an explicit list of
constant-velocity segments ``duration v w`` separated by ``;``, repeated
``reference.cycles`` times::

    reference.segments = 5 0.3 0.2; 5 0.15 -0.2
    reference.cycles = 6
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from ..kinematics import Pose, ReferenceProfile, Segment
from ..plant import Disturbance, MotorParams, PlantParams, perturb_params
from ..tracking import CONTROLLERS, TrackingGains
from ..velocity_loop import FeatureScales, LoopConfig, PidGains

__all__ = [
    "ConfigError",
    "ConfigSyntaxError",
    "UnknownKeyError",
    "InvariantError",
    "Thresholds",
    "NetSpec",
    "ScenarioConfig",
    "parse_config",
    "load_config",
    "KEYS",
]

KINEMATIC = "kinematic-ideal"
FULL = "full-dynamics"
MODES = (KINEMATIC, FULL)


class ConfigError(ValueError):
    pass


class ConfigSyntaxError(ConfigError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class UnknownKeyError(ConfigError):
    def __init__(self, key: str, lineno: int | None = None):
        where = f"line {lineno}: " if lineno else ""
        super().__init__(f"{where}unknown key {key!r}")
        self.key = key


class InvariantError(ConfigError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class Thresholds:
    settle: float = 1e-3
    transient: float = 10.0
    window_start: float = 0.0
    window_end: float | None = None
    lyap_tol: float = 1e-8


@dataclass(frozen=True)
class NetSpec:
    hidden: tuple[int, ...] = (12,)
    init_scale: float = 0.1
    init: str = "random"  # or "zero"


@dataclass(frozen=True)
class ScenarioConfig:
    reference: ReferenceProfile = field(
        default_factory=lambda: ReferenceProfile.circle(0.25, 0.1, 30.0)
    )
    initial_pose: Pose = Pose(0.0, 0.0, 0.0)
    gains: TrackingGains = TrackingGains(2.3, 0.3, 3.8)
    variant: str = "composite"
    mode: str = KINEMATIC
    loop: LoopConfig = field(default_factory=LoopConfig)
    plant: PlantParams = field(default_factory=PlantParams)
    perturbation: tuple[tuple[str, float], ...] = ()
    disturbance: Disturbance = Disturbance()
    net: NetSpec = NetSpec()
    dt: float = 1e-3
    duration: float = 30.0
    seed: int = 0
    thresholds: Thresholds = Thresholds()

    def __post_init__(self):
        validate(self)

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    def plant_params(self) -> PlantParams:
        """Nominal plant with the perturbation factors applied."""
        return perturb_params(self.plant, dict(self.perturbation))


def validate(cfg: ScenarioConfig) -> None:
    if cfg.mode not in MODES:
        raise InvariantError("sim.mode", f"must be one of {MODES}, got {cfg.mode!r}")
    if cfg.variant not in CONTROLLERS:
        raise InvariantError("tracking.variant", f"must be one of {CONTROLLERS}, got {cfg.variant!r}")
    if not (math.isfinite(cfg.dt) and cfg.dt > 0):
        raise InvariantError("sim.dt", "must be > 0")
    if not cfg.duration >= cfg.dt:
        raise InvariantError("sim.duration", "must be >= sim.dt")
    n = cfg.duration / cfg.dt
    if abs(n - round(n)) > 1e-6:
        raise InvariantError("sim.duration", f"must be a whole number of steps of {cfg.dt}")
    if cfg.reference.duration < cfg.duration - 1e-9:
        raise InvariantError(
            "reference.segments",
            f"reference lasts {cfg.reference.duration} s, shorter than sim.duration {cfg.duration}",
        )
    th = cfg.thresholds
    if th.transient > cfg.duration:
        raise InvariantError("metrics.transient", "lies beyond sim.duration")
    end = cfg.duration if th.window_end is None else th.window_end
    if not (0.0 <= th.window_start < end <= cfg.duration + 1e-9):
        raise InvariantError("metrics.window_start", "window must lie inside [0, sim.duration]")
    try:
        cfg.plant_params()
    except (KeyError, ValueError) as exc:
        raise InvariantError("perturb", str(exc)) from exc


# --------------------------------------------------------------------------
# text format


def _num(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _angle(s: str) -> float:
    s = s.strip()
    if s.endswith("deg"):
        return math.radians(_num(s[:-3]))
    if s.endswith("rad"):
        return _num(s[:-3])
    return _num(s)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int(s: str) -> int:
    return int(s.strip())


def _str(s: str) -> str:
    return s.strip()


def _ints(s: str) -> tuple[int, ...]:
    s = s.strip()
    return tuple(int(tok) for tok in s.split(",")) if s else ()


def _segments(s: str) -> tuple[Segment, ...]:
    out = []
    for chunk in s.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.replace(",", " ").split()
        if len(parts) != 3:
            raise ValueError(f"segment {chunk!r} needs 'duration v w'")
        out.append(Segment(*(_num(p) for p in parts)))
    return tuple(out)


POS = "positive"
NONNEG = "non-negative"

# key -> (parser, default, constraint)
KEYS: dict[str, tuple[Callable[[str], Any], Any, str | None]] = {
    "sim.mode": (_str, KINEMATIC, None),
    "sim.dt": (_num, 1e-3, POS),
    "sim.duration": (_num, 30.0, POS),
    "sim.seed": (_int, 0, NONNEG),
    "initial.x": (_num, 0.0, None),
    "initial.y": (_num, 0.0, None),
    "initial.theta": (_angle, 0.0, None),
    "reference.x": (_num, 0.0, None),
    "reference.y": (_num, 0.0, None),
    "reference.theta": (_angle, 0.0, None),
    "reference.v": (_num, 0.25, POS),
    "reference.w": (_num, 0.1, None),
    "reference.segments": (_segments, (), None),
    "reference.cycles": (_int, 1, POS),
    "tracking.k1": (_num, 2.3, POS),
    "tracking.k2": (_num, 0.3, POS),
    "tracking.k3": (_num, 3.8, POS),
    "tracking.variant": (_str, "composite", None),
    "pid.v.kp": (_num, 20.0, NONNEG),
    "pid.v.ki": (_num, 100.0, NONNEG),
    "pid.v.kd": (_num, 0.0, NONNEG),
    "pid.w.kp": (_num, 4.0, NONNEG),
    "pid.w.ki": (_num, 20.0, NONNEG),
    "pid.w.kd": (_num, 0.0, NONNEG),
    "loop.anti_windup": (_num, None, POS),  # default: plant.command_limit
    "loop.learning": (_bool, True, None),
    "loop.learning_rate": (_num, 1e-3, NONNEG),
    "loop.scale.v": (_num, 0.5, POS),
    "loop.scale.w": (_num, 0.5, POS),
    "loop.scale.dv": (_num, 1.0, POS),
    "loop.scale.dw": (_num, 1.0, POS),
    "net.hidden": (_ints, (12,), None),
    "net.init_scale": (_num, 0.1, NONNEG),
    "net.init": (_str, "random", None),
    "plant.mass": (_num, 10.0, POS),
    "plant.inertia_z": (_num, 0.5, POS),
    "plant.wheel_radius": (_num, 0.05, POS),
    "plant.half_track": (_num, 0.20, POS),
    "plant.friction_linear": (_num, 2.0, POS),
    "plant.friction_angular": (_num, 0.4, POS),
    "plant.command_limit": (_num, 12.0, POS),
    "plant.motor.kt": (_num, 0.05, POS),
    "plant.motor.ke": (_num, 0.05, POS),
    "plant.motor.resistance": (_num, 1.0, POS),
    "plant.motor.gear_ratio": (_num, 20.0, POS),
    "plant.motor.rotor_inertia": (_num, 5e-4, POS),
    "disturbance.torque_right": (_num, 0.0, None),
    "disturbance.torque_left": (_num, 0.0, None),
    "disturbance.start": (_num, None, NONNEG),
    "disturbance.end": (_num, None, NONNEG),
    "metrics.settle_threshold": (_num, 1e-3, POS),
    "metrics.transient": (_num, 10.0, NONNEG),
    "metrics.window_start": (_num, 0.0, NONNEG),
    "metrics.window_end": (_num, None, POS),
    "metrics.lyap_tol": (_num, 1e-8, NONNEG),
}

_MOTOR_NAMES = ("kt", "ke", "resistance", "gear_ratio", "rotor_inertia")
_PERTURB_KEYS = (
    {"friction", "mass", "inertia_z", "wheel_radius", "half_track", "friction_linear",
     "friction_angular", "command_limit"}
    | set(_MOTOR_NAMES)
    | {f"{side}.{n}" for side in ("right", "left") for n in _MOTOR_NAMES}
)


def _check(key: str, value, constraint: str | None):
    if constraint is None or value is None:
        return
    if constraint == POS and not value > 0:
        raise InvariantError(key, f"must be > 0, got {value}")
    if constraint == NONNEG and not value >= 0:
        raise InvariantError(key, f"must be >= 0, got {value}")


def parse_assignments(text: str) -> tuple[dict[str, Any], dict[str, float]]:
    values: dict[str, Any] = {}
    perturb: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigSyntaxError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if not key or any(ch.isspace() for ch in key):
            raise ConfigSyntaxError(lineno, f"malformed key {key!r}")
        if not val and key != "reference.segments":
            raise ConfigSyntaxError(lineno, f"missing value for {key!r}")
        if key.startswith("perturb."):
            name = key[len("perturb."):]
            if name not in _PERTURB_KEYS:
                raise UnknownKeyError(key, lineno)
            try:
                factor = _num(val)
            except ValueError as exc:
                raise ConfigSyntaxError(lineno, f"bad value for {key}: {exc}") from exc
            _check(key, factor, POS)
            perturb[name] = factor
            continue
        if key not in KEYS:
            raise UnknownKeyError(key, lineno)
        parser, _, constraint = KEYS[key]
        try:
            parsed = parser(val)
        except ValueError as exc:
            raise ConfigSyntaxError(lineno, f"bad value for {key}: {exc}") from exc
        _check(key, parsed, constraint)
        values[key] = parsed
    return values, perturb


def parse_config(text: str) -> ScenarioConfig:
    values, perturb = parse_assignments(text)
    v = {k: spec[1] for k, spec in KEYS.items()}
    v.update(values)
    if "metrics.transient" not in values:
        # keep the default usable for runs shorter than 10 s
        v["metrics.transient"] = min(v["metrics.transient"], v["sim.duration"])
    return build_config(v, perturb)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _build(key: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise InvariantError(key, str(exc)) from exc


def build_config(v: dict[str, Any], perturb: dict[str, float]) -> ScenarioConfig:
    duration = v["sim.duration"]
    start = Pose(v["reference.x"], v["reference.y"], v["reference.theta"])
    if v["reference.segments"]:
        ref = _build("reference.segments", ReferenceProfile, start, v["reference.segments"])
        ref = ref.repeated(v["reference.cycles"])
    else:
        if "reference.cycles" in v and v["reference.cycles"] != 1:
            raise InvariantError("reference.cycles", "only applies to reference.segments")
        ref = _build("reference.v", ReferenceProfile.circle, v["reference.v"], v["reference.w"], duration, start)

    if v["tracking.variant"] not in CONTROLLERS:
        raise InvariantError("tracking.variant", f"must be one of {CONTROLLERS}")
    if v["sim.mode"] not in MODES:
        raise InvariantError("sim.mode", f"must be one of {MODES}")
    if v["net.init"] not in ("random", "zero"):
        raise InvariantError("net.init", "must be 'random' or 'zero'")
    if any(n <= 0 for n in v["net.hidden"]):
        raise InvariantError("net.hidden", "layer sizes must be positive")

    motor = _build(
        "plant.motor",
        MotorParams,
        v["plant.motor.kt"],
        v["plant.motor.ke"],
        v["plant.motor.resistance"],
        v["plant.motor.gear_ratio"],
        v["plant.motor.rotor_inertia"],
    )
    plant = PlantParams(
        mass=v["plant.mass"],
        inertia_z=v["plant.inertia_z"],
        wheel_radius=v["plant.wheel_radius"],
        half_track=v["plant.half_track"],
        right=motor,
        left=motor,
        friction_linear=v["plant.friction_linear"],
        friction_angular=v["plant.friction_angular"],
        command_limit=v["plant.command_limit"],
    )
    limit = plant.command_limit
    loop = _build(
        "pid",
        LoopConfig,
        pid_v=PidGains(v["pid.v.kp"], v["pid.v.ki"], v["pid.v.kd"]),
        pid_w=PidGains(v["pid.w.kp"], v["pid.w.ki"], v["pid.w.kd"]),
        anti_windup=limit if v["loop.anti_windup"] is None else v["loop.anti_windup"],
        scales=FeatureScales(v["loop.scale.v"], v["loop.scale.w"], v["loop.scale.dv"], v["loop.scale.dw"]),
        learning_rate=v["loop.learning_rate"],
        learning=v["loop.learning"],
        command_limit=limit,
    )
    thresholds = Thresholds(
        settle=v["metrics.settle_threshold"],
        transient=v["metrics.transient"],
        window_start=v["metrics.window_start"],
        window_end=v["metrics.window_end"],
        lyap_tol=v["metrics.lyap_tol"],
    )
    return ScenarioConfig(
        reference=ref,
        initial_pose=Pose(v["initial.x"], v["initial.y"], v["initial.theta"]),
        gains=TrackingGains(v["tracking.k1"], v["tracking.k2"], v["tracking.k3"]),
        variant=v["tracking.variant"],
        mode=v["sim.mode"],
        loop=loop,
        plant=plant,
        perturbation=tuple(sorted(perturb.items())),
        disturbance=Disturbance(
            v["disturbance.torque_right"], v["disturbance.torque_left"],
            v["disturbance.start"], v["disturbance.end"],
        ),
        net=NetSpec(tuple(v["net.hidden"]), v["net.init_scale"], v["net.init"]),
        dt=v["sim.dt"],
        duration=duration,
        seed=v["sim.seed"],
        thresholds=thresholds,
    )


def describe_keys() -> list[str]:
    lines = []
    for key, (_, default, constraint) in KEYS.items():
        note = f"  ({constraint})" if constraint else ""
        lines.append(f"{key} = {default!r}{note}")
    lines.append("perturb.<param> = factor  (positive; one of " + ", ".join(sorted(_PERTURB_KEYS)) + ")")
    return lines
