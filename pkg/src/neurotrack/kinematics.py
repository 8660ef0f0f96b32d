"""Planar poses, unicycle kinematics and piecewise reference trajectories.

All angles are radians and every public function returns headings wrapped
to the half-open interval (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Pose",
    "VelocityPair",
    "PostureError",
    "Segment",
    "ReferenceProfile",
    "wrap_angle",
    "unicycle_derivative",
    "pose_error",
    "reference_state",
    "integrate_pose",
    "integrate_closed_loop",
    "closed_loop_step",
    "sample_reference",
]


def wrap_angle(a: float) -> float:
    """Wrap ``a`` into (-pi, pi].

    >>> wrap_angle(3 * math.pi) == math.pi
    True
    """
    if not math.isfinite(a):
        raise ValueError(f"cannot wrap non-finite angle {a!r}")
    r = math.remainder(a, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


@dataclass(frozen=True)
class VelocityPair:
    """Body-frame velocities: ``v`` along the main axis, ``w`` about z."""

    v: float
    w: float

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.w)):
            raise ValueError(f"velocities must be finite, got ({self.v}, {self.w})")


@dataclass(frozen=True)
class PostureError:
    """Tracking error expressed in the robot frame."""

    ex: float
    ey: float
    etheta: float

    def __post_init__(self):
        object.__setattr__(self, "etheta", wrap_angle(self.etheta))
        if not (math.isfinite(self.ex) and math.isfinite(self.ey)):
            raise ValueError("posture error components must be finite")

    def norm(self) -> float:
        # mixed-unit norm, radians weighted 1 m/rad
        return math.sqrt(self.ex * self.ex + self.ey * self.ey + self.etheta * self.etheta)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.ex, self.ey, self.etheta)


ZERO_ERROR = PostureError(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Segment:
    duration: float
    v: float
    w: float


@dataclass(frozen=True)
class ReferenceProfile:
    """Reference trajectory made of constant-velocity segments.

    Each segment is a straight line (``w == 0``) or a circular arc of
    radius ``v / w``. Segment start poses are precomputed in closed form.
    """

    initial_pose: Pose
    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        if not segs:
            raise ValueError("reference profile needs at least one segment")
        for i, s in enumerate(segs):
            if not s.duration > 0:
                raise ValueError(f"segment {i}: duration must be > 0, got {s.duration}")
            if not s.v > 0:
                raise ValueError(f"segment {i}: reference speed must be > 0, got {s.v}")
            if not math.isfinite(s.w):
                raise ValueError(f"segment {i}: angular rate must be finite")
        object.__setattr__(self, "segments", segs)

        starts = [0.0]
        poses = [self.initial_pose]
        for s in segs:
            poses.append(_advance_exact(poses[-1], s.v, s.w, s.duration))
            starts.append(starts[-1] + s.duration)
        object.__setattr__(self, "_starts", tuple(starts))
        object.__setattr__(self, "_poses", tuple(poses))

    @property
    def duration(self) -> float:
        return self._starts[-1]

    @classmethod
    def circle(cls, v: float, w: float, duration: float, start: Pose | None = None) -> "ReferenceProfile":
        return cls(start or Pose(0.0, 0.0, 0.0), (Segment(duration, v, w),))

    def repeated(self, cycles: int) -> "ReferenceProfile":
        """Profile that runs the segment list ``cycles`` times back to back."""
        if cycles < 1:
            raise ValueError("cycles must be >= 1")
        return ReferenceProfile(self.initial_pose, self.segments * cycles)


def _sinc(z: float) -> float:
    if abs(z) < 1e-8:
        return 1.0 - z * z / 6.0
    return math.sin(z) / z


def _advance_exact(p: Pose, v: float, w: float, tau: float) -> Pose:
    # chord form of the arc, well conditioned as w -> 0
    half = 0.5 * w * tau
    chord = v * tau * _sinc(half)
    mid = p.theta + half
    return Pose(p.x + chord * math.cos(mid), p.y + chord * math.sin(mid), p.theta + w * tau)


def unicycle_derivative(q: Pose, eta: VelocityPair) -> tuple[float, float, float]:
    return (eta.v * math.cos(q.theta), eta.v * math.sin(q.theta), eta.w)


def pose_error(q_r: Pose, q: Pose) -> PostureError:
    """Reference-minus-actual pose rotated into the robot frame."""
    dx = q_r.x - q.x
    dy = q_r.y - q.y
    c = math.cos(q.theta)
    s = math.sin(q.theta)
    return PostureError(c * dx + s * dy, -s * dx + c * dy, q_r.theta - q.theta)


def reference_state(p: ReferenceProfile, t: float) -> tuple[Pose, VelocityPair]:
    total = p.duration
    if not (0.0 <= t <= total):
        raise IndexError(f"t={t} outside reference profile [0, {total}]")
    starts = p._starts
    # linear scan is fine for the handful of segments a profile carries
    i = 0
    n = len(p.segments)
    while i + 1 < n and t >= starts[i + 1]:
        i += 1
    seg = p.segments[i]
    pose = _advance_exact(p._poses[i], seg.v, seg.w, t - starts[i])
    return pose, VelocityPair(seg.v, seg.w)


def integrate_pose(q: Pose, eta: VelocityPair, dt: float) -> Pose:
    """One classical RK4 step of the unicycle model with ``eta`` held constant."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    v, w = eta.v, eta.w
    th = q.theta
    # x and y do not feed back into the rates, so only theta stages matter
    th2 = th + 0.5 * dt * w
    th4 = th + dt * w
    c1, s1 = math.cos(th), math.sin(th)
    c2, s2 = math.cos(th2), math.sin(th2)
    c4, s4 = math.cos(th4), math.sin(th4)
    x = q.x + dt / 6.0 * v * (c1 + 4.0 * c2 + c4)
    y = q.y + dt / 6.0 * v * (s1 + 4.0 * s2 + s4)
    return Pose(x, y, th4)


def closed_loop_step(
    x: float,
    y: float,
    th: float,
    rate: Callable[[float, float, float, float], tuple[float, float]],
    t: float,
    dt: float,
    first: tuple[float, float] | None = None,
) -> tuple[float, float, float]:
    """Float-level RK4 step of the unicycle under ``(v, w) = rate(t, x, y, th)``.

    The heading is returned unwrapped. ``first`` may carry the already
    computed first-stage velocities.
    """
    h = 0.5 * dt
    v1, w1 = rate(t, x, y, th) if first is None else first
    c1, s1 = math.cos(th), math.sin(th)
    th2 = th + h * w1
    v2, w2 = rate(t + h, x + h * v1 * c1, y + h * v1 * s1, th2)
    c2, s2 = math.cos(th2), math.sin(th2)
    th3 = th + h * w2
    v3, w3 = rate(t + h, x + h * v2 * c2, y + h * v2 * s2, th3)
    c3, s3 = math.cos(th3), math.sin(th3)
    th4 = th + dt * w3
    v4, w4 = rate(t + dt, x + dt * v3 * c3, y + dt * v3 * s3, th4)
    c4, s4 = math.cos(th4), math.sin(th4)
    k = dt / 6.0
    return (
        x + k * (v1 * c1 + 2.0 * v2 * c2 + 2.0 * v3 * c3 + v4 * c4),
        y + k * (v1 * s1 + 2.0 * v2 * s2 + 2.0 * v3 * s3 + v4 * s4),
        th + k * (w1 + 2.0 * w2 + 2.0 * w3 + w4),
    )


def integrate_closed_loop(
    q: Pose,
    velocity_at: Callable[[float, Pose], VelocityPair],
    t: float,
    dt: float,
) -> Pose:
    """One RK4 step of the unicycle driven by a state feedback law.

    ``velocity_at(t, q)`` is re-evaluated at every stage, so the step
    follows the continuous closed loop rather than a sample-and-hold of
    the command.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")

    def rate(s, x, y, th):
        eta = velocity_at(s, Pose(x, y, th))
        return eta.v, eta.w

    return Pose(*closed_loop_step(q.x, q.y, q.theta, rate, t, dt))


def sample_reference(p: ReferenceProfile, times) -> np.ndarray:
    """Vectorised :func:`reference_state`: rows ``(x_r, y_r, theta_r, v_r, w_r)``."""
    t = np.asarray(times, dtype=float)
    if t.size and (t.min() < 0.0 or t.max() > p.duration):
        raise IndexError(f"sample times outside reference profile [0, {p.duration}]")
    starts = np.asarray(p._starts[:-1])
    i = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(p.segments) - 1)
    seg = np.array([(s.v, s.w) for s in p.segments])[i]
    base = np.array([q.as_tuple() for q in p._poses[:-1]])[i]
    v, w = seg[:, 0], seg[:, 1]
    tau = t - starts[i]
    half = 0.5 * w * tau
    chord = v * tau * np.sinc(half / np.pi)
    mid = base[:, 2] + half
    theta = np.remainder(base[:, 2] + w * tau + np.pi, 2.0 * np.pi) - np.pi
    theta[theta == -np.pi] = np.pi
    return np.column_stack(
        (base[:, 0] + chord * np.cos(mid), base[:, 1] + chord * np.sin(mid), theta, v, w)
    )


def poses_close(a: Pose, b: Pose, tol: float) -> bool:
    return (
        abs(a.x - b.x) <= tol
        and abs(a.y - b.y) <= tol
        and abs(wrap_angle(a.theta - b.theta)) <= tol
    )


def as_segments(rows: Sequence[Sequence[float]]) -> tuple[Segment, ...]:
    return tuple(Segment(float(d), float(v), float(w)) for d, v, w in rows)
