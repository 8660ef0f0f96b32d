"""Outer-loop trajectory tracking controllers and Lyapunov monitoring.

Two controllers are available:

``composite``
    V_c = k1*ex + V_r*cos(eth)
    w_c = w_r + (V_r/2)*k2*(ey + k3*eth) + V_r/(2*k3)*sin(eth)
    with V = ex^2/2 + (ey + k3*eth)^2/2 + (1 - cos(eth))/k2

``kanayama-baseline``
    V_c = k1*ex + V_r*cos(eth)
    w_c = w_r + V_r*(k2*ey + k3*sin(eth))
    with V = (ex^2 + ey^2)/2 + (1 - cos(eth))/k2

The time derivative of V is always evaluated by the chain rule along the
closed-loop error dynamics, never from a hand-simplified expression. For
``composite`` that derivative works out to

    -k1*ex^2 - k3*w_c*ex*eth - (V_r*k2*k3/2)*(ey + k3*eth)^2
             - V_r/(2*k2*k3)*sin(eth)^2

whose cross term is sign indefinite, which is why ``lyapunov_sign_scan``
exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import PostureError, VelocityPair

__all__ = [
    "PostureError",
    "TrackingGains",
    "CONTROLLERS",
    "tracking_control",
    "kanayama_control",
    "error_dynamics",
    "input_matrix",
    "lyapunov_value",
    "lyapunov_gradient",
    "lyapunov_rate",
    "SignScanReport",
    "lyapunov_sign_scan",
]

COMPOSITE = "composite"
KANAYAMA = "kanayama-baseline"
CONTROLLERS = (COMPOSITE, KANAYAMA)


@dataclass(frozen=True)
class TrackingGains:
    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        for name in ("k1", "k2", "k3"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"tracking gain {name} must be a positive finite number, got {val}")


def _check_variant(variant: str) -> None:
    if variant not in CONTROLLERS:
        raise ValueError(f"unknown controller variant {variant!r}; expected one of {CONTROLLERS}")


def _composite_law(k1, k2, k3, ex, ey, et, vr, wr):
    return (
        k1 * ex + vr * math.cos(et),
        wr + 0.5 * vr * k2 * (ey + k3 * et) + vr / (2.0 * k3) * math.sin(et),
    )


def _kanayama_law(k1, k2, k3, ex, ey, et, vr, wr):
    return (k1 * ex + vr * math.cos(et), wr + vr * (k2 * ey + k3 * math.sin(et)))


_LAWS = {COMPOSITE: _composite_law, KANAYAMA: _kanayama_law}


def tracking_control(e: PostureError, eta_r: VelocityPair, K: TrackingGains) -> VelocityPair:
    if K.k3 == 0:
        raise ZeroDivisionError("k3 must be non-zero")
    vr = eta_r.v
    if not vr > 0:
        raise ValueError(f"reference speed must be > 0, got {vr}")
    return VelocityPair(*_composite_law(K.k1, K.k2, K.k3, e.ex, e.ey, e.etheta, vr, eta_r.w))


def kanayama_control(e: PostureError, eta_r: VelocityPair, K: TrackingGains) -> VelocityPair:
    vr = eta_r.v
    if not vr > 0:
        raise ValueError(f"reference speed must be > 0, got {vr}")
    return VelocityPair(*_kanayama_law(K.k1, K.k2, K.k3, e.ex, e.ey, e.etheta, vr, eta_r.w))


def control_for(variant: str):
    _check_variant(variant)
    return tracking_control if variant == COMPOSITE else kanayama_control


def scalar_law(variant: str, K: TrackingGains):
    """Unchecked float form ``(ex, ey, eth, v_r, w_r) -> (v_c, w_c)`` for inner loops.

    Callers are responsible for keeping ``v_r > 0``.
    """
    _check_variant(variant)
    law = _LAWS[variant]
    k1, k2, k3 = K.k1, K.k2, K.k3
    return lambda ex, ey, et, vr, wr: law(k1, k2, k3, ex, ey, et, vr, wr)


def input_matrix(e: PostureError) -> np.ndarray:
    """Matrix multiplying the commanded velocities in the error dynamics."""
    return np.array([[-1.0, e.ey], [0.0, -e.ex], [0.0, -1.0]])


def error_dynamics(e: PostureError, eta_r: VelocityPair, eta_c: VelocityPair) -> tuple[float, float, float]:
    vr, wr = eta_r.v, eta_r.w
    v, w = eta_c.v, eta_c.w
    return (
        vr * math.cos(e.etheta) - v + e.ey * w,
        vr * math.sin(e.etheta) - e.ex * w,
        wr - w,
    )


def lyapunov_value(e: PostureError, K: TrackingGains, variant: str = COMPOSITE) -> float:
    ex, ey, et = e.ex, e.ey, e.etheta
    # 1 - cos(a) == 2 sin(a/2)^2, without the cancellation near a = 0
    h = math.sin(0.5 * et)
    heading = 2.0 * h * h / K.k2
    if variant == COMPOSITE:
        s = ey + K.k3 * et
        return 0.5 * ex * ex + 0.5 * s * s + heading
    _check_variant(variant)
    return 0.5 * (ex * ex + ey * ey) + heading


def lyapunov_gradient(e: PostureError, K: TrackingGains, variant: str = COMPOSITE) -> tuple[float, float, float]:
    ex, ey, et = e.ex, e.ey, e.etheta
    if variant == COMPOSITE:
        s = ey + K.k3 * et
        return (ex, s, K.k3 * s + math.sin(et) / K.k2)
    _check_variant(variant)
    return (ex, ey, math.sin(et) / K.k2)


def lyapunov_rate(
    e: PostureError, eta_r: VelocityPair, K: TrackingGains, variant: str = COMPOSITE
) -> float:
    """dV/dt along the closed loop, via gradient . error_dynamics."""
    eta_c = control_for(variant)(e, eta_r, K)
    g = lyapunov_gradient(e, K, variant)
    d = error_dynamics(e, eta_r, eta_c)
    return g[0] * d[0] + g[1] * d[1] + g[2] * d[2]


@dataclass(frozen=True)
class SignScanReport:
    samples: int
    min_rate: float
    max_rate: float
    positive_fraction: float
    worst: list[tuple[tuple[float, float, float], float]] = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [
            f"samples={self.samples}",
            f"min_Vdot={self.min_rate:.9g}",
            f"max_Vdot={self.max_rate:.9g}",
            f"positive_fraction={self.positive_fraction:.9g}",
        ]
        for (ex, ey, et), r in self.worst:
            out.append(f"worst e=({ex:.6g},{ey:.6g},{et:.6g}) Vdot={r:.9g}")
        return out


def lyapunov_sign_scan(
    eta_r: VelocityPair,
    K: TrackingGains,
    lower: tuple[float, float, float],
    upper: tuple[float, float, float],
    samples: int,
    seed: int = 0,
    worst: int = 5,
    variant: str = COMPOSITE,
) -> SignScanReport:
    """Sample V-dot uniformly over a box of errors and summarize its sign.

    The box is given by per-component ``lower``/``upper`` bounds. A
    degenerate box (``lower == upper``) samples a single point. Reporting
    only; nothing here asserts stability.
    """
    if samples <= 0:
        raise ValueError("sample count must be > 0")
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != (3,) or hi.shape != (3,) or np.any(hi < lo):
        raise ValueError(f"empty or malformed scan region: lower={lower}, upper={upper}")
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((samples, 3))
    rates = np.empty(samples)
    for i, (ex, ey, et) in enumerate(pts):
        rates[i] = lyapunov_rate(PostureError(ex, ey, et), eta_r, K, variant)
    order = np.argsort(-rates, kind="stable")[:worst]
    worst_rows = [(tuple(float(c) for c in pts[j]), float(rates[j])) for j in order]
    return SignScanReport(
        samples=samples,
        min_rate=float(rates.min()),
        max_rate=float(rates.max()),
        positive_fraction=float(np.count_nonzero(rates > 0.0)) / samples,
        worst=worst_rows,
    )
