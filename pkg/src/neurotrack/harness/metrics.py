"""Scalar performance figures computed from a :class:`SimLog`."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .config import Thresholds
from .runner import SimLog

__all__ = ["Metrics", "settling_time", "compute_metrics"]


@dataclass(frozen=True)
class Metrics:
    settling_time: float | None  # None: never settles within the run
    settling_time_ex: float | None
    final_ep_norm: float
    rms_ec: float
    rms_ec_v: float
    rms_ec_w: float
    sup_ec: float
    sup_ec_after_transient: float
    mean_abs_ufb: float
    lyapunov_increases: int

    def as_dict(self) -> dict:
        return asdict(self)


def settling_time(t: np.ndarray, signal: np.ndarray, threshold: float) -> float | None:
    """First time after which ``signal`` stays strictly below ``threshold``."""
    above = np.flatnonzero(signal >= threshold)
    if above.size == 0:
        return float(t[0])
    last = above[-1]
    if last == len(t) - 1:
        return None
    return float(t[last + 1])


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def compute_metrics(log: SimLog, thresholds: Thresholds = Thresholds()) -> Metrics:
    if len(log) == 0:
        raise ValueError("cannot compute metrics of an empty log")
    t = log["t"]
    t_end = t[-1]
    start = thresholds.window_start
    end = t_end if thresholds.window_end is None else thresholds.window_end
    # small slack so window edges given in seconds land on sample times
    slack = 1e-9 * max(1.0, abs(t_end))
    if start > t_end + slack or end < start or thresholds.transient > t_end + slack:
        raise ValueError(f"metric windows fall outside the log (0..{t_end} s)")
    win = (t >= start - slack) & (t <= end + slack)
    after = t >= thresholds.transient - slack

    ec = log["e_c_norm"]
    ecv = log.ec_v
    ecw = log.ec_w
    ufb = np.abs(log["u_fb1"]) + np.abs(log["u_fb2"])
    dV = np.diff(log["V_lyap"])
    return Metrics(
        settling_time=settling_time(t, log.ep_norm, thresholds.settle),
        settling_time_ex=settling_time(t, np.abs(log["e_x"]), thresholds.settle),
        final_ep_norm=float(log.ep_norm[-1]),
        rms_ec=_rms(ec[win]),
        rms_ec_v=_rms(ecv[win]),
        rms_ec_w=_rms(ecw[win]),
        sup_ec=float(np.max(ec)),
        sup_ec_after_transient=float(np.max(ec[after])) if after.any() else 0.0,
        mean_abs_ufb=float(np.mean(ufb[win])),
        lyapunov_increases=int(np.count_nonzero(dV > thresholds.lyap_tol)),
    )


def ratio(a, b) -> float | None:
    """``b / a`` with 1 for equal values and None when either side is absent."""
    if a is None or b is None:
        return None
    if a == b:
        return 1.0
    if a == 0:
        return math.copysign(math.inf, b)
    return b / a
