"""Multi-run experiments: paired controller comparison and tracking-gain sweeps."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Sequence

from ..tracking import TrackingGains
from .config import ConfigError, ScenarioConfig
from .metrics import Metrics, compute_metrics, ratio
from .runner import SimLog, run_scenario

__all__ = ["Comparison", "SweepRow", "compare_controllers", "gain_sweep", "RANK_KEYS"]


@dataclass(frozen=True)
class Comparison:
    a: Metrics
    b: Metrics
    ratios: dict[str, float | None]
    log_a: SimLog | None = None
    log_b: SimLog | None = None

    def rows(self) -> list[tuple[str, object, object, object]]:
        return [(f.name, getattr(self.a, f.name), getattr(self.b, f.name), self.ratios[f.name]) for f in fields(Metrics)]


def compare_controllers(cfg_a: ScenarioConfig, cfg_b: ScenarioConfig, keep_logs: bool = False) -> Comparison:
    """Run both scenarios and report metric ratios B/A."""
    if cfg_a.reference != cfg_b.reference:
        raise ConfigError("compared scenarios must share the same reference trajectory")
    if cfg_a.duration != cfg_b.duration or cfg_a.dt != cfg_b.dt:
        raise ConfigError("compared scenarios must share sim.duration and sim.dt")
    if cfg_a.thresholds != cfg_b.thresholds:
        raise ConfigError("compared scenarios must share metric thresholds")
    log_a = run_scenario(cfg_a)
    log_b = log_a if cfg_b == cfg_a else run_scenario(cfg_b)
    ma = compute_metrics(log_a, cfg_a.thresholds)
    mb = compute_metrics(log_b, cfg_b.thresholds)
    ratios = {f.name: ratio(getattr(ma, f.name), getattr(mb, f.name)) for f in fields(Metrics)}
    if keep_logs:
        return Comparison(ma, mb, ratios, log_a, log_b)
    return Comparison(ma, mb, ratios)


@dataclass(frozen=True)
class SweepRow:
    k1: float
    k2: float
    k3: float
    metrics: Metrics


RANK_KEYS = {"ep": "settling_time", "ex": "settling_time_ex"}


def _run_point(cfg: ScenarioConfig) -> Metrics:
    return compute_metrics(run_scenario(cfg), cfg.thresholds)


def _sort_key(row: SweepRow, field_name: str):
    st = getattr(row.metrics, field_name)
    return (math.inf if st is None else st, row.metrics.final_ep_norm, (row.k1, row.k2, row.k3))


def gain_sweep(
    base: ScenarioConfig,
    k1s: Sequence[float],
    k2s: Sequence[float],
    k3s: Sequence[float],
    rank_by: str = "ep",
    workers: int = 1,
) -> list[SweepRow]:
    """Run every (k1, k2, k3) in the grid and rank the results.

    Rows are ordered by settling time (``rank_by="ep"`` uses the posture
    error norm, ``"ex"`` the longitudinal error only; never-settling runs go
    last), then final error norm, then lexicographically by gains.
    """
    if not (k1s and k2s and k3s):
        raise ConfigError("gain sweep grid is empty")
    if rank_by not in RANK_KEYS:
        raise ConfigError(f"rank_by must be one of {sorted(RANK_KEYS)}")
    for name, vals in (("k1", k1s), ("k2", k2s), ("k3", k3s)):
        if any(not (math.isfinite(v) and v > 0) for v in vals):
            raise ConfigError(f"sweep values for {name} must be positive")
    grid = list(itertools.product(k1s, k2s, k3s))
    cfgs = [replace(base, gains=TrackingGains(k1, k2, k3)) for k1, k2, k3 in grid]
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, cfgs))
    else:
        results = [_run_point(c) for c in cfgs]
    rows = [SweepRow(k1, k2, k3, m) for (k1, k2, k3), m in zip(grid, results)]
    key = RANK_KEYS[rank_by]
    return sorted(rows, key=lambda r: _sort_key(r, key))
