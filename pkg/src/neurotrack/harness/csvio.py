"""CSV output for simulation logs and sweep tables."""

from __future__ import annotations

import io
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .experiments import SweepRow
from .runner import COLUMNS, SimLog

__all__ = ["CsvWriteError", "format_csv", "emit_csv", "read_csv", "sweep_csv"]


class CsvWriteError(OSError):
    pass


def _fmt(x: float) -> str:
    # adding 0.0 folds -0.0 into 0.0
    return format(float(x) + 0.0, ".9g")


def _lines(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header))
    buf.write("\n")
    for row in rows:
        buf.write(",".join(row))
        buf.write("\n")
    return buf.getvalue()


def format_csv(log: SimLog) -> str:
    if len(log) == 0:
        raise ValueError("refusing to write an empty log")
    return _lines(COLUMNS, ([_fmt(v) for v in row] for row in log.data))


def _write(text: str, destination: str | Path | IO[str]) -> bytes:
    data = text.encode("ascii")
    if hasattr(destination, "write"):
        destination.write(text)
        return data
    path = Path(destination)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise CsvWriteError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc
    return data


def emit_csv(log: SimLog, destination: str | Path | IO[str]) -> bytes:
    """Write the log to a path or text stream; returns the bytes written."""
    return _write(format_csv(log), destination)


def read_csv(source: str | Path | IO[str]) -> tuple[list[str], np.ndarray]:
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    lines = text.rstrip("\n").split("\n")
    header = lines[0].split(",")
    data = np.array([[float(tok) if tok else np.nan for tok in ln.split(",")] for ln in lines[1:]])
    return header, data.reshape(len(lines) - 1, len(header))


SWEEP_COLUMNS = (
    "rank", "k1", "k2", "k3", "settling_time", "settling_time_ex", "final_ep_norm",
    "rms_ec", "sup_ec_after_transient", "lyapunov_increases",
)


def _opt(x) -> str:
    return "" if x is None else _fmt(x)


def sweep_csv(rows: Sequence[SweepRow], destination: str | Path | IO[str]) -> bytes:
    """Ranked sweep table; a never-settling run has an empty settling cell."""
    body = (
        [
            str(i),
            _fmt(r.k1),
            _fmt(r.k2),
            _fmt(r.k3),
            _opt(r.metrics.settling_time),
            _opt(r.metrics.settling_time_ex),
            _fmt(r.metrics.final_ep_norm),
            _fmt(r.metrics.rms_ec),
            _fmt(r.metrics.sup_ec_after_transient),
            str(r.metrics.lyapunov_increases),
        ]
        for i, r in enumerate(rows, start=1)
    )
    return _write(_lines(SWEEP_COLUMNS, body), destination)
