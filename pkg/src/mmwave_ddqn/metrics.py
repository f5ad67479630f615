"""Per-(step, BS) training records and their CSV form."""

from __future__ import annotations

import csv
import dataclasses
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

HEADER = [
    "episode", "step", "bs_id", "action", "reward", "r_omni", "r_beam",
    "sum_ddqn", "sum_exhaustive", "sum_random", "epsilon", "loss",
]
_INT_FIELDS = {"episode", "step", "bs_id", "action"}


@dataclass
class StepRecord:
    episode: int
    step: int
    bs_id: int
    action: int
    reward: float
    r_omni: float
    r_beam: float
    sum_ddqn: float
    sum_exhaustive: float
    sum_random: float
    epsilon: float
    loss: float | None = None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.6g}"


def format_row(rec: StepRecord) -> list[str]:
    return [_fmt(getattr(rec, name)) for name in HEADER]


class MetricsWriter:
    """Streams records to ``metrics.csv`` (UTF-8, LF line endings)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="utf-8", newline="")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(HEADER)
        self.count = 0

    def write(self, rec: StepRecord) -> None:
        self._csv.writerow(format_row(rec))
        self.count += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def emit_metrics(records: Iterable[StepRecord], path: str | Path) -> int:
    with MetricsWriter(path) as w:
        for rec in records:
            w.write(rec)
        return w.count


def _parse(name: str, text: str):
    if name in _INT_FIELDS:
        return int(text)
    if text == "":
        return None
    return float(text)


def read_metrics(path: str | Path) -> list[StepRecord]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != HEADER:
        raise ValueError(f"unexpected metrics header: {header}")
    return [StepRecord(**{k: _parse(k, v) for k, v in zip(HEADER, row)}) for row in reader]


def rounded(rec: StepRecord) -> StepRecord:
    """The record as it reads back from CSV (floats at 6 significant digits)."""
    return StepRecord(**{k: _parse(k, _fmt(v)) for k, v in dataclasses.asdict(rec).items()})
