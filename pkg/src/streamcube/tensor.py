"""Events, vocabularies and sparse windowed count tensors."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

log = logging.getLogger(__name__)


class Vocabulary:
    """Per-attribute, append-only mapping between labels and dense unit indices."""

    def __init__(self, n_attrs: int, names: Sequence[str] | None = None):
        if n_attrs < 1:
            raise ValueError("need at least one attribute")
        self.names = list(names) if names is not None else [f"attr_{m}" for m in range(n_attrs)]
        if len(self.names) != n_attrs:
            raise ValueError("one name per attribute")
        self._index: list[dict[str, int]] = [{} for _ in range(n_attrs)]
        self._labels: list[list[str]] = [[] for _ in range(n_attrs)]

    @property
    def n_attrs(self) -> int:
        return len(self._labels)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(labels) for labels in self._labels)

    def encode(self, attr: int, label: str) -> int:
        if not 0 <= attr < self.n_attrs:
            raise IndexError(f"attribute {attr} out of range for {self.n_attrs} attributes")
        index = self._index[attr]
        unit = index.get(label)
        if unit is None:
            unit = len(self._labels[attr])
            index[label] = unit
            self._labels[attr].append(label)
        return unit

    def decode(self, attr: int, unit: int) -> str:
        return self._labels[attr][unit]

    def labels(self, attr: int) -> list[str]:
        return list(self._labels[attr])

    def to_dict(self) -> dict[str, list[str]]:
        return {name: list(labels) for name, labels in zip(self.names, self._labels)}

    @classmethod
    def from_dict(cls, data: dict[str, list[str]]) -> "Vocabulary":
        vocab = cls(len(data), list(data))
        for m, labels in enumerate(data.values()):
            for label in labels:
                vocab.encode(m, label)
        return vocab

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class EventRecord:
    tick: int
    units: tuple[int, ...]
    count: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"event count must be positive, got {self.count}")
        if self.tick < 0:
            raise ValueError(f"tick must be non-negative, got {self.tick}")


class WindowTensor:
    """Sparse count tensor over (u_1, ..., u_M, t_local) for ticks [start, start + width)."""

    def __init__(self, start: int, width: int, n_attrs: int):
        if width < 1:
            raise ValueError("window width must be >= 1")
        self.start = start
        self.width = width
        self.n_attrs = n_attrs
        self.cells: dict[tuple[int, ...], int] = {}
        self._total = 0

    @property
    def end(self) -> int:
        return self.start + self.width

    @property
    def total(self) -> int:
        return self._total

    def __len__(self) -> int:
        return len(self.cells)

    def append(self, event: EventRecord) -> "WindowTensor":
        if not self.start <= event.tick < self.end:
            raise ValueError(
                f"tick {event.tick} outside window [{self.start}, {self.end})"
            )
        if len(event.units) != self.n_attrs:
            raise ValueError(f"expected {self.n_attrs} units, got {len(event.units)}")
        key = (*event.units, event.tick - self.start)
        self.cells[key] = self.cells.get(key, 0) + event.count
        self._total += event.count
        return self

    def extend(self, events: Iterable[EventRecord]) -> "WindowTensor":
        for event in events:
            self.append(event)
        return self

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cells in canonical order (tick, units): ``(units[n, M], ticks[n], counts[n])``."""
        if not self.cells:
            return (np.zeros((0, self.n_attrs), dtype=np.int64),
                    np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
        keys = sorted(self.cells, key=lambda key: (key[-1], key[:-1]))
        flat = np.array(keys, dtype=np.int64)
        counts = np.array([self.cells[key] for key in keys], dtype=np.int64)
        return flat[:, :-1].copy(), flat[:, -1].copy(), counts

    def max_units(self) -> tuple[int, ...]:
        """Per-attribute 1 + largest unit index present (0 when empty)."""
        if not self.cells:
            return (0,) * self.n_attrs
        keys = np.array(list(self.cells), dtype=np.int64)
        return tuple(int(v) + 1 for v in keys[:, :-1].max(axis=0))

    def to_dict(self) -> dict:
        return {"start": self.start, "width": self.width, "n_attrs": self.n_attrs,
                "cells": [[*key, count] for key, count in self.cells.items()]}

    @classmethod
    def from_dict(cls, data: dict) -> "WindowTensor":
        window = cls(data["start"], data["width"], data["n_attrs"])
        for *key, count in data["cells"]:
            window.cells[tuple(key)] = count
            window._total += count
        return window


def window_event_total(window: WindowTensor) -> int:
    return window.total


@dataclass
class StreamConfig:
    """Run parameters.

    ``queue_len=None`` means the queue length L is estimated during
    initialization from the average warm-up run length. ``alpha`` and
    ``beta`` default to ``1 / n_components``.
    """

    tau: int = 10
    n_components: int = 8
    queue_len: int | None = None
    alpha: float | None = None
    beta: float | None = None
    n_iter: int = 10
    float_bits: float = 8.0
    seed: int = 0
    init_windows: int = 5

    def __post_init__(self):
        if self.alpha is None:
            self.alpha = 1.0 / self.n_components if self.n_components > 0 else 1.0
        if self.beta is None:
            self.beta = 1.0 / self.n_components if self.n_components > 0 else 1.0
        if self.queue_len == 0:
            self.queue_len = None
        problems = []
        if self.tau < 1:
            problems.append("tau must be >= 1")
        if self.n_components < 1:
            problems.append("n_components must be >= 1")
        if self.queue_len is not None and self.queue_len < 1:
            problems.append("queue_len must be >= 1")
        if self.n_iter < 1:
            problems.append("n_iter must be >= 1")
        if self.alpha <= 0 or self.beta <= 0:
            problems.append("alpha and beta must be > 0")
        if self.float_bits <= 0:
            problems.append("float_bits must be > 0")
        if self.init_windows < 1:
            problems.append("init_windows must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))

    def to_dict(self) -> dict:
        return asdict(self)


class MalformedRow(ValueError):
    def __init__(self, row_number: int, message: str):
        super().__init__(f"row {row_number}: {message}")
        self.row_number = row_number


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


@dataclass
class EventReader:
    """Parse delimited ``tick,attr_1,...,attr_M[,count]`` rows into encoded events.

    A header is detected when the first field of the first row is not an
    integer; a header column named ``count`` marks the multiplicity column.
    Without a header, ``n_attrs`` decides whether a trailing count column is
    present (all columns after the tick are attributes when it is None).
    """

    vocab: Vocabulary | None = None
    n_attrs: int | None = None
    delimiter: str = ","
    tick_size: int = 1
    header: list[str] | None = field(default=None, init=False)

    def read(self, path: str | Path) -> Iterator[EventRecord]:
        with open(path, newline="") as fh:
            yield from self.parse(fh)

    def parse(self, lines: Iterable[str]) -> Iterator[EventRecord]:
        has_count = None
        for row_number, row in enumerate(csv.reader(lines, delimiter=self.delimiter), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            row = [cell.strip() for cell in row]
            if has_count is None:
                if not _is_int(row[0]):
                    self.header = row
                    has_count = row[-1].lower() == "count"
                    names = row[1:-1] if has_count else row[1:]
                    self._ensure_vocab(len(names), names)
                    continue
                n_attrs = self.n_attrs if self.n_attrs is not None else len(row) - 1
                has_count = len(row) == n_attrs + 2
                self._ensure_vocab(n_attrs, None)
            yield self._event(row_number, row, has_count)

    def _ensure_vocab(self, n_attrs: int, names):
        if n_attrs < 1:
            raise MalformedRow(1, "no attribute columns")
        if self.vocab is None:
            self.vocab = Vocabulary(n_attrs, names)
        elif self.vocab.n_attrs != n_attrs:
            raise MalformedRow(1, f"expected {self.vocab.n_attrs} attributes, found {n_attrs}")

    def _event(self, row_number: int, row: list[str], has_count: bool) -> EventRecord:
        m = self.vocab.n_attrs
        expected = m + 2 if has_count else m + 1
        if len(row) != expected:
            raise MalformedRow(row_number, f"expected {expected} fields, got {len(row)}")
        try:
            tick = int(row[0]) // self.tick_size
            count = int(row[-1]) if has_count else 1
        except ValueError as exc:
            raise MalformedRow(row_number, str(exc)) from None
        if tick < 0 or count < 1:
            raise MalformedRow(row_number, "tick must be >= 0 and count >= 1")
        labels = row[1:m + 1]
        units = tuple(self.vocab.encode(a, label) for a, label in enumerate(labels))
        return EventRecord(tick, units, count)
