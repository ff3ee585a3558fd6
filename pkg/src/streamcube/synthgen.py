"""Synthetic event streams with known regime (and anomaly) labels.

Each tensor type draws every attribute of an event independently from its
own multinomial, whose parameters come from a Dirichlet with concentrations
uniform in ``[0.1, 0.5]``. A pattern such as ``"1,2,1"`` lays phases of equal
tick length end to end.
"""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensor import EventRecord

ANOMALY = "anomaly"
SWITCH_PATTERNS = ("1,2,1", "1,2,3,2,1", "1,2,3,4,1,2,3,4", "1,2,2,1,3,3,3,1")


@dataclass
class AnomalySpec:
    """Blocks of ``width`` ticks whose events come from a held-out tensor type.

    Either explicit block ``positions`` (start ticks) or a ``rate`` (fraction
    of aligned blocks after the first ``skip_head`` ticks).
    """

    rate: float = 0.05
    width: int = 10
    positions: tuple[int, ...] | None = None
    skip_head: int = 0
    type_id: str = ANOMALY


@dataclass
class GeneratorSpec:
    dims: tuple[int, ...] = (100, 100, 100, 100)
    n_events: int = 100_000
    pattern: str = "1,2,1"
    ticks_per_phase: int = 100
    seed: int = 0
    concentration: tuple[float, float] = (0.1, 0.5)
    anomaly: AnomalySpec | None = None
    phase_types: list[str] = field(init=False)

    def __post_init__(self):
        self.phase_types = parse_pattern(self.pattern)
        if self.n_events < 0 or self.ticks_per_phase < 1:
            raise ValueError("n_events must be >= 0 and ticks_per_phase >= 1")
        if any(d < 1 for d in self.dims):
            raise ValueError("attribute sizes must be >= 1")

    @property
    def n_ticks(self) -> int:
        return self.ticks_per_phase * len(self.phase_types)


def parse_pattern(pattern: str | Sequence[str]) -> list[str]:
    parts = pattern.split(",") if isinstance(pattern, str) else list(pattern)
    parts = [str(p).strip() for p in parts]
    if not parts or any(not p for p in parts):
        raise ValueError(f"invalid pattern {pattern!r}")
    if ANOMALY in parts:
        raise ValueError(f"{ANOMALY!r} is reserved for injected anomalies")
    return parts


def desk_preset(pattern: str = "1,2,1", seed: int = 0, **overrides) -> GeneratorSpec:
    """Small 20x20x20 configuration with 10K events for quick runs."""
    kwargs = dict(dims=(20, 20, 20), n_events=10_000, pattern=pattern,
                  ticks_per_phase=30, seed=seed)
    kwargs.update(overrides)
    return GeneratorSpec(**kwargs)


def _type_rng(spec: GeneratorSpec, type_id: str) -> np.random.Generator:
    key = zlib.crc32(type_id.encode())
    return np.random.default_rng(np.random.SeedSequence([spec.seed, key]))


def gen_tensor_type(spec: GeneratorSpec, type_id: str,
                    rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Per-attribute unit distributions for one tensor type."""
    rng = _type_rng(spec, type_id) if rng is None else rng
    lo, hi = spec.concentration
    out = []
    for size in spec.dims:
        p = rng.dirichlet(rng.uniform(lo, hi, size=size))
        out.append(p / p.sum())
    return out


def anomaly_ticks(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    an = spec.anomaly
    if an is None:
        return np.zeros(0, dtype=np.int64)
    if an.positions is not None:
        starts = np.asarray(an.positions, dtype=np.int64)
    else:
        first = -(-an.skip_head // an.width)
        blocks = np.arange(first, spec.n_ticks // an.width)
        n = max(1, round(an.rate * len(blocks))) if an.rate > 0 and len(blocks) else 0
        starts = np.sort(rng.choice(blocks, size=n, replace=False)) * an.width
    ticks = (starts[:, None] + np.arange(an.width)[None, :]).ravel()
    return ticks[ticks < spec.n_ticks]


def _draw_units(params: list[np.ndarray], n: int, rng: np.random.Generator) -> np.ndarray:
    return np.column_stack([rng.choice(len(p), size=n, p=p) for p in params]) \
        if n else np.zeros((0, len(params)), dtype=np.int64)


def gen_stream(spec: GeneratorSpec) -> tuple[list[EventRecord], list[str]]:
    """Events in tick order and one ground-truth label per tick."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    types = {t: gen_tensor_type(spec, t) for t in dict.fromkeys(spec.phase_types)}
    n_phases = len(spec.phase_types)
    per_phase = np.full(n_phases, spec.n_events // n_phases)
    per_phase[: spec.n_events % n_phases] += 1

    ticks_all, units_all = [], []
    for phase, (type_id, n) in enumerate(zip(spec.phase_types, per_phase)):
        lo = phase * spec.ticks_per_phase
        ticks_all.append(rng.integers(lo, lo + spec.ticks_per_phase, size=n))
        units_all.append(_draw_units(types[type_id], int(n), rng))
    ticks = np.concatenate(ticks_all) if ticks_all else np.zeros(0, dtype=np.int64)
    units = np.concatenate(units_all) if units_all else np.zeros((0, len(spec.dims)), dtype=np.int64)

    labels = [t for t in spec.phase_types for _ in range(spec.ticks_per_phase)]
    bad = anomaly_ticks(spec, rng)
    if len(bad):
        params = gen_tensor_type(spec, spec.anomaly.type_id)
        mask = np.isin(ticks, bad)
        units[mask] = _draw_units(params, int(mask.sum()), rng)
        for t in bad:
            labels[t] = ANOMALY

    order = np.argsort(ticks, kind="stable")
    events = [EventRecord(int(t), tuple(int(u) for u in row))
              for t, row in zip(ticks[order], units[order])]
    return events, labels


def window_labels(tick_labels: Sequence[str], tau: int, start: int = 0) -> list[str]:
    """Majority tick label per window; a window touching an anomaly is ``anomaly``."""
    out = []
    for lo in range(start, len(tick_labels), tau):
        chunk = list(tick_labels[lo:lo + tau])
        if ANOMALY in chunk:
            out.append(ANOMALY)
        else:
            out.append(max(dict.fromkeys(chunk), key=chunk.count))
    return out


def write_events(path: str | Path, events: Sequence[EventRecord], n_attrs: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", *(f"attr_{m}" for m in range(n_attrs))])
        for event in events:
            writer.writerow([event.tick, *event.units])


def write_labels(path: str | Path, labels: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "label"])
        writer.writerows(enumerate(labels))
