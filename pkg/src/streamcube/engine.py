"""Streaming main loop: windowing, warm-up initialization and snapshots."""

from __future__ import annotations

import json
import logging
import math
import zlib
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .compressor import (CompactDescription, WindowVerdict, anomaly_score, regime_update,
                         select_and_update)
from .decomposer import ComponentMatrices, PastQueue, decompose
from .mdl import (STAY, CostBreakdown, Dims, data_cost, log_star, model_breakdown,
                  model_cost_regime, segment_cost)
from .tensor import EventRecord, StreamConfig, Vocabulary, WindowTensor

log = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"STREAMCUBE-SNAPSHOT\n"
SNAPSHOT_VERSION = 1
INIT = "init"


class SnapshotError(ValueError):
    pass


def _runs(labels: Sequence[int]) -> list[tuple[int, int]]:
    """``(first index, label)`` for each maximal run of equal labels."""
    return [(i, lab) for i, lab in enumerate(labels) if i == 0 or labels[i - 1] != lab]


def _warmup_cost(selected: list[int], costs: np.ndarray, model_bits: list[float],
                 starts: list[int], dims: Dims) -> tuple[float, list[int]]:
    """Total cost of coding the warm-up windows with the candidate subset ``selected``."""
    assign: list[int] = []
    for j in range(costs.shape[1]):
        col = costs[selected, j]
        best = [selected[i] for i in np.flatnonzero(col == col.min())]
        if assign and assign[-1] in best:
            assign.append(assign[-1])
        else:
            assign.append(best[0])
    runs = _runs(assign)
    r = len(selected)
    bits = (dims.dimension_cost() + log_star(r) + log_star(len(runs))
            + math.fsum(model_bits[i] for i in selected)
            + math.fsum(segment_cost(starts[j], r) for j, _ in runs)
            + math.fsum(costs[assign[j], j] for j in range(len(assign))))
    return bits, assign


class Engine:
    """Stream events in tick order; one :class:`WindowVerdict` per window.

    The first ``config.init_windows`` windows are buffered and used to
    initialize the regime set; afterwards each window is decomposed and
    handed to the compressor as soon as it closes.
    """

    def __init__(self, config: StreamConfig, vocab: Vocabulary | None = None):
        self.config = config
        self.vocab = vocab
        self.rng = np.random.default_rng(config.seed)
        self.queue: PastQueue | None = None
        self.description = CompactDescription()
        self.queue_len: int | None = config.queue_len
        self.window: WindowTensor | None = None
        self.warmup: list[WindowTensor] = []
        self.n_windows = 0
        self.late_events = 0
        self.data_bits = 0.0
        self._seen: list[int] = []
        self._last_start: int | None = None

    # -- bookkeeping --------------------------------------------------------

    @property
    def initialized(self) -> bool:
        return self.queue is not None

    @property
    def sizes(self) -> tuple[int, ...]:
        known = list(self.vocab.sizes) if self.vocab is not None else []
        n = max(len(known), len(self._seen))
        known += [0] * (n - len(known))
        seen = self._seen + [0] * (n - len(self._seen))
        return tuple(max(a, b) for a, b in zip(known, seen))

    def dims(self) -> Dims:
        return Dims(self.sizes, self.config.tau, self.config.n_components,
                    self.config.float_bits)

    def cost(self) -> CostBreakdown:
        """Running total encoding cost of everything processed so far."""
        d = self.description
        out = model_breakdown([r.theta for r in d.regimes], d.segments, self.dims())
        out.data_bits = self.data_bits
        return out

    def _note_units(self, units: Sequence[int]) -> None:
        if len(self._seen) < len(units):
            self._seen += [0] * (len(units) - len(self._seen))
        for m, u in enumerate(units):
            if u >= self._seen[m]:
                self._seen[m] = u + 1

    # -- streaming ----------------------------------------------------------

    def feed(self, events: Iterable[EventRecord]) -> list[WindowVerdict]:
        verdicts: list[WindowVerdict] = []
        tau = self.config.tau
        for event in events:
            if self.window is None:
                start = event.tick - event.tick % tau
                self.window = WindowTensor(start, tau, len(event.units))
            if event.tick < self.window.start:
                self.late_events += 1
                continue
            while event.tick >= self.window.end:
                verdicts += self._close_window()
            self._note_units(event.units)
            self.window.append(event)
        return verdicts

    def flush(self) -> list[WindowVerdict]:
        """Close the open window and initialize on a short warm-up if needed."""
        verdicts: list[WindowVerdict] = []
        if self.window is not None and self.window.total > 0:
            verdicts += self._close_window()
        if not self.initialized and self.warmup:
            verdicts += self.initialize(self.warmup)
            self.warmup = []
        return verdicts

    def _close_window(self) -> list[WindowVerdict]:
        done = self.window
        self.window = WindowTensor(done.end, done.width, done.n_attrs)
        if self.initialized:
            return [self.process_window(done)]
        self.warmup.append(done)
        if len(self.warmup) >= self.config.init_windows:
            verdicts = self.initialize(self.warmup)
            self.warmup = []
            return verdicts
        return []

    # -- algorithm ----------------------------------------------------------

    def initialize(self, windows: Sequence[WindowTensor]) -> list[WindowVerdict]:
        """Pick the warm-up regime set by greedy forward selection on total cost."""
        if not windows:
            raise ValueError("warm-up needs at least one window")
        cfg = self.config
        for w in windows:
            self._note_units(w.max_units())
        sizes, dims = self.sizes, self.dims()
        alpha = (float(cfg.alpha),) * len(sizes)
        cold = PastQueue.filled(
            ComponentMatrices.uniform(sizes, cfg.tau, cfg.n_components, alpha, cfg.beta),
            self.queue_len or 1)
        candidates = [decompose(w, cold, cfg, self.rng, sizes)[0] for w in windows]
        costs = np.array([[data_cost(w, theta) for w in windows] for theta in candidates])
        model_bits = [model_cost_regime(theta, dims) for theta in candidates]
        starts = [w.start for w in windows]

        selected: list[int] = []
        current = math.inf
        while len(selected) < len(candidates):
            trials = [(_warmup_cost(selected + [i], costs, model_bits, starts, dims)[0], i)
                      for i in range(len(candidates)) if i not in selected]
            bits, best = min(trials)
            if bits >= current:
                break
            selected.append(best)
            current = bits
        _, assign = _warmup_cost(selected, costs, model_bits, starts, dims)

        # regime ids in order of first use
        ids: dict[int, int] = {}
        for j, cand in enumerate(assign):
            if cand not in ids:
                ids[cand] = self.description.add_regime(candidates[cand], starts[j]).id
        for j, cand in enumerate(assign):
            regime = self.description.regime(ids[cand])
            if j != cand:
                regime.theta = regime_update(regime.theta, candidates[j])
            regime.length += windows[j].width
        runs = _runs([ids[c] for c in assign])
        self.description.segments.extend((starts[j], rid) for j, rid in runs)
        last = self.description.regime(ids[assign[-1]])
        self.description.previous = last.id

        if self.queue_len is None:
            self.queue_len = max(1, round(len(windows) / len(runs)))
        self.queue = PastQueue.filled(last.theta, self.queue_len)
        self.n_windows += len(windows)
        self._last_start = windows[-1].start

        verdicts = []
        for w, cand in zip(windows, assign):
            regime = self.description.regime(ids[cand])
            bits = data_cost(w, regime.theta)
            self.data_bits += bits
            score, per_event = anomaly_score(w, self.description)
            verdicts.append(WindowVerdict(w.start, INIT, regime.id, score_bits=score,
                                          score_bits_per_event=per_event,
                                          n_events=w.total, data_bits=bits))
        log.info("initialized: %d regimes, %d segments, L=%d", len(ids), len(runs),
                 self.queue_len)
        return verdicts

    def process_window(self, window: WindowTensor) -> WindowVerdict:
        if not self.initialized:
            raise RuntimeError("engine not initialized")
        if self._last_start is not None and window.start != self._last_start + self.config.tau:
            raise ValueError(f"out-of-order window: got start {window.start}, "
                             f"expected {self._last_start + self.config.tau}")
        self._last_start = window.start
        self.n_windows += 1
        self._note_units(window.max_units())
        desc = self.description
        if window.total == 0:
            prev = desc.regime(desc.previous)
            prev.length += window.width
            return WindowVerdict(window.start, STAY, prev.id, cost_stay=0.0)
        theta_c, self.queue = decompose(window, self.queue, self.config, self.rng, self.sizes)
        score, per_event = anomaly_score(window, desc)
        _, verdict = select_and_update(theta_c, window, desc, self.dims())
        verdict.score_bits, verdict.score_bits_per_event = score, per_event
        self.data_bits += verdict.data_bits
        return verdict

    def run(self, events: Iterable[EventRecord]) -> list[WindowVerdict]:
        return self.feed(events) + self.flush()

    # -- persistence --------------------------------------------------------

    def snapshot(self) -> bytes:
        state = {
            "software": __version__,
            "config": self.config.to_dict(),
            "queue_len": self.queue_len,
            "vocab": self.vocab.to_dict() if self.vocab is not None else None,
            "seen": self._seen,
            "rng": self.rng.bit_generator.state,
            "queue": [theta.to_dict() for theta in self.queue.items] if self.queue else None,
            "description": self.description.to_dict(),
            "window": self.window.to_dict() if self.window is not None else None,
            "warmup": [w.to_dict() for w in self.warmup],
            "n_windows": self.n_windows,
            "late_events": self.late_events,
            "data_bits": self.data_bits,
            "last_start": self._last_start,
        }
        payload = zlib.compress(json.dumps(state).encode())
        return SNAPSHOT_MAGIC + f"{SNAPSHOT_VERSION}\n".encode() + payload

    @classmethod
    def restore(cls, blob: bytes) -> "Engine":
        if not blob.startswith(SNAPSHOT_MAGIC):
            raise SnapshotError("not a snapshot (bad magic header)")
        rest = blob[len(SNAPSHOT_MAGIC):]
        line, _, payload = rest.partition(b"\n")
        try:
            version = int(line)
        except ValueError:
            raise SnapshotError("corrupt snapshot header") from None
        if version != SNAPSHOT_VERSION:
            raise SnapshotError(f"snapshot version {version} unsupported "
                                f"(expected {SNAPSHOT_VERSION})")
        try:
            state = json.loads(zlib.decompress(payload))
        except (zlib.error, ValueError) as exc:
            raise SnapshotError(f"corrupt snapshot payload: {exc}") from None
        cfg = StreamConfig(**state["config"])
        vocab = Vocabulary.from_dict(state["vocab"]) if state["vocab"] is not None else None
        engine = cls(cfg, vocab)
        engine.queue_len = state["queue_len"]
        engine._seen = list(state["seen"])
        engine.rng.bit_generator.state = state["rng"]
        if state["queue"] is not None:
            engine.queue = PastQueue(engine.queue_len,
                                     [ComponentMatrices.from_dict(t) for t in state["queue"]])
        engine.description = CompactDescription.from_dict(state["description"])
        if state["window"] is not None:
            engine.window = WindowTensor.from_dict(state["window"])
        engine.warmup = [WindowTensor.from_dict(w) for w in state["warmup"]]
        engine.n_windows = state["n_windows"]
        engine.late_events = state["late_events"]
        engine.data_bits = state["data_bits"]
        engine._last_start = state["last_start"]
        return engine
