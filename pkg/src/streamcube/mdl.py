"""Encoding costs in bits: model cost, data cost and per-window deltas."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .decomposer import ComponentMatrices
from .tensor import WindowTensor

log = logging.getLogger(__name__)

LOG_STAR_C0 = 2.865064
_warned_nonpositive = False


def log_star(n: int) -> float:
    """Universal code length (Rissanen) of a positive integer, in bits."""
    global _warned_nonpositive
    if n < 1:
        if not _warned_nonpositive:
            log.warning("log_star called with %r; clamping to 1", n)
            _warned_nonpositive = True
        n = 1
    bits = math.log2(LOG_STAR_C0)
    x = math.log2(n)
    while x > 0:
        bits += x
        x = math.log2(x)
    return bits


def _log2_clamped(x: float) -> float:
    return math.log2(x) if x > 1 else 0.0


@dataclass(frozen=True)
class Dims:
    """Model dimensions the cost formulas depend on."""

    sizes: tuple[int, ...]
    tau: int
    n_components: int
    float_bits: float = 8.0

    def dimension_cost(self) -> float:
        return (sum(log_star(u) for u in self.sizes) + log_star(self.tau)
                + log_star(self.n_components))


def model_cost_regime(theta: ComponentMatrices, dims: Dims) -> float:
    """Bits to describe one regime's non-zero matrix entries."""
    k = dims.n_components
    bits = 0.0
    for m, counts in enumerate(theta.a_counts):
        nnz = int(np.count_nonzero(counts))
        u = dims.sizes[m] if m < len(dims.sizes) else counts.shape[1]
        bits += nnz * (_log2_clamped(k) + _log2_clamped(u - 1) + dims.float_bits)
        bits += log_star(max(nnz, 1))
    nnz = int(np.count_nonzero(theta.b_counts))
    bits += nnz * (_log2_clamped(dims.tau) + _log2_clamped(k - 1) + dims.float_bits)
    bits += log_star(max(nnz, 1))
    return bits


def cell_probabilities(units: np.ndarray, ticks: np.ndarray, theta: ComponentMatrices) -> np.ndarray:
    """``sum_k B[t, k] * prod_m A[m][k, u_m]`` for each cell."""
    mix = theta.B[ticks].T.copy()
    for m, (probs, floor) in enumerate(zip(theta.A, theta.unseen_floor)):
        u = units[:, m]
        inside = u < probs.shape[1]
        col = np.where(inside, u, 0)
        mix *= np.where(inside[None, :], probs[:, col], floor[:, None])
    return mix.sum(axis=0)


def data_cost(window: WindowTensor, theta: ComponentMatrices) -> float:
    """Ideal code length ``-log2 P(window | theta)``."""
    if window.total == 0:
        return 0.0
    units, ticks, counts = window.arrays()
    return float(-(counts * np.log2(cell_probabilities(units, ticks, theta))).sum())


STAY, SHIFT_EXISTING, NEW_REGIME = "stay", "shift_existing", "new_regime"
CASES = (STAY, SHIFT_EXISTING, NEW_REGIME)


def segment_cost(shift_tick: int, n_regimes: int) -> float:
    return log_star(shift_tick + 1) + _log2_clamped(n_regimes)


def delta_cost(window: WindowTensor, theta: ComponentMatrices, case: str, *,
               n_regimes: int, n_segments: int, shift_tick: int, dims: Dims,
               data_bits: float | None = None) -> float:
    """Extra bits for coding ``window`` with ``theta`` under one of three actions.

    ``data_bits`` may be passed to reuse an already computed data cost.
    """
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}")
    bits = data_cost(window, theta) if data_bits is None else data_bits
    if case == STAY:
        return bits
    g, r = n_segments, n_regimes
    bits += log_star(g + 1) - log_star(g)
    if case == SHIFT_EXISTING:
        return bits + segment_cost(shift_tick, r)
    return (bits + log_star(r + 1) - log_star(r) + model_cost_regime(theta, dims)
            + segment_cost(shift_tick, r + 1))


@dataclass
class CostBreakdown:
    dimension_bits: float = 0.0
    regime_count_bits: float = 0.0
    segment_count_bits: float = 0.0
    regime_bits: list[float] = field(default_factory=list)
    segment_bits: list[float] = field(default_factory=list)
    data_bits: float = 0.0

    @property
    def model_bits(self) -> float:
        return (self.dimension_bits + self.regime_count_bits + self.segment_count_bits
                + math.fsum(self.regime_bits) + math.fsum(self.segment_bits))

    @property
    def total_bits(self) -> float:
        return self.model_bits + self.data_bits


def model_breakdown(regimes: Sequence[ComponentMatrices], segments: Sequence[tuple[int, int]],
                    dims: Dims) -> CostBreakdown:
    r, g = len(regimes), len(segments)
    return CostBreakdown(
        dimension_bits=dims.dimension_cost(),
        regime_count_bits=log_star(r),
        segment_count_bits=log_star(g),
        regime_bits=[model_cost_regime(theta, dims) for theta in regimes],
        segment_bits=[segment_cost(t, r) for t, _ in segments],
    )


CodedWindow = Union[WindowTensor, tuple[WindowTensor, ComponentMatrices]]


def total_cost(description, windows_per_regime: Mapping[int, Sequence[CodedWindow]],
               dims: Dims) -> CostBreakdown:
    """Total encoding cost of a compact description and the data it codes.

    Each entry of ``windows_per_regime[r]`` is either a window, coded with the
    description's current parameters for regime ``r``, or a
    ``(window, theta)`` pair naming the parameters it was coded with.
    """
    by_id = {regime.id: regime for regime in description.regimes}
    for _, rid in description.segments:
        if rid not in by_id:
            raise KeyError(f"segment references unknown regime {rid}")
    for rid in windows_per_regime:
        if rid not in by_id:
            raise KeyError(f"windows assigned to unknown regime {rid}")
    out = model_breakdown([regime.theta for regime in description.regimes],
                          description.segments, dims)
    parts = []
    for rid, windows in windows_per_regime.items():
        for item in windows:
            window, theta = item if isinstance(item, tuple) else (item, by_id[rid].theta)
            parts.append(data_cost(window, theta))
    out.data_bits = math.fsum(parts)
    return out
