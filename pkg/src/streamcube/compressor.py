"""Regime selection, online regime updates and compression-based anomaly scores."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .decomposer import ComponentMatrices
from .mdl import NEW_REGIME, SHIFT_EXISTING, STAY, Dims, data_cost, delta_cost
from .tensor import WindowTensor


@dataclass
class Regime:
    id: int
    theta: ComponentMatrices
    length: int = 0
    created: int = 0

    def to_dict(self) -> dict:
        return {"id": self.id, "created": self.created, "length": self.length,
                **self.theta.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "Regime":
        return cls(data["id"], ComponentMatrices.from_dict(data), data["length"], data["created"])


@dataclass
class CompactDescription:
    regimes: list[Regime] = field(default_factory=list)
    segments: list[tuple[int, int]] = field(default_factory=list)
    previous: int | None = None

    @property
    def n_regimes(self) -> int:
        return len(self.regimes)

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def regime(self, rid: int) -> Regime:
        regime = self.regimes[rid]
        assert regime.id == rid
        return regime

    def norm(self) -> Regime:
        """Regime with the largest total segment length (lowest id on ties)."""
        return max(self.regimes, key=lambda r: (r.length, -r.id))

    def add_regime(self, theta: ComponentMatrices, created: int) -> Regime:
        regime = Regime(len(self.regimes), theta, 0, created)
        self.regimes.append(regime)
        return regime

    def to_dict(self) -> dict:
        return {"regimes": [r.to_dict() for r in self.regimes],
                "segments": [list(s) for s in self.segments],
                "previous": self.previous}

    @classmethod
    def from_dict(cls, data: dict) -> "CompactDescription":
        return cls([Regime.from_dict(r) for r in data["regimes"]],
                   [tuple(s) for s in data["segments"]], data["previous"])


@dataclass
class WindowVerdict:
    window_start: int
    action: str
    regime_id: int
    cost_stay: float | None = None
    cost_existing: float | None = None
    cost_new: float | None = None
    score_bits: float = 0.0
    score_bits_per_event: float = 0.0
    n_events: int = 0
    data_bits: float = 0.0

    CSV_FIELDS = ("window_start", "action", "regime_id", "cost_stay", "cost_existing",
                  "cost_new", "score_bits", "score_bits_per_event", "n_events")

    def csv_row(self) -> list[str]:
        def fmt(value):
            if value is None:
                return ""
            return repr(float(value)) if isinstance(value, float) else str(value)
        return [fmt(getattr(self, name)) for name in self.CSV_FIELDS]


def regime_update(existing: ComponentMatrices, candidate: ComponentMatrices) -> ComponentMatrices:
    """Absorb a candidate's evidence counts into an existing regime.

    The existing regime keeps its own prior pseudo-counts; components are
    matched by index.
    """
    if existing.n_components != candidate.n_components:
        raise ValueError("component counts differ")
    if existing.tau != candidate.tau:
        raise ValueError("window widths differ")
    sizes = tuple(max(a, b) for a, b in zip(existing.sizes, candidate.sizes))
    existing = existing.widened(sizes)
    candidate = candidate.widened(sizes)
    return ComponentMatrices(
        a_counts=tuple(a + c for a, c in zip(existing.a_counts, candidate.a_counts)),
        b_counts=existing.b_counts + candidate.b_counts,
        a_prior=existing.a_prior,
        b_prior=existing.b_prior,
        alpha=existing.alpha,
        beta=existing.beta,
        n_events=existing.n_events + candidate.n_events,
    )


def anomaly_score(window: WindowTensor, description: CompactDescription) -> tuple[float, float]:
    """Data cost of ``window`` under the norm regime: ``(bits, bits per event)``."""
    if not description.regimes:
        raise ValueError("no regimes yet")
    bits = data_cost(window, description.norm().theta)
    return bits, bits / max(window.total, 1)


def select_and_update(theta_c: ComponentMatrices, window: WindowTensor,
                      description: CompactDescription, dims: Dims
                      ) -> tuple[CompactDescription, WindowVerdict]:
    """Stay, shift to an existing regime, or add ``theta_c`` as a new regime.

    Mutates and returns ``description``. Ties prefer stay, then existing.
    """
    if description.previous is None:
        raise ValueError("description has no active regime")
    t_s = window.start
    r, g = description.n_regimes, description.n_segments
    prev = description.regime(description.previous)
    costs = dict(n_regimes=r, n_segments=g, shift_tick=t_s, dims=dims)

    data_new = data_cost(window, theta_c)
    cost_new = delta_cost(window, theta_c, NEW_REGIME, data_bits=data_new, **costs)
    cost_stay = data_cost(window, prev.theta)
    verdict = WindowVerdict(t_s, STAY, prev.id, cost_stay=cost_stay, cost_new=cost_new,
                            n_events=window.total, data_bits=cost_stay)

    if cost_stay <= cost_new:
        prev.theta = regime_update(prev.theta, theta_c)
        prev.length += window.width
        return description, verdict

    best, best_cost, best_data = None, math.inf, 0.0
    for regime in description.regimes:
        bits = data_cost(window, regime.theta)
        cost = delta_cost(window, regime.theta, SHIFT_EXISTING, data_bits=bits, **costs)
        if cost < best_cost:
            best, best_cost, best_data = regime, cost, bits
    verdict.cost_existing = best_cost

    if best_cost <= cost_new:
        best.theta = regime_update(best.theta, theta_c)
        chosen = best
        verdict.action, verdict.data_bits = SHIFT_EXISTING, best_data
    else:
        chosen = description.add_regime(theta_c, t_s)
        verdict.action, verdict.data_bits = NEW_REGIME, data_new
    chosen.length += window.width
    description.segments.append((t_s, chosen.id))
    description.previous = chosen.id
    verdict.regime_id = chosen.id
    return description, verdict
