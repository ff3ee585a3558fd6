"""Streaming summarization of sparse event tensor streams into regimes and components."""

__version__ = "0.1.0"

from .tensor import EventRecord, EventReader, StreamConfig, Vocabulary, WindowTensor  # noqa: E402
from .decomposer import ComponentMatrices, PastQueue, decompose  # noqa: E402
from .mdl import Dims, data_cost, delta_cost, log_star, model_cost_regime, total_cost  # noqa: E402
from .compressor import (CompactDescription, Regime, WindowVerdict, anomaly_score,  # noqa: E402
                         regime_update, select_and_update)
from .engine import Engine, SnapshotError  # noqa: E402

__all__ = [
    "EventRecord", "EventReader", "StreamConfig", "Vocabulary", "WindowTensor",
    "ComponentMatrices", "PastQueue", "decompose",
    "Dims", "data_cost", "delta_cost", "log_star", "model_cost_regime", "total_cost",
    "CompactDescription", "Regime", "WindowVerdict", "anomaly_score", "regime_update",
    "select_and_update", "Engine", "SnapshotError",
]
