"""Clustering, anomaly-detection and modelling metrics plus artifact readers."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np
from scipy.stats import rankdata

from .decomposer import ComponentMatrices
from .mdl import data_cost
from .tensor import WindowTensor


def confusion_matrix(pred: Sequence[Hashable], truth: Sequence[Hashable]
                     ) -> tuple[np.ndarray, list, list]:
    """Counts with rows = predicted labels, columns = true labels."""
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} predictions, {len(truth)} labels")
    if not pred:
        raise ValueError("empty input")
    rows = list(dict.fromkeys(pred))
    cols = list(dict.fromkeys(truth))
    ri = {v: i for i, v in enumerate(rows)}
    ci = {v: i for i, v in enumerate(cols)}
    cm = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for p, t in zip(pred, truth):
        cm[ri[p], ci[t]] += 1
    return cm, rows, cols


def conditional_entropy(pred: Sequence[Hashable], truth: Sequence[Hashable]) -> float:
    """Entropy of the true label given the predicted one, in bits."""
    cm, _, _ = confusion_matrix(pred, truth)
    total = cm.sum()
    row_tot = cm.sum(axis=1, keepdims=True)
    nz = cm > 0
    terms = (cm / total)[nz] * np.log2((cm / row_tot)[nz])
    return float(max(0.0, -terms.sum()))


def roc_auc(scores: Sequence[float], labels: Sequence[int | bool]) -> float:
    """Area under the ROC curve via the rank-sum statistic (ties averaged)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one positive and one negative label")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def window_nll(window: WindowTensor, theta: ComponentMatrices) -> float:
    """Average code length per event of ``window`` under ``theta``."""
    if window.total == 0:
        raise ValueError("window is empty")
    return data_cost(window, theta) / window.total


# -- artifact readers -------------------------------------------------------

def read_verdicts(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_labels(path: str | Path) -> list[str]:
    with open(path, newline="") as fh:
        return [row["label"] for row in csv.DictReader(fh)]


def read_column(path: str | Path) -> tuple[str, list[str]]:
    """Return ``(kind, values)`` from a verdict CSV (regime ids) or labels CSV."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        fields = reader.fieldnames or []
    if "regime_id" in fields:
        return "verdicts", [row["regime_id"] for row in rows]
    if "label" in fields:
        return "labels", [row["label"] for row in rows]
    raise ValueError(f"{path}: expected a 'regime_id' or 'label' column")


def write_metrics(path: str | Path, **metrics) -> dict:
    """Merge ``metrics`` into the JSON file at ``path``."""
    path = Path(path)
    data = json.loads(path.read_text()) if path.exists() else {}
    data.update({k: v for k, v in metrics.items() if v is not None})
    path.write_text(json.dumps(data, indent=1, allow_nan=False) + "\n")
    return data
