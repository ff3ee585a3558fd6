import csv

import numpy as np
import pytest
from scipy.stats import chisquare

from streamcube.synthgen import (ANOMALY, SWITCH_PATTERNS, AnomalySpec, GeneratorSpec, desk_preset,
                                 gen_stream, gen_tensor_type, parse_pattern, window_labels,
                                 write_events, write_labels)


def test_tensor_type_vectors_are_distributions():
    spec = GeneratorSpec(dims=(7, 50, 3))
    params = gen_tensor_type(spec, "1")
    assert [len(p) for p in params] == [7, 50, 3]
    for p in params:
        assert abs(p.sum() - 1) < 1e-9 and (p >= 0).all()


def test_tensor_type_seeded():
    spec = GeneratorSpec(seed=4)
    for a, b in zip(gen_tensor_type(spec, "2"), gen_tensor_type(spec, "2")):
        np.testing.assert_array_equal(a, b)
    other = gen_tensor_type(GeneratorSpec(seed=5), "2")
    assert not np.array_equal(other[0], gen_tensor_type(spec, "2")[0])


def test_tensor_types_are_separated():
    separated = 0
    for seed in range(10):
        spec = GeneratorSpec(seed=seed)
        p, q = gen_tensor_type(spec, "1")[0], gen_tensor_type(spec, "2")[0]
        separated += 0.5 * np.abs(p - q).sum() > 0.2
    assert separated >= 9


def test_single_type_pattern():
    events, labels = gen_stream(GeneratorSpec(dims=(5, 5), n_events=1000, pattern="1",
                                              ticks_per_phase=40))
    assert set(labels) == {"1"} and len(labels) == 40
    assert len(events) == 1000


def test_full_scale_phase_boundaries():
    spec = GeneratorSpec(pattern="1,2,1", n_events=100_000, ticks_per_phase=100)
    events, labels = gen_stream(spec)
    assert len(events) == 100_000 and len(labels) == 300
    assert labels[:100] == ["1"] * 100 and labels[100:200] == ["2"] * 100
    assert labels[200:] == ["1"] * 100
    ticks = np.array([e.tick for e in events])
    assert (np.diff(ticks) >= 0).all()
    per_phase = np.bincount(ticks // 100)
    assert per_phase.tolist() == [33_334, 33_333, 33_333]
    assert all(len(e.units) == 4 and max(e.units) < 100 for e in events[:100])


@pytest.mark.parametrize("pattern", SWITCH_PATTERNS)
def test_exact_totals(pattern):
    spec = desk_preset(pattern, seed=1, n_events=9_999)
    events, labels = gen_stream(spec)
    assert len(events) == 9_999
    assert len(labels) == spec.n_ticks == 30 * len(parse_pattern(pattern))
    assert [labels[i * 30] for i in range(len(spec.phase_types))] == parse_pattern(pattern)


def test_anomaly_labels_and_generator():
    spec = desk_preset("1", 0, n_events=20_000, ticks_per_phase=400,
                       anomaly=AnomalySpec(positions=(100, 250), width=10))
    events, labels = gen_stream(spec)
    bad = [t for t, lab in enumerate(labels) if lab == ANOMALY]
    assert bad == list(range(100, 110)) + list(range(250, 260))
    odd = gen_tensor_type(spec, ANOMALY)[0]
    normal = gen_tensor_type(spec, "1")[0]
    units = np.array([e.units[0] for e in events if labels[e.tick] == ANOMALY])
    freq = np.bincount(units, minlength=20) / len(units)
    assert np.abs(freq - odd).sum() < np.abs(freq - normal).sum()
    win = window_labels(labels, 10)
    assert win[10] == ANOMALY and win[25] == ANOMALY and win.count(ANOMALY) == 2


def test_anomaly_rate_and_skip():
    spec = desk_preset("1", 3, ticks_per_phase=1000,
                       anomaly=AnomalySpec(rate=0.05, width=10, skip_head=500))
    _, labels = gen_stream(spec)
    win = window_labels(labels, 10)
    assert win.count(ANOMALY) == round(0.05 * 50)
    assert ANOMALY not in win[:50]


def test_pattern_validation():
    assert parse_pattern(" 1, 2 ,1") == ["1", "2", "1"]
    for bad in ("", "1,,2", f"1,{ANOMALY}"):
        with pytest.raises(ValueError):
            parse_pattern(bad)
    with pytest.raises(ValueError):
        GeneratorSpec(ticks_per_phase=0)


def test_window_labels_majority():
    assert window_labels(["a"] * 6 + ["b"] * 4 + ["b"] * 3, 10) == ["a", "b"]


def _pooled_chisquare(observed, probs, min_expected=5.0):
    expected = probs * observed.sum()
    order = np.argsort(expected)
    obs_bins, exp_bins, o_acc, e_acc = [], [], 0.0, 0.0
    for i in order:
        o_acc += observed[i]
        e_acc += expected[i]
        if e_acc >= min_expected:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc:
        obs_bins[-1] += o_acc
        exp_bins[-1] += e_acc
    return chisquare(obs_bins, exp_bins).pvalue


def test_phase_frequencies_match_multinomial():
    spec = desk_preset("1,2", seed=8, n_events=40_000)
    events, labels = gen_stream(spec)
    for type_id in ("1", "2"):
        params = gen_tensor_type(spec, type_id)
        units = np.array([e.units for e in events if labels[e.tick] == type_id])
        assert len(units) >= 10_000
        for m, p in enumerate(params):
            observed = np.bincount(units[:, m], minlength=len(p)).astype(float)
            assert _pooled_chisquare(observed, p) > 0.01


def test_writers(tmp_path):
    events, labels = gen_stream(desk_preset("1,2", 0, n_events=50))
    write_events(tmp_path / "e.csv", events, 3)
    write_labels(tmp_path / "l.csv", labels)
    rows = list(csv.reader(open(tmp_path / "e.csv")))
    assert rows[0] == ["tick", "attr_0", "attr_1", "attr_2"] and len(rows) == 51
    lab = list(csv.DictReader(open(tmp_path / "l.csv")))
    assert lab[0] == {"tick": "0", "label": "1"} and len(lab) == 60
