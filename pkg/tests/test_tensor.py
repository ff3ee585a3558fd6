import io

import pytest
from hypothesis import given, strategies as st

from streamcube import EventReader, EventRecord, StreamConfig, Vocabulary, WindowTensor
from streamcube.tensor import MalformedRow, window_event_total


def test_vocab_encode_dense_and_idempotent():
    vocab = Vocabulary(2)
    assert vocab.encode(0, "tcp") == 0
    assert vocab.encode(0, "tcp") == 0
    assert vocab.encode(0, "udp") == 1
    assert vocab.encode(1, "tcp") == 0
    assert vocab.sizes == (2, 1)


def test_vocab_attr_out_of_range():
    with pytest.raises(IndexError):
        Vocabulary(2).encode(2, "x")


@given(st.lists(st.tuples(st.integers(0, 2), st.text(max_size=5)), max_size=50))
def test_vocab_roundtrip_identity(pairs):
    vocab = Vocabulary(3)
    for attr, label in pairs:
        assert vocab.decode(attr, vocab.encode(attr, label)) == label
    again = Vocabulary.from_dict(vocab.to_dict())
    assert again.sizes == vocab.sizes
    for attr, label in pairs:
        assert again.encode(attr, label) == vocab.encode(attr, label)


def test_window_append_accumulates():
    w = WindowTensor(10, 5, 2)
    w.append(EventRecord(11, (0, 1)))
    w.append(EventRecord(11, (0, 1)))
    assert w.cells[(0, 1, 1)] == 2
    before = window_event_total(w)
    w.append(EventRecord(14, (1, 1), count=3))
    assert window_event_total(w) == before + 3


def test_window_rejects_tick_at_end():
    w = WindowTensor(10, 5, 1)
    with pytest.raises(ValueError, match=r"tick 15 outside window \[10, 15\)"):
        w.append(EventRecord(15, (0,)))
    with pytest.raises(ValueError):
        w.append(EventRecord(9, (0,)))


def test_window_total_examples():
    w = WindowTensor(0, 2, 1)
    assert window_event_total(w) == 0
    w.append(EventRecord(0, (0,), 2)).append(EventRecord(1, (0,), 3))
    assert window_event_total(w) == 5


def test_event_count_must_be_positive():
    with pytest.raises(ValueError):
        EventRecord(0, (0,), 0)


events_st = st.lists(
    st.tuples(st.integers(0, 3), st.integers(0, 4), st.integers(0, 4), st.integers(1, 5)),
    max_size=60)


@given(events_st, st.randoms())
def test_window_total_order_independent_and_no_zero_cells(rows, random):
    shuffled = list(rows)
    random.shuffle(shuffled)
    w1 = WindowTensor(0, 4, 2).extend(EventRecord(t, (a, b), c) for t, a, b, c in rows)
    w2 = WindowTensor(0, 4, 2).extend(EventRecord(t, (a, b), c) for t, a, b, c in shuffled)
    assert w1.total == w2.total == sum(r[3] for r in rows)
    assert w1.cells == w2.cells
    assert all(count > 0 for count in w1.cells.values())
    for a, b in zip(w1.arrays(), w2.arrays()):
        assert (a == b).all()


def test_window_dict_roundtrip():
    w = WindowTensor(20, 10, 2).extend([EventRecord(21, (3, 4), 2), EventRecord(29, (0, 0))])
    again = WindowTensor.from_dict(w.to_dict())
    assert again.cells == w.cells and again.total == w.total


def test_config_defaults_and_validation():
    cfg = StreamConfig(n_components=4)
    assert cfg.alpha == cfg.beta == 0.25
    assert cfg.float_bits == 8.0 and cfg.n_iter == 10 and cfg.init_windows == 5
    assert StreamConfig(queue_len=0).queue_len is None
    with pytest.raises(ValueError):
        StreamConfig(tau=0)
    with pytest.raises(ValueError):
        StreamConfig(alpha=-1)


def test_reader_with_header_and_count():
    text = "tick,proto,port,count\n0,tcp,80,2\n3,udp,53,1\n3,tcp,80,4\n"
    reader = EventReader()
    events = list(reader.parse(io.StringIO(text)))
    assert [e.count for e in events] == [2, 1, 4]
    assert events[2].units == events[0].units == (0, 0)
    assert reader.vocab.names == ["proto", "port"]
    assert reader.vocab.to_dict() == {"proto": ["tcp", "udp"], "port": ["80", "53"]}


def test_reader_headerless_missing_count():
    events = list(EventReader().parse(io.StringIO("5,a,b\n7,a,c\n")))
    assert [(e.tick, e.units, e.count) for e in events] == [(5, (0, 0), 1), (7, (0, 1), 1)]


def test_reader_headerless_with_count_and_tick_size():
    reader = EventReader(n_attrs=1, tick_size=60)
    events = list(reader.parse(io.StringIO("0,x,3\n125,y,1\n")))
    assert [(e.tick, e.count) for e in events] == [(0, 3), (2, 1)]


def test_reader_reports_row_number():
    with pytest.raises(MalformedRow, match="row 3"):
        list(EventReader().parse(io.StringIO("tick,a\n1,x\nzz,y\n")))
    with pytest.raises(MalformedRow, match="row 2"):
        list(EventReader().parse(io.StringIO("1,x,y\n2,x\n")))
