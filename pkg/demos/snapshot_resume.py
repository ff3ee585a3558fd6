"""
Pausing and resuming a stream
=============================

Engine state is a compact byte string. A restored engine continues
exactly where the original left off.
"""

from streamcube import Engine, StreamConfig
from streamcube.synthgen import desk_preset, gen_stream

events, _ = gen_stream(desk_preset("1,2,1", seed=4))
half = 3 * len(events) // 4

engine = Engine(StreamConfig(tau=10, n_components=8, seed=4))
engine.feed(events[:half])
blob = engine.snapshot()
print(f"snapshot after {engine.n_windows} windows: {len(blob)} bytes")

resumed = Engine.restore(blob)
a = [v.csv_row() for v in engine.run(events[half:])]
b = [v.csv_row() for v in resumed.run(events[half:])]
print("identical continuation:", a == b)
