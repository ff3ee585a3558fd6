"""
Where the bits go
=================

The engine keeps a running description length: dimensions, regimes,
segment switches and the data itself. Regimes are expensive, so a new
one only pays off when it saves more data bits than it costs.
"""

from streamcube import Engine, StreamConfig, log_star
from streamcube.synthgen import desk_preset, gen_stream

events, _ = gen_stream(desk_preset("1,2,3,2,1", seed=1))
engine = Engine(StreamConfig(tau=10, n_components=8, seed=1))
engine.run(events)

cost = engine.cost()
print(f"dimensions      {cost.dimension_bits:10.1f} bits")
print(f"regime count    {cost.regime_count_bits:10.1f}")
print(f"segment count   {cost.segment_count_bits:10.1f}")
for i, bits in enumerate(cost.regime_bits):
    print(f"regime {i}        {bits:10.1f}")
print(f"switches        {sum(cost.segment_bits):10.1f}")
print(f"data            {cost.data_bits:10.1f}")
print(f"total           {cost.total_bits:10.1f}")

# integers are coded with the universal code
print("log* of 1, 2, 100:", [round(log_star(n), 4) for n in (1, 2, 100)])
