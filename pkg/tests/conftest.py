import numpy as np
import pytest

from streamcube import EventRecord, WindowTensor


def planted_window(rng, n_events, components, tau=10, start=0, weights=None):
    """Window whose events come from a mixture of per-attribute multinomials.

    ``components`` is a list of per-attribute probability vectors; returns the
    window and the planted component of every event (in insertion order).
    """
    n_attrs = len(components[0])
    weights = np.full(len(components), 1 / len(components)) if weights is None else weights
    labels = rng.choice(len(components), size=n_events, p=weights)
    window = WindowTensor(start, tau, n_attrs)
    for c in labels:
        units = tuple(int(rng.choice(len(p), p=p)) for p in components[c])
        window.append(EventRecord(start + int(rng.integers(tau)), units))
    return window, labels


def disjoint_components(rng, n_attrs=2, size=20, n_comp=2):
    """Components whose unit supports do not overlap in any attribute."""
    block = size // n_comp
    comps = []
    for c in range(n_comp):
        attrs = []
        for _ in range(n_attrs):
            p = np.zeros(size)
            p[c * block:(c + 1) * block] = rng.dirichlet(np.ones(block))
            attrs.append(p)
        comps.append(attrs)
    return comps


def window_from_events(events, start, tau, n_attrs):
    return WindowTensor(start, tau, n_attrs).extend(
        e for e in events if start <= e.tick < start + tau)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
