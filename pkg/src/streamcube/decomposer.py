"""Collapsed Gibbs estimation of per-window component matrices.

Each window's events are explained by ``K`` latent components. A component
owns one distribution over units per attribute (rows of ``A[m]``) and every
local tick owns a distribution over components (rows of ``B``). Dirichlet
priors are centred on the matrices of the last ``L`` windows, held in a
:class:`PastQueue`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numba import njit

from .tensor import StreamConfig, WindowTensor


@dataclass(frozen=True, eq=False)
class ComponentMatrices:
    """One set of component matrices with the evidence behind it.

    Probabilities are never stored; they are ``(counts + prior) / row total``.
    ``a_prior``/``b_prior`` are the Dirichlet pseudo-counts the matrices were
    estimated under, kept so online updates can reuse them.
    """

    a_counts: tuple[np.ndarray, ...]
    b_counts: np.ndarray
    a_prior: tuple[np.ndarray, ...]
    b_prior: np.ndarray
    alpha: tuple[float, ...]
    beta: float
    n_events: int = 0

    @property
    def n_components(self) -> int:
        return self.b_counts.shape[1]

    @property
    def tau(self) -> int:
        return self.b_counts.shape[0]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(a.shape[1] for a in self.a_counts)

    @cached_property
    def A(self) -> tuple[np.ndarray, ...]:
        out = []
        for counts, prior in zip(self.a_counts, self.a_prior):
            num = counts + prior
            out.append(num / num.sum(axis=1, keepdims=True))
        return tuple(out)

    @cached_property
    def B(self) -> np.ndarray:
        num = self.b_counts + self.b_prior
        return num / num.sum(axis=1, keepdims=True)

    @cached_property
    def unseen_floor(self) -> tuple[np.ndarray, ...]:
        """Per-row probability for a unit index beyond the stored width."""
        return tuple(alpha / (counts.sum(axis=1) + prior.sum(axis=1))
                     for alpha, counts, prior in zip(self.alpha, self.a_counts, self.a_prior))

    def widened(self, sizes: Sequence[int]) -> "ComponentMatrices":
        """Pad to larger vocabularies: zero counts, ``alpha`` prior mass per new unit."""
        if all(new <= old for new, old in zip(sizes, self.sizes)):
            return self
        a_counts, a_prior = [], []
        for counts, prior, alpha, new in zip(self.a_counts, self.a_prior, self.alpha, sizes):
            extra = max(0, new - counts.shape[1])
            a_counts.append(np.pad(counts, ((0, 0), (0, extra))))
            a_prior.append(np.pad(prior, ((0, 0), (0, extra)), constant_values=alpha))
        return ComponentMatrices(tuple(a_counts), self.b_counts, tuple(a_prior),
                                 self.b_prior, self.alpha, self.beta, self.n_events)

    @classmethod
    def uniform(cls, sizes: Sequence[int], tau: int, n_components: int,
                alpha: Sequence[float], beta: float) -> "ComponentMatrices":
        """Evidence-free matrices with uniform rows (the cold-start prior)."""
        k = n_components
        return cls(
            a_counts=tuple(np.zeros((k, u), dtype=np.int64) for u in sizes),
            b_counts=np.zeros((tau, k), dtype=np.int64),
            a_prior=tuple(np.full((k, u), a / max(u, 1)) for u, a in zip(sizes, alpha)),
            b_prior=np.full((tau, k), beta / k),
            alpha=tuple(float(a) for a in alpha),
            beta=float(beta),
        )

    def to_dict(self) -> dict:
        return {
            "A": [a.tolist() for a in self.A],
            "B": self.B.tolist(),
            "a_counts": [a.tolist() for a in self.a_counts],
            "b_counts": self.b_counts.tolist(),
            "a_prior": [a.tolist() for a in self.a_prior],
            "b_prior": self.b_prior.tolist(),
            "alpha": list(self.alpha),
            "beta": self.beta,
            "n_events": self.n_events,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComponentMatrices":
        k = len(data["b_counts"][0])
        return cls(
            a_counts=tuple(np.array(a, dtype=np.int64).reshape(k, -1) for a in data["a_counts"]),
            b_counts=np.array(data["b_counts"], dtype=np.int64),
            a_prior=tuple(np.array(a, dtype=float).reshape(k, -1) for a in data["a_prior"]),
            b_prior=np.array(data["b_prior"], dtype=float),
            alpha=tuple(data["alpha"]),
            beta=data["beta"],
            n_events=data["n_events"],
        )


def _resize_rows(probs: np.ndarray, width: int) -> np.ndarray:
    """Extend probability rows with uniform mass for new units and renormalise."""
    extra = width - probs.shape[1]
    if extra <= 0:
        return probs
    padded = np.pad(probs, ((0, 0), (0, extra)), constant_values=1.0 / width)
    return padded / padded.sum(axis=1, keepdims=True)


@dataclass
class PastQueue:
    """FIFO of the last ``maxlen`` component-matrix sets, newest last."""

    maxlen: int
    items: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.maxlen < 1:
            raise ValueError("queue length must be >= 1")
        self.items = deque(self.items, maxlen=self.maxlen)

    def __len__(self) -> int:
        return len(self.items)

    def push(self, theta: ComponentMatrices) -> None:
        self.items.append(theta)

    def copy(self) -> "PastQueue":
        return PastQueue(self.maxlen, deque(self.items))

    @classmethod
    def filled(cls, theta: ComponentMatrices, length: int) -> "PastQueue":
        return cls(length, deque([theta] * length))

    def prior(self, sizes: Sequence[int], config: StreamConfig
              ) -> tuple[list[np.ndarray], np.ndarray]:
        """Dirichlet pseudo-counts ``sum_l alpha * A_l`` and ``sum_l beta * B_l``."""
        if not self.items:
            raise ValueError("past queue is empty")
        k = config.n_components
        a_prior = [np.zeros((k, u)) for u in sizes]
        b_prior = np.zeros((config.tau, k))
        for theta in self.items:
            if theta.n_components != k or theta.tau != config.tau:
                raise ValueError("queued matrices do not match (tau, K)")
            for m, probs in enumerate(theta.A):
                a_prior[m] += config.alpha * _resize_rows(probs, sizes[m])[:, :sizes[m]]
            b_prior += config.beta * theta.B
        return a_prior, b_prior


@dataclass
class AssignmentState:
    """Latent component per event instance plus the aggregate counts.

    ``a`` is padded to ``(M, K, max U)``; entries past each attribute's size
    stay zero.
    """

    units: np.ndarray
    ticks: np.ndarray
    z: np.ndarray
    a: np.ndarray
    b: np.ndarray
    sizes: tuple[int, ...]

    @classmethod
    def from_window(cls, window: WindowTensor, sizes: Sequence[int], n_components: int,
                    rng: np.random.Generator) -> "AssignmentState":
        units, ticks, counts = window.arrays()
        units = np.repeat(units, counts, axis=0)
        ticks = np.repeat(ticks, counts)
        sizes = tuple(max(int(s), int(u)) for s, u in zip(sizes, window.max_units()))
        z = rng.integers(0, n_components, size=len(ticks)).astype(np.int64)
        state = cls(units, ticks, z,
                    np.zeros((len(sizes), n_components, max(sizes, default=0)), dtype=np.int64),
                    np.zeros((window.width, n_components), dtype=np.int64), sizes)
        _accumulate(state.units, state.ticks, state.z, state.a, state.b)
        return state

    @property
    def n_instances(self) -> int:
        return len(self.z)

    def a_counts(self) -> tuple[np.ndarray, ...]:
        return tuple(self.a[m, :, :u].copy() for m, u in enumerate(self.sizes))


@njit(cache=True)
def _accumulate(units, ticks, z, a, b):
    for i in range(len(z)):
        k = z[i]
        b[ticks[i], k] += 1
        for m in range(units.shape[1]):
            a[m, k, units[i, m]] += 1


@njit(cache=True)
def _sweep(units, ticks, z, a, a_tot, b, a_prior, a_prior_tot, b_prior, draws):
    n_inst, n_attrs = units.shape
    n_comp = b.shape[1]
    cum = np.empty(n_comp)
    for i in range(n_inst):
        t = ticks[i]
        old = z[i]
        b[t, old] -= 1
        for m in range(n_attrs):
            a[m, old, units[i, m]] -= 1
            a_tot[m, old] -= 1
        total = 0.0
        for k in range(n_comp):
            w = b[t, k] + b_prior[t, k]
            for m in range(n_attrs):
                u = units[i, m]
                w *= (a[m, k, u] + a_prior[m, k, u]) / (a_tot[m, k] + a_prior_tot[m, k])
            total += w
            cum[k] = total
        r = draws[i] * total
        new = 0
        while new < n_comp - 1 and cum[new] <= r:
            new += 1
        z[i] = new
        b[t, new] += 1
        for m in range(n_attrs):
            a[m, new, units[i, m]] += 1
            a_tot[m, new] += 1


def _padded_prior(a_prior: list[np.ndarray], width: int) -> np.ndarray:
    out = np.zeros((len(a_prior), a_prior[0].shape[0] if a_prior else 0, width))
    for m, prior in enumerate(a_prior):
        out[m, :, :prior.shape[1]] = prior
    return out


def gibbs_sweep(window: WindowTensor, state: AssignmentState, queue: PastQueue,
                config: StreamConfig, rng: np.random.Generator,
                _prior: tuple | None = None) -> AssignmentState:
    """Resample every event instance's component once, in canonical order."""
    if config.n_components < 1:
        raise ValueError("n_components must be >= 1")
    if state.n_instances == 0:
        return state
    if _prior is None:
        _prior = _kernel_prior(queue, state, config)
    a_prior, a_prior_tot, b_prior = _prior
    draws = rng.random(state.n_instances)
    a_tot = state.a.sum(axis=2)
    _sweep(state.units, state.ticks, state.z, state.a, a_tot, state.b,
           a_prior, a_prior_tot, b_prior, draws)
    return state


def _kernel_prior(queue: PastQueue, state: AssignmentState, config: StreamConfig):
    a_prior, b_prior = queue.prior(state.sizes, config)
    return (_padded_prior(a_prior, state.a.shape[2]),
            np.array([p.sum(axis=1) for p in a_prior]).reshape(len(a_prior), -1),
            b_prior)


def normalize(state: AssignmentState, queue: PastQueue, config: StreamConfig) -> ComponentMatrices:
    """Posterior-mean matrices from the current assignment counts."""
    a_prior, b_prior = queue.prior(state.sizes, config)
    alpha = (float(config.alpha),) * len(state.sizes)
    return ComponentMatrices(state.a_counts(), state.b.copy(), tuple(a_prior), b_prior,
                             alpha, float(config.beta), state.n_instances)


def decompose(window: WindowTensor, queue: PastQueue, config: StreamConfig,
              rng: np.random.Generator, sizes: Sequence[int] | None = None
              ) -> tuple[ComponentMatrices, PastQueue]:
    """Estimate the candidate matrices for ``window`` and rotate the queue.

    ``sizes`` are the current vocabulary sizes; they are widened to cover
    every unit present in the window.
    """
    if window.width != config.tau:
        raise ValueError(f"window width {window.width} != tau {config.tau}")
    if sizes is None:
        sizes = window.max_units()
    state = AssignmentState.from_window(window, sizes, config.n_components, rng)
    prior = _kernel_prior(queue, state, config)
    for _ in range(config.n_iter):
        gibbs_sweep(window, state, queue, config, rng, _prior=prior)
    theta = normalize(state, queue, config)
    queue = queue.copy()
    queue.push(theta)
    return theta, queue
