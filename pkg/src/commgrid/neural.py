"""Minimal feed-forward learning stack in plain numpy.

One hidden ReLU layer with a linear output head, exact backprop, Adam with
bias correction, and a fixed-capacity experience replay ring. No autograd,
no framework: the whole stack is a handful of matrix products, which keeps
runs deterministic under a seeded ``numpy.random.Generator``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


@dataclass
class Mlp:
    """in -> hidden (ReLU) -> out (linear). Weights are (fan_in, fan_out)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[1]

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


@dataclass
class Gradients:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


class ForwardCache(NamedTuple):
    """Activations retained for the backward pass (always 2-D batches)."""

    inputs: np.ndarray
    pre_hidden: np.ndarray
    hidden: np.ndarray


def mlp_init(in_dim: int, hidden_dim: int, out_dim: int, rng: np.random.Generator) -> Mlp:
    """Weights uniform in +/- 1/sqrt(fan_in), biases zero."""
    for name, dim in (("in_dim", in_dim), ("hidden_dim", hidden_dim), ("out_dim", out_dim)):
        if dim < 1:
            raise ValueError(f"{name} must be >= 1, got {dim}")
    lim1 = 1.0 / np.sqrt(in_dim)
    lim2 = 1.0 / np.sqrt(hidden_dim)
    return Mlp(
        w1=rng.uniform(-lim1, lim1, size=(in_dim, hidden_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(hidden_dim, out_dim)),
        b2=np.zeros(out_dim),
    )


def forward(mlp: Mlp, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the net on a single vector or a (batch, in_dim) matrix.

    Returns the output (matching the input's rank) and the cache needed by
    :func:`backward`.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != mlp.in_dim:
        raise ValueError(f"expected input with {mlp.in_dim} features, got shape {x.shape}")
    pre = batch @ mlp.w1 + mlp.b1
    hidden = np.maximum(pre, 0.0)
    out = hidden @ mlp.w2 + mlp.b2
    return (out[0] if single else out), ForwardCache(batch, pre, hidden)


def backward(mlp: Mlp, cache: ForwardCache, grad_out: np.ndarray) -> Gradients:
    """Exact chain rule from d(loss)/d(output) back to every parameter."""
    grad_out = np.asarray(grad_out, dtype=float)
    if grad_out.ndim == 1:
        grad_out = grad_out[None, :]
    if cache.inputs.shape[1] != mlp.in_dim or cache.hidden.shape[1] != mlp.hidden_dim:
        raise ValueError("cache does not match this network's dimensions")
    if grad_out.shape != (cache.inputs.shape[0], mlp.out_dim):
        raise ValueError(
            f"output gradient shape {grad_out.shape} does not match cache batch "
            f"{cache.inputs.shape[0]} x out_dim {mlp.out_dim}"
        )
    grad_w2 = cache.hidden.T @ grad_out
    grad_b2 = grad_out.sum(axis=0)
    grad_hidden = grad_out @ mlp.w2.T
    grad_pre = grad_hidden * (cache.pre_hidden > 0.0)
    grad_w1 = cache.inputs.T @ grad_pre
    grad_b1 = grad_pre.sum(axis=0)
    return Gradients(grad_w1, grad_b1, grad_w2, grad_b2)


@dataclass
class AdamState:
    """First/second-moment accumulators, one pair per parameter tensor."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(mlp: Mlp) -> AdamState:
    return AdamState(
        m=[np.zeros_like(p) for p in mlp.params()],
        v=[np.zeros_like(p) for p in mlp.params()],
    )


def adam_step(mlp: Mlp, grads: Gradients, state: AdamState, lr: float) -> tuple[Mlp, AdamState]:
    """One bias-corrected Adam update, in place; returns the same objects."""
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(mlp.params(), grads.arrays(), state.m, state.v):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return mlp, state


@dataclass
class Transition:
    """One interaction step as stored for replay.

    ``symbol`` is the emitted symbol-action index when the communication
    head is trainable, else None.
    """

    obs: np.ndarray
    move: int
    symbol: int | None
    reward: float
    next_obs: np.ndarray
    done: bool


@dataclass
class ReplayBuffer:
    """Ring buffer; once full, the oldest transition is overwritten first."""

    capacity: int
    _store: list[Transition] = field(default_factory=list)
    _cursor: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")

    def __len__(self) -> int:
        return len(self._store)

    def push(self, transition: Transition) -> None:
        if len(self._store) < self.capacity:
            self._store.append(transition)
        else:
            self._store[self._cursor] = transition
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition] | None:
        """Uniform sample with replacement; None while under-filled.

        The None return is the insufficient-data signal: callers skip their
        training step until ``batch_size`` transitions have been stored.
        """
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        if len(self._store) < batch_size:
            return None
        idx = rng.integers(len(self._store), size=batch_size)
        return [self._store[i] for i in idx]
