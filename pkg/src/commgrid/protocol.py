"""The two communication conditions over a 4-symbol channel.

PSP (pre-defined symbolic protocol): a fixed rule maps the sender's
treasure-relative displacement quadrant to a symbol; nothing is learned.

EC (emergent communication): each agent owns a small trainable head that
scores the 4 symbols from the current observation; symbols are picked
epsilon-greedily and the head is trained by the same TD rule as the
movement policy, with shared task reward only.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .gridworld import N_SYMBOLS, GridPos
from .neural import AdamState, Mlp, forward


class Symbol(IntEnum):
    C_A = 0
    C_B = 1
    C_C = 2
    C_D = 3


def psp_symbol(self_pos: GridPos, treasure: GridPos) -> Symbol:
    """Quadrant of (treasure - self), identical rule for both agents.

    dx >= 0, dy >= 0 -> C_A;  dx >= 0, dy < 0 -> C_B;
    dx <  0, dy >= 0 -> C_C;  dx <  0, dy < 0 -> C_D.
    Zero displacement lands in C_A under the >= convention.
    """
    dx = treasure.x - self_pos.x
    dy = treasure.y - self_pos.y
    if dx >= 0:
        return Symbol.C_A if dy >= 0 else Symbol.C_B
    return Symbol.C_C if dy >= 0 else Symbol.C_D


def ec_symbol_select(head: Mlp, obs: np.ndarray, epsilon: float, rng: np.random.Generator) -> Symbol:
    """Epsilon-greedy over the head's 4 scores; ties go to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return Symbol(int(rng.integers(N_SYMBOLS)))
    scores, _ = forward(head, obs)
    return Symbol(int(np.argmax(scores)))


def encode_symbol(symbol: int | None) -> np.ndarray:
    """One-hot of the symbol index; all zeros for 'nothing received'."""
    vec = np.zeros(N_SYMBOLS)
    if symbol is not None:
        vec[int(symbol)] = 1.0
    return vec


def decode_symbol(vec: np.ndarray) -> Symbol | None:
    vec = np.asarray(vec)
    if vec.shape != (N_SYMBOLS,):
        raise ValueError(f"expected a length-{N_SYMBOLS} vector, got shape {vec.shape}")
    if not vec.any():
        return None
    return Symbol(int(np.argmax(vec)))


@dataclass
class PspPolicy:
    """Fixed quadrant rule; carries no parameters."""


@dataclass
class EcPolicy:
    """Trainable symbol head plus its optimizer state."""

    head: Mlp
    adam: AdamState


CommPolicy = PspPolicy | EcPolicy
