"""Two-agent cooperative treasure hunt on a small square grid.

Both agents must stand on the treasure cell at the same time to finish an
episode. The world is partially observable: an agent sees its own position
and the treasure, never its partner. The only channel for partner
information is the 4-symbol message slot appended to the observation.

Reward is shared and sparse: -1 on every step, +10 extra on the step where
both agents reach the treasure together (net +9 on the success step).
Episodes end on success or after ``max_steps`` steps.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import NamedTuple

import numpy as np

AGENT_1 = 0
AGENT_2 = 1

N_SYMBOLS = 4
OBS_DIM = 8


class MoveAction(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    STAY = 4


# (dx, dy) per action; UP increases y, RIGHT increases x.
_DELTAS = {
    MoveAction.UP: (0, 1),
    MoveAction.DOWN: (0, -1),
    MoveAction.LEFT: (-1, 0),
    MoveAction.RIGHT: (1, 0),
    MoveAction.STAY: (0, 0),
}


class GridPos(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class EnvState:
    """Full world state; the treasure never moves within an episode."""

    pos_a1: GridPos
    pos_a2: GridPos
    treasure: GridPos
    step_count: int = 0


class StepOutcome(NamedTuple):
    state: EnvState
    reward: float
    done: bool
    success: bool


class GridWorld:
    """Deterministic grid dynamics; all methods are pure in the state.

    Both moves are applied simultaneously and walls clamp (moving off-grid
    leaves the position unchanged). Success is evaluated after both moves.
    """

    def __init__(self, grid_size: int = 5, max_steps: int = 100):
        if grid_size < 2:
            raise ValueError(f"grid_size must be >= 2, got {grid_size}")
        if max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {max_steps}")
        self.grid_size = grid_size
        self.max_steps = max_steps

    def reset(self, rng: np.random.Generator) -> EnvState:
        """New episode: agents at opposite corners, treasure uniform over all cells."""
        cell = int(rng.integers(self.grid_size * self.grid_size))
        treasure = GridPos(cell % self.grid_size, cell // self.grid_size)
        corner = self.grid_size - 1
        return EnvState(
            pos_a1=GridPos(0, 0),
            pos_a2=GridPos(corner, corner),
            treasure=treasure,
            step_count=0,
        )

    def _move(self, pos: GridPos, action: MoveAction) -> GridPos:
        dx, dy = _DELTAS[MoveAction(action)]
        hi = self.grid_size - 1
        return GridPos(min(max(pos.x + dx, 0), hi), min(max(pos.y + dy, 0), hi))

    def step(self, state: EnvState, move_a1: MoveAction, move_a2: MoveAction) -> StepOutcome:
        """Advance one timestep; stepping a finished episode is rejected."""
        if state.step_count >= self.max_steps:
            raise ValueError("episode already terminated (step budget exhausted)")
        nxt = replace(
            state,
            pos_a1=self._move(state.pos_a1, move_a1),
            pos_a2=self._move(state.pos_a2, move_a2),
            step_count=state.step_count + 1,
        )
        success = nxt.pos_a1 == nxt.treasure and nxt.pos_a2 == nxt.treasure
        reward = -1.0 + (10.0 if success else 0.0)
        done = success or nxt.step_count >= self.max_steps
        return StepOutcome(nxt, reward, done, success)

    def observe(self, state: EnvState, agent: int, received: int | None = None) -> np.ndarray:
        """8-vector input for one agent.

        Layout: (self_x, self_y, treasure_x, treasure_y) normalized to [0, 1]
        by grid_size - 1, then a one-hot of the received symbol index
        (all zeros when nothing has been received yet). The partner's
        position never appears.
        """
        if agent not in (AGENT_1, AGENT_2):
            raise ValueError(f"agent must be {AGENT_1} or {AGENT_2}, got {agent}")
        pos = state.pos_a1 if agent == AGENT_1 else state.pos_a2
        obs = np.zeros(OBS_DIM)
        span = self.grid_size - 1
        obs[0] = pos.x / span
        obs[1] = pos.y / span
        obs[2] = state.treasure.x / span
        obs[3] = state.treasure.y / span
        if received is not None:
            obs[4 + int(received)] = 1.0
        return obs
