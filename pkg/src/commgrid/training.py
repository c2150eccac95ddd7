"""Per-timestep interaction loop and independent DQN training for both agents.

Each agent owns a movement Q-net (obs -> 5 move values), a communication
policy (fixed rule or trainable 4-way head), and a private replay buffer.
Nothing is shared between agents except the environment and the scalar
reward. Within a timestep both agents first emit a symbol, then pick a
move; a symbol emitted at step t is delivered in the partner's observation
at step t+1 (all-zeros slot on the first step).

TD targets bootstrap from the same online network (no target network), and
each agent takes one gradient step per environment timestep once its
buffer holds a full batch.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gridworld import AGENT_1, AGENT_2, OBS_DIM, EnvState, GridWorld, MoveAction
from .neural import (
    AdamState,
    Mlp,
    ReplayBuffer,
    Transition,
    adam_init,
    adam_step,
    backward,
    forward,
    mlp_init,
)
from .protocol import EcPolicy, PspPolicy, Symbol, ec_symbol_select, psp_symbol

N_MOVES = len(MoveAction)


class Condition(str, Enum):
    EC = "EC"
    PSP = "PSP"


@dataclass
class AgentNets:
    """One agent's learnable state; never shared with the partner."""

    qnet: Mlp
    q_adam: AdamState
    comm: EcPolicy | PspPolicy
    buffer: ReplayBuffer


@dataclass
class SymbolLogEntry:
    """One emission: timestep (1-based), sender, symbol, and the sender's
    quadrant label at emission time (the probing context)."""

    t: int
    agent: int
    symbol: int
    context: int


@dataclass
class EpisodeRecord:
    index: int
    steps: int
    success: bool
    total_reward: float
    symbols: list[SymbolLogEntry]


@dataclass
class RunResult:
    seed: int
    condition: Condition
    episodes: list[EpisodeRecord]
    agents: list[AgentNets]


def select_move(qnet: Mlp, obs: np.ndarray, epsilon: float, rng: np.random.Generator) -> MoveAction:
    """Epsilon-greedy over the 5 move values; ties go to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return MoveAction(int(rng.integers(N_MOVES)))
    q, _ = forward(qnet, obs)
    return MoveAction(int(np.argmax(q)))


def td_target(reward: float, done: bool, next_obs: np.ndarray, qnet: Mlp, gamma: float) -> float:
    """reward, plus gamma * max next-state value when the episode continues."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    if done:
        return float(reward)
    q, _ = forward(qnet, next_obs)
    return float(reward + gamma * np.max(q))


def _q_update(
    net: Mlp,
    adam: AdamState,
    obs: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    dones: np.ndarray,
    next_obs: np.ndarray,
    gamma: float,
    lr: float,
) -> float:
    """Mean-squared TD regression on the taken action's value only."""
    next_q, _ = forward(net, next_obs)
    targets = rewards + gamma * next_q.max(axis=1) * (1.0 - dones)
    q, cache = forward(net, obs)
    rows = np.arange(len(actions))
    errors = q[rows, actions] - targets
    loss = float(np.mean(errors**2))
    grad_q = np.zeros_like(q)
    grad_q[rows, actions] = 2.0 * errors / len(actions)
    adam_step(net, backward(net, cache, grad_q), adam, lr)
    return loss


def train_step(agent: AgentNets, batch: list[Transition], gamma: float, lr: float) -> dict[str, float]:
    """One Adam update per head from a sampled batch.

    The movement head regresses on move TD targets; a trainable comm head
    regresses on its own symbol TD targets built from the same rewards and
    next observations. PSP has no comm parameters, so only the movement
    head updates.
    """
    if not batch:
        raise ValueError("train_step requires a non-empty batch")
    obs = np.stack([tr.obs for tr in batch])
    next_obs = np.stack([tr.next_obs for tr in batch])
    rewards = np.array([tr.reward for tr in batch], dtype=float)
    dones = np.array([tr.done for tr in batch], dtype=float)
    moves = np.array([tr.move for tr in batch], dtype=int)
    stats = {"move_loss": _q_update(agent.qnet, agent.q_adam, obs, moves, rewards, dones, next_obs, gamma, lr)}
    if isinstance(agent.comm, EcPolicy):
        symbols = np.array([tr.symbol for tr in batch], dtype=int)
        stats["comm_loss"] = _q_update(
            agent.comm.head, agent.comm.adam, obs, symbols, rewards, dones, next_obs, gamma, lr
        )
    return stats


def make_agent(condition: Condition, hidden_units: int, buffer_capacity: int, rng: np.random.Generator) -> AgentNets:
    qnet = mlp_init(OBS_DIM, hidden_units, N_MOVES, rng)
    if Condition(condition) is Condition.EC:
        head = mlp_init(OBS_DIM, hidden_units, len(Symbol), rng)
        comm: EcPolicy | PspPolicy = EcPolicy(head=head, adam=adam_init(head))
    else:
        comm = PspPolicy()
    return AgentNets(qnet=qnet, q_adam=adam_init(qnet), comm=comm, buffer=ReplayBuffer(buffer_capacity))


def run_episode(
    env: GridWorld,
    agents: list[AgentNets],
    condition: Condition,
    rng: np.random.Generator,
    *,
    index: int = 0,
    gamma: float = 0.95,
    lr: float = 1e-3,
    epsilon: float = 0.1,
    batch_size: int = 32,
    train: bool = True,
) -> EpisodeRecord:
    """Play one episode, pushing transitions and training as it goes."""
    condition = Condition(condition)
    state = env.reset(rng)
    received: list[int | None] = [None, None]
    entries: list[SymbolLogEntry] = []
    total_reward = 0.0
    done = False
    success = False
    while not done:
        t = state.step_count + 1
        positions = (state.pos_a1, state.pos_a2)
        obs = [env.observe(state, i, received[i]) for i in (AGENT_1, AGENT_2)]

        symbols = []
        for i in (AGENT_1, AGENT_2):
            context = psp_symbol(positions[i], state.treasure)
            if condition is Condition.EC:
                assert isinstance(agents[i].comm, EcPolicy)
                sym = ec_symbol_select(agents[i].comm.head, obs[i], epsilon, rng)
            else:
                sym = context
            symbols.append(sym)
            entries.append(SymbolLogEntry(t=t, agent=i, symbol=int(sym), context=int(context)))

        moves = [select_move(agents[i].qnet, obs[i], epsilon, rng) for i in (AGENT_1, AGENT_2)]
        state, reward, done, success = env.step(state, moves[AGENT_1], moves[AGENT_2])
        total_reward += reward

        # Next observation carries the partner's symbol from this step.
        next_obs = [env.observe(state, i, symbols[1 - i]) for i in (AGENT_1, AGENT_2)]
        for i in (AGENT_1, AGENT_2):
            agents[i].buffer.push(
                Transition(
                    obs=obs[i],
                    move=int(moves[i]),
                    symbol=int(symbols[i]) if condition is Condition.EC else None,
                    reward=reward,
                    next_obs=next_obs[i],
                    done=done,
                )
            )
        if train:
            for i in (AGENT_1, AGENT_2):
                batch = agents[i].buffer.sample(batch_size, rng)
                if batch is not None:
                    train_step(agents[i], batch, gamma, lr)
        received = [int(symbols[AGENT_2]), int(symbols[AGENT_1])]

    return EpisodeRecord(
        index=index,
        steps=state.step_count,
        success=success,
        total_reward=total_reward,
        symbols=entries,
    )


def run_training(
    condition: Condition | str,
    seed: int,
    *,
    grid_size: int = 5,
    episodes: int = 500,
    max_steps: int = 100,
    gamma: float = 0.95,
    lr: float = 1e-3,
    epsilon: float = 0.1,
    buffer_capacity: int = 2000,
    batch_size: int = 32,
    hidden_units: int = 32,
) -> RunResult:
    """One full training run: fresh env and agents, ``episodes`` sequential
    episodes with persistent networks and buffers. Deterministic in ``seed``."""
    condition = Condition(condition)
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    if batch_size > buffer_capacity:
        raise ValueError(f"batch_size {batch_size} exceeds buffer capacity {buffer_capacity}")
    rng = np.random.default_rng(seed)
    env = GridWorld(grid_size=grid_size, max_steps=max_steps)
    agents = [make_agent(condition, hidden_units, buffer_capacity, rng) for _ in (AGENT_1, AGENT_2)]
    records = [
        run_episode(
            env,
            agents,
            condition,
            rng,
            index=i,
            gamma=gamma,
            lr=lr,
            epsilon=epsilon,
            batch_size=batch_size,
        )
        for i in range(episodes)
    ]
    return RunResult(seed=seed, condition=condition, episodes=records, agents=agents)
