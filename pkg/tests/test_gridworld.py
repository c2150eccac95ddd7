from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commgrid.gridworld import AGENT_1, AGENT_2, EnvState, GridPos, GridWorld, MoveAction


@pytest.fixture
def env():
    return GridWorld()


positions = st.builds(GridPos, st.integers(0, 4), st.integers(0, 4))
moves = st.sampled_from(list(MoveAction))
states = st.builds(
    EnvState,
    pos_a1=positions,
    pos_a2=positions,
    treasure=positions,
    step_count=st.integers(0, 99),
)


class TestReset:
    def test_agents_at_opposite_corners_and_treasure_on_grid(self, env, rng):
        state = env.reset(rng)
        assert state.pos_a1 == GridPos(0, 0)
        assert state.pos_a2 == GridPos(4, 4)
        assert 0 <= state.treasure.x <= 4 and 0 <= state.treasure.y <= 4
        assert state.step_count == 0

    def test_same_seed_same_treasure(self, env):
        first = env.reset(np.random.default_rng(99))
        second = env.reset(np.random.default_rng(99))
        assert first == second

    def test_treasure_distribution_is_uniform(self, env):
        # Frequency check over 10,000 resets: 1/25 within +/- 0.01 per cell.
        rng = np.random.default_rng(5)
        counts = np.zeros((5, 5))
        n = 10_000
        for _ in range(n):
            t = env.reset(rng).treasure
            counts[t.x, t.y] += 1
        assert np.all(np.abs(counts / n - 1 / 25) < 0.01)


class TestStep:
    def test_simultaneous_arrival_nets_plus_nine(self, env):
        state = EnvState(GridPos(2, 1), GridPos(2, 3), GridPos(2, 2))
        out = env.step(state, MoveAction.UP, MoveAction.DOWN)
        assert out.reward == 9.0
        assert out.done and out.success
        assert out.state.pos_a1 == out.state.pos_a2 == GridPos(2, 2)

    def test_wall_clamp_keeps_position(self, env):
        state = EnvState(GridPos(0, 0), GridPos(4, 4), GridPos(2, 2))
        out = env.step(state, MoveAction.LEFT, MoveAction.STAY)
        assert out.state.pos_a1 == GridPos(0, 0)
        assert out.reward == -1.0
        assert not out.done

    def test_step_cap_ends_episode_without_success(self, env):
        state = EnvState(GridPos(0, 0), GridPos(4, 4), GridPos(2, 2), step_count=99)
        out = env.step(state, MoveAction.STAY, MoveAction.STAY)
        assert out.done and not out.success
        assert out.reward == -1.0
        assert out.state.step_count == 100

    def test_stepping_terminated_episode_rejected(self, env):
        state = EnvState(GridPos(0, 0), GridPos(4, 4), GridPos(2, 2), step_count=100)
        with pytest.raises(ValueError, match="terminated"):
            env.step(state, MoveAction.STAY, MoveAction.STAY)

    def test_one_agent_alone_on_treasure_is_not_success(self, env):
        state = EnvState(GridPos(2, 2), GridPos(4, 4), GridPos(2, 2))
        out = env.step(state, MoveAction.STAY, MoveAction.STAY)
        assert not out.success
        assert out.reward == -1.0

    @given(state=states, m1=moves, m2=moves)
    @settings(max_examples=200, deadline=None)
    def test_positions_stay_in_bounds(self, state, m1, m2):
        out = GridWorld().step(state, m1, m2)
        for pos in (out.state.pos_a1, out.state.pos_a2):
            assert 0 <= pos.x <= 4 and 0 <= pos.y <= 4

    @given(state=states, m1=moves, m2=moves)
    @settings(max_examples=50, deadline=None)
    def test_step_is_pure(self, state, m1, m2):
        env = GridWorld()
        assert env.step(state, m1, m2) == env.step(state, m1, m2)

    @given(state=states, m1=moves, m2=moves)
    @settings(max_examples=200, deadline=None)
    def test_reward_is_minus_one_or_plus_nine(self, state, m1, m2):
        out = GridWorld().step(state, m1, m2)
        assert out.reward == (9.0 if out.success else -1.0)


class TestObserve:
    def test_known_vector_with_received_symbol(self, env):
        state = EnvState(GridPos(0, 0), GridPos(4, 4), GridPos(4, 4))
        obs = env.observe(state, AGENT_1, received=1)
        assert obs.tolist() == [0, 0, 1, 1, 0, 1, 0, 0]

    def test_center_without_symbol(self, env):
        state = EnvState(GridPos(2, 2), GridPos(4, 4), GridPos(2, 2))
        obs = env.observe(state, AGENT_1, received=None)
        assert obs.tolist() == [0.5, 0.5, 0.5, 0.5, 0, 0, 0, 0]

    def test_partner_position_never_visible(self, env):
        base = None
        for x in range(5):
            for y in range(5):
                state = EnvState(GridPos(1, 3), GridPos(x, y), GridPos(4, 0))
                obs = env.observe(state, AGENT_1, received=2)
                if base is None:
                    base = obs
                assert np.array_equal(obs, base)

    def test_observation_shape_and_ranges(self, env, rng):
        state = env.reset(rng)
        for agent in (AGENT_1, AGENT_2):
            obs = env.observe(state, agent, received=3)
            assert obs.shape == (8,)
            assert np.all((obs[:4] >= 0) & (obs[:4] <= 1))
            assert obs[4:].sum() == 1.0

    def test_unknown_agent_rejected(self, env, rng):
        with pytest.raises(ValueError, match="agent"):
            env.observe(env.reset(rng), 2)


class TestConstruction:
    def test_bad_sizes_rejected(self):
        with pytest.raises(ValueError):
            GridWorld(grid_size=1)
        with pytest.raises(ValueError):
            GridWorld(max_steps=0)
