"""Agent-side learning pieces: reward fold, state encoding, replay, policy."""

from collections import deque

import numpy as np
import pytest
from hypothesis import given, strategies as st

from apcsim.agent import (
    AgentState,
    DlcaAgent,
    Hyperparams,
    ReplayBuffer,
    encode_state,
    estimate_reward,
    select_action,
)
from apcsim.simcore import BUSY, IDLE


def direct_sum(feedbacks, eta):
    """Reference form of the estimated return: explicit power-weighted sum."""
    k = len(feedbacks)
    return sum(eta ** (k - 1 - i) * y for i, y in enumerate(feedbacks))


class TestRewardFold:
    def test_worked_example(self):
        # Ack, Timeout, Ack with eta = 0.5: 0.25 - 0.5 + 1 = 0.75
        assert estimate_reward(1, [1, -1, 1], IDLE, 0.5) == 0.75

    def test_empty_window_transmit(self):
        assert estimate_reward(1, [], IDLE, 0.5) == 0.0

    def test_wait_rewards_follow_observation(self):
        assert estimate_reward(0, [1, -1], BUSY, 0.5) == 1.0
        assert estimate_reward(0, [1, -1], IDLE, 0.5) == -1.0

    @given(
        ys=st.lists(st.sampled_from([1, -1]), min_size=1, max_size=20),
        eta=st.sampled_from([0.0, 0.25, 0.5, 1.0]),
    )
    def test_fold_equals_direct_sum_bit_exactly(self, ys, eta):
        # dyadic eta keeps every intermediate exactly representable
        assert estimate_reward(1, ys, IDLE, eta) == direct_sum(ys, eta)

    @given(
        ys=st.lists(st.sampled_from([1, -1]), min_size=1, max_size=20),
        eta=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    )
    def test_fold_bounded_by_geometric_series(self, ys, eta):
        r = estimate_reward(1, ys, IDLE, eta)
        bound = sum(eta**j for j in range(len(ys)))
        assert abs(r) <= bound + 1e-12


class TestEncodeState:
    def test_full_window_layout(self):
        state = AgentState(deque(maxlen=3), contender_count=2)
        for pair in [(1, BUSY), (0, IDLE), (1, IDLE)]:
            state.push(*pair)
        vec = encode_state(state, n_aps=4)
        np.testing.assert_array_equal(vec, [1, 1, 0, 0, 1, 0, 0.5])

    def test_cold_start_is_left_padded(self):
        state = AgentState(deque(maxlen=3), contender_count=1)
        state.push(1, BUSY)
        vec = encode_state(state, n_aps=2)
        np.testing.assert_array_equal(vec, [0, 0, 0, 0, 1, 1, 0.5])

    def test_default_depth_gives_41_inputs(self):
        state = AgentState()
        assert encode_state(state, n_aps=8).shape == (41,)

    @given(n_push=st.integers(0, 30))
    def test_rolling_window_keeps_newest_last(self, n_push):
        state = AgentState(deque(maxlen=5), contender_count=1)
        for i in range(n_push):
            state.push(i % 2, BUSY)
        vec = encode_state(state, n_aps=1)
        assert len(vec) == 11
        if n_push:
            assert vec[8] == (n_push - 1) % 2  # newest action slot


class TestSelectAction:
    def test_greedy_prefers_higher_q(self):
        rng = np.random.default_rng(0)
        assert select_action(np.array([2.0, 1.0]), 0.0, rng) == 0
        assert select_action(np.array([1.0, 2.0]), 0.0, rng) == 1

    def test_tie_contends(self):
        rng = np.random.default_rng(0)
        assert select_action(np.array([1.5, 1.5]), 0.0, rng) == 1

    def test_exploration_frequency(self):
        # with q favoring wait, transmit only comes from exploration: eps/2
        rng = np.random.default_rng(1)
        eps = 0.2
        q = np.array([1.0, 0.0])
        n = 40_000
        rate = sum(select_action(q, eps, rng) for _ in range(n)) / n
        assert rate == pytest.approx(eps / 2, abs=0.01)


class TestReplayBuffer:
    def test_fifo_overwrite(self):
        buf = ReplayBuffer(capacity=3, state_dim=1)
        for i in range(5):
            buf.push([float(i)], i % 2, float(i), [float(i + 1)])
        assert len(buf) == 3
        stored = sorted(buf.rewards.tolist())
        assert stored == [2.0, 3.0, 4.0]  # 0 and 1 evicted

    def test_sample_without_replacement_within_batch(self):
        buf = ReplayBuffer(capacity=8, state_dim=1)
        for i in range(8):
            buf.push([0.0], 0, float(i), [0.0])
        _, _, rewards, _ = buf.sample(np.random.default_rng(2), 8)
        assert sorted(rewards.tolist()) == [float(i) for i in range(8)]

    def test_sample_is_seed_deterministic(self):
        buf = ReplayBuffer(capacity=16, state_dim=2)
        rng = np.random.default_rng(3)
        for _ in range(16):
            buf.push(rng.normal(size=2), 1, rng.normal(), rng.normal(size=2))
        a = buf.sample(np.random.default_rng(7), 4)
        b = buf.sample(np.random.default_rng(7), 4)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_get_round_trips(self):
        buf = ReplayBuffer(capacity=4, state_dim=2)
        buf.push([1.0, 2.0], 1, 0.5, [3.0, 4.0])
        s, a, r, s2 = buf.get(0)
        np.testing.assert_array_equal(s, [1.0, 2.0])
        assert (a, r) == (1, 0.5)
        np.testing.assert_array_equal(s2, [3.0, 4.0])


class TestHyperparams:
    def test_defaults_validate(self):
        Hyperparams().validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"epsilon": -0.1},
            {"epsilon": 1.5},
            {"eta": 2.0},
            {"gamma": 0.0},
            {"rho": 0.0},
            {"batch_size": 0},
            {"buffer_capacity": 8, "batch_size": 32},
        ],
    )
    def test_bad_values_rejected(self, kwargs):
        with pytest.raises(ValueError):
            Hyperparams(**kwargs).validate()


class TestDlcaAgent:
    def make_agent(self, **hyper_kwargs):
        hyper = Hyperparams(**hyper_kwargs)
        return DlcaAgent(0, 4, np.random.default_rng(11), hyper)

    def test_score_slot_folds_only_transmissions(self):
        ag = self.make_agent()
        ag.score_slot(1, 1, BUSY)      # Ack
        ag.score_slot(0, 0, IDLE)      # wait, ignored by later folds
        r = ag.score_slot(1, -1, BUSY)  # Timeout
        assert r == 0.5 * 1 + (-1)

    def test_window_evicts_old_feedback(self):
        ag = self.make_agent(history_len=2, batch_size=1, buffer_capacity=4)
        ag.score_slot(1, -1, BUSY)
        ag.score_slot(1, 1, BUSY)
        r = ag.score_slot(1, 1, BUSY)  # the first Timeout has rolled out
        assert r == 0.5 * 1 + 1

    def test_trains_only_after_warmup(self):
        ag = self.make_agent(batch_size=4, buffer_capacity=16)
        s = ag.state_vector()
        for i in range(3):
            assert ag.record_and_maybe_train(s, 1, 0.0, s) is None
        loss = ag.record_and_maybe_train(s, 1, 0.0, s)
        assert isinstance(loss, float)

    def test_custom_history_len_resizes_network(self):
        ag = self.make_agent(history_len=4, batch_size=2, buffer_capacity=8)
        vec = ag.state_vector()
        assert vec.shape == (9,)
        assert ag.act(vec) in (0, 1)
        assert ag.params.dims[0] == 9

    def test_contender_count_feeds_state(self):
        ag = self.make_agent()
        ag.set_contender_count(3)
        assert ag.state_vector()[-1] == 0.75
