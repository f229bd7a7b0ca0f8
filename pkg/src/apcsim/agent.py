"""Per-AP learning agent: MDP state, reward estimation, replay, action choice.

The agent sees only its own primary channel: a depth-L window of its past
(action, observation) pairs plus the contender count the controller last
announced. Rewards follow the estimated-return fold: transmit actions fold
the window's transmission outcomes oldest-to-newest as r <- eta*r + (+1|-1),
wait actions earn +1 when the next observation is Busy (a collision avoided)
and -1 when it is Idle (an opportunity missed).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .qnn import QnnParams, forward, semi_gradient_update
from .simcore import BUSY

HISTORY_LEN = 20


@dataclass
class Hyperparams:
    """Learning constants shared by the agents and the controller."""

    rho: float = 1e-3          # SGD step size
    gamma: float = 0.9         # discount
    epsilon: float = 0.05      # exploration probability, fixed for the run
    eta: float = 0.5           # reward fold decay
    history_len: int = HISTORY_LEN
    batch_size: int = 32
    buffer_capacity: int = 10_000
    fomaml_period: float = 100e-3  # seconds of simulated time between rounds

    def validate(self) -> None:
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")
        if not (0.0 <= self.eta <= 1.0):
            raise ValueError("eta must lie in [0, 1]")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("buffer must hold at least one batch")


@dataclass
class AgentState:
    """Ring of the last L (action, observation) pairs plus the contender count."""

    history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_LEN))
    contender_count: int = 1

    def push(self, action: int, observation: int) -> None:
        self.history.append((action, observation))


def encode_state(state: AgentState, n_aps: int) -> np.ndarray:
    """41-vector: interleaved (a, o) pairs oldest first, then c/N.

    A cold-start history shorter than L is left-padded with zeros, so the
    newest pair always occupies the last two history positions.
    """
    depth = state.history.maxlen
    vec = np.zeros(2 * depth + 1)
    offset = 2 * (depth - len(state.history))
    for i, (a, o) in enumerate(state.history):
        vec[offset + 2 * i] = a
        vec[offset + 2 * i + 1] = o
    vec[2 * depth] = state.contender_count / n_aps
    return vec


def estimate_reward(
    action: int,
    transmit_feedbacks,
    next_observation: int,
    eta: float,
) -> float:
    """Estimated return for the slot just played.

    transmit_feedbacks holds the +1 (Ack) / -1 (Timeout) outcome of every
    transmit action inside the current window, oldest first, including the
    slot being scored. Wait actions ignore the window entirely.
    """
    if action == 1:
        r = 0.0
        for y in transmit_feedbacks:
            r = eta * r + y
        return r
    return 1.0 if next_observation == BUSY else -1.0


def select_action(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over (q_wait, q_contend); exact tie prefers contending."""
    if rng.random() < epsilon:
        return int(rng.integers(0, 2))
    return 1 if q_values[1] >= q_values[0] else 0


class ReplayBuffer:
    """FIFO transition store over preallocated arrays, uniform batch sampling."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action, reward, next_state) -> None:
        i = self._next
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch: int):
        """Uniform without replacement within the batch."""
        idx = rng.choice(self._size, size=batch, replace=False)
        return (
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
        )

    def get(self, index: int):
        return (
            self.states[index],
            int(self.actions[index]),
            float(self.rewards[index]),
            self.next_states[index],
        )


class DlcaAgent:
    """One AP's learner: policy, reward window, replay, per-slot training."""

    def __init__(
        self,
        ap_id: int,
        n_aps: int,
        rng: np.random.Generator,
        hyper: Hyperparams,
        state_dim: int | None = None,
    ):
        self.ap_id = ap_id
        self.n_aps = n_aps
        self.rng = rng
        self.hyper = hyper
        self.state = AgentState(deque(maxlen=hyper.history_len), contender_count=1)
        # (action, outcome) of the last L slots; outcome is +1/-1 for transmit
        # slots and 0 for waits (waits never enter the fold)
        self.feedback_window = deque(maxlen=hyper.history_len)
        dim = state_dim if state_dim is not None else 2 * hyper.history_len + 1
        self.params = QnnParams.init(rng, (dim, 64, 64, 64, 64, 2))
        self.buffer = ReplayBuffer(hyper.buffer_capacity, dim)

    def set_contender_count(self, count: int) -> None:
        self.state.contender_count = count

    def state_vector(self) -> np.ndarray:
        return encode_state(self.state, self.n_aps)

    def act(self, state_vec: np.ndarray) -> int:
        q = forward(self.params, state_vec)
        return select_action(q, self.hyper.epsilon, self.rng)

    def score_slot(self, action: int, outcome: int, next_observation: int) -> float:
        """Record the slot's (action, outcome) and return its reward.

        outcome: +1 Ack / -1 Timeout when action=1, ignored for waits.
        """
        self.feedback_window.append((action, outcome if action == 1 else 0))
        feedbacks = [y for a, y in self.feedback_window if a == 1]
        return estimate_reward(action, feedbacks, next_observation, self.hyper.eta)

    def record_and_maybe_train(self, state, action, reward, next_state) -> float | None:
        """Append the transition; one gradient step per slot once warmed up."""
        self.buffer.push(state, action, reward, next_state)
        if len(self.buffer) < self.hyper.batch_size:
            return None
        s, a, r, s2 = self.buffer.sample(self.rng, self.hyper.batch_size)
        return semi_gradient_update(
            self.params, s, a, r, s2, self.hyper.rho, self.hyper.gamma
        )
