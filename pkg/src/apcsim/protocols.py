"""Channel-access state machines: DCF backoff variants, SH-TXOP, DLCA slots.

These are pure per-AP state machines plus small helpers; the time loops that
drive them live in engines.py. Backoff semantics: the counter is drawn
uniformly from [0, CW-1], decrements once per idle slot, freezes for the whole
busy period plus the following DIFS, and the AP transmits in the slot where
the counter sits at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simcore import SlotOutcome, resolve_slot


@dataclass
class BackoffState:
    """Binary-exponential backoff bookkeeping for one AP."""

    cw_min: int = 32
    m: int = 6
    current_cw: int = 32
    counter: int = 0
    frozen: bool = False

    @property
    def cw_max(self) -> int:
        return self.cw_min * 2 ** self.m

    def validate(self) -> None:
        if not (self.cw_min <= self.current_cw <= self.cw_max):
            raise ValueError("contention window outside [cw_min, cw_max]")
        if not (0 <= self.counter <= self.current_cw - 1):
            raise ValueError("counter outside [0, current_cw - 1]")

    @classmethod
    def fresh(cls, rng: np.random.Generator, cw_min: int = 32, m: int = 6) -> "BackoffState":
        state = cls(cw_min=cw_min, m=m, current_cw=cw_min)
        state.redraw(rng)
        return state

    def redraw(self, rng: np.random.Generator) -> None:
        self.counter = int(rng.integers(0, self.current_cw))

    def wants_transmit(self) -> bool:
        return self.counter == 0

    def on_idle_slot(self) -> None:
        if self.counter > 0:
            self.counter -= 1

    def on_success(self, rng: np.random.Generator) -> None:
        self.current_cw = self.cw_min
        self.redraw(rng)

    def on_collision(self, rng: np.random.Generator) -> None:
        self.current_cw = min(2 * self.current_cw, self.cw_max)
        self.redraw(rng)

    def on_collision_no_feedback(self, rng: np.random.Generator) -> None:
        """Collision without any failure signal: redraw, window unchanged.

        Used by SH-TXOP, whose wide-band backoff carries no ACK step, so a
        colliding winner cannot learn it failed and never doubles its window.
        """
        self.redraw(rng)


def dcf_basic_step(
    state: BackoffState,
    slot_idle: bool,
    feedback: str | None,
    rng: np.random.Generator,
) -> bool:
    """Advance one slot of plain DCF; returns the transmit intent for the slot.

    feedback is "ack" or "timeout" when this AP transmitted in the previous
    slot, else None. Busy slots leave the counter frozen.
    """
    if feedback == "ack":
        state.on_success(rng)
    elif feedback == "timeout":
        state.on_collision(rng)
    elif slot_idle:
        state.on_idle_slot()
    return state.wants_transmit()


def rts_cts_step(
    state: BackoffState,
    slot_idle: bool,
    feedback: str | None,
    rng: np.random.Generator,
) -> bool:
    """Advance one slot of RTS/CTS DCF; identical backoff, RTS-sized collisions.

    The transmit intent sends an RTS; the TXOP follows only on CTS, so the
    collision cost difference is carried by the engine's clock arithmetic,
    not by the backoff rules.
    """
    return dcf_basic_step(state, slot_idle, feedback, rng)


@dataclass
class ShTxopPlan:
    """One SH-TXOP round: who won the wide band and who got each sub-channel."""

    sharing_ap: int
    sub_channel_assignment: dict[int, int]  # channel f -> ap id

    def validate(self, n_aps: int, n_channels: int) -> None:
        expected = min(n_aps, n_channels)
        aps = list(self.sub_channel_assignment.values())
        if len(aps) != expected or len(set(aps)) != expected:
            raise ValueError("assignment must cover exactly min(N, F) distinct APs")
        if self.sub_channel_assignment.get(0) != self.sharing_ap:
            raise ValueError("the sharing AP takes the first sub-channel")


def shtxop_assignment(winner: int, n_aps: int, n_channels: int) -> ShTxopPlan:
    """Round-robin sub-channel split starting from the winning AP itself."""
    k = min(n_aps, n_channels)
    assignment = {f: (winner + f) % n_aps for f in range(k)}
    return ShTxopPlan(sharing_ap=winner, sub_channel_assignment=assignment)


def dlca_step(actions: np.ndarray, primary: np.ndarray, n_channels: int) -> SlotOutcome:
    """Resolve one fixed-length DLCA contention slot.

    actions[ap] = 1 means the AP contends (sends RTS) on its primary channel;
    a sole contender wins the TXOP, several contenders all time out, and a
    silent channel is observed Idle.
    """
    intents = {ap: int(primary[ap]) for ap in np.flatnonzero(actions)}
    return resolve_slot(intents, primary, n_channels)
