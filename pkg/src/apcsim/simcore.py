"""Slotted medium core: timing arithmetic, channel model, per-slot contention.

Everything here is protocol-agnostic. The protocol engines decide who
transmits; this module owns the clock arithmetic (how long each kind of slot
or transaction lasts), the spectral-efficiency matrix, the per-slot contention
resolution, and the seeded RNG tree that makes whole runs reproducible.

Durations are seconds, rates are bits/s, bandwidth is Hz.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

IDLE = 0
BUSY = 1


class Verdict(enum.Enum):
    IDLE = "idle"
    SUCCESS = "success"
    COLLISION = "collision"


class Feedback(enum.Enum):
    NONE = "none"
    ACK = "ack"
    CTS = "cts"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class TimingParams:
    """MAC/PHY timing constants and frame sizes.

    Defaults are the usual 802.11 contention parameters for a 20 MHz
    sub-channel with control frames at a 6 Mb/s basic rate.
    """

    slot_time: float = 50e-6
    sifs: float = 28e-6
    difs: float = 128e-6
    phy_header: float = 20e-6
    txop: float = 640e-6
    cts_timeout: float = 300e-6
    ack_timeout: float = 300e-6
    mac_header_bytes: int = 36
    ack_bytes: int = 14
    rts_bytes: int = 20
    cts_bytes: int = 14
    atf_bytes: int = 16
    basic_rate: float = 6e6
    channel_bandwidth: float = 20e6

    def validate(self) -> None:
        durations = {
            "slot_time": self.slot_time,
            "sifs": self.sifs,
            "difs": self.difs,
            "phy_header": self.phy_header,
            "txop": self.txop,
            "cts_timeout": self.cts_timeout,
            "ack_timeout": self.ack_timeout,
        }
        for name, value in durations.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.sifs >= self.difs:
            raise ValueError("sifs must be shorter than difs")
        if self.basic_rate <= 0 or self.channel_bandwidth <= 0:
            raise ValueError("rates must be positive")
        exchange = self.frame_airtime(self.rts_bytes) + self.frame_airtime(self.cts_bytes)
        if self.txop <= exchange:
            raise ValueError("txop must exceed the RTS/CTS exchange duration")

    def frame_airtime(self, body_bytes: int) -> float:
        """Airtime of a control frame: PHY preamble plus body at the basic rate."""
        return self.phy_header + body_bytes * 8.0 / self.basic_rate

    @property
    def rts(self) -> float:
        return self.frame_airtime(self.rts_bytes)

    @property
    def cts(self) -> float:
        return self.frame_airtime(self.cts_bytes)

    @property
    def ack(self) -> float:
        return self.frame_airtime(self.ack_bytes)

    @property
    def atf(self) -> float:
        return self.frame_airtime(self.atf_bytes)

    @property
    def header(self) -> float:
        """Data-frame header airtime: PHY preamble plus MAC header at basic rate."""
        return self.phy_header + self.mac_header_bytes * 8.0 / self.basic_rate


# Composite slot/transaction durations, built from TimingParams fields.
# Each entry is the full wall-clock cost charged by the engines for one
# occurrence of that event, including the inter-frame spaces around it.
_CLOCK_KINDS = {
    "backoff_slot": lambda t: t.slot_time,
    "rts_cts_exchange": lambda t: t.rts + t.sifs + t.cts + t.sifs,
    "txop_slot": lambda t: t.header + t.txop + t.sifs + t.ack,
    "dlca_contention_slot": lambda t: (
        t.rts + t.sifs + t.cts + t.sifs + t.txop + t.sifs + t.ack
    ),
    "shtxop_atf": lambda t: t.atf,
    "rts_success": lambda t: (
        t.difs + t.rts + t.sifs + t.cts + t.sifs + t.header + t.txop + t.sifs + t.ack
    ),
    "rts_collision": lambda t: t.rts + t.cts_timeout + t.difs,
    "basic_success": lambda t: t.difs + t.header + t.txop + t.sifs + t.ack,
    "basic_collision": lambda t: t.header + t.txop + t.ack_timeout + t.difs,
    "shtxop_success": lambda t: t.atf + t.sifs + t.txop + t.difs,
    "shtxop_collision": lambda t: t.txop + t.difs,
}


def advance_clock(timing: TimingParams, kind: str) -> float:
    """Duration of one slot/transaction of the given kind, in seconds."""
    try:
        return _CLOCK_KINDS[kind](timing)
    except KeyError:
        raise ValueError(f"unknown slot kind {kind!r}") from None


class FadingMode(enum.Enum):
    BLOCK_CONSTANT = "block_constant"
    REDRAW_AT_EPOCH = "redraw_at_epoch"


@dataclass
class ChannelModel:
    """Per-(AP, channel) spectral efficiency in bit/s/Hz."""

    spectral_efficiency: np.ndarray  # shape (N, F)
    fading_mode: FadingMode = FadingMode.BLOCK_CONSTANT
    draw_lo: float = 1.0
    draw_hi: float = 3.0

    @classmethod
    def draw(
        cls,
        rng: np.random.Generator,
        n_aps: int,
        n_channels: int,
        lo: float = 1.0,
        hi: float = 3.0,
        fading_mode: FadingMode = FadingMode.BLOCK_CONSTANT,
    ) -> "ChannelModel":
        c = rng.uniform(lo, hi, size=(n_aps, n_channels))
        return cls(spectral_efficiency=c, fading_mode=fading_mode, draw_lo=lo, draw_hi=hi)

    def validate(self) -> None:
        c = self.spectral_efficiency
        if c.ndim != 2:
            raise ValueError("spectral_efficiency must be a 2-D (ap, channel) matrix")
        if np.any(c < self.draw_lo) or np.any(c > self.draw_hi):
            raise ValueError("spectral efficiency outside the configured draw range")

    def redraw(self, rng: np.random.Generator) -> None:
        if self.fading_mode is FadingMode.REDRAW_AT_EPOCH:
            self.spectral_efficiency = rng.uniform(
                self.draw_lo, self.draw_hi, size=self.spectral_efficiency.shape
            )

    def swap_rows(self, ap_a: int, ap_b: int) -> None:
        """Exchange two APs' spectral-efficiency rows (mid-run perturbation)."""
        c = self.spectral_efficiency
        c[[ap_a, ap_b], :] = c[[ap_b, ap_a], :]


def deliver_bits(channel: ChannelModel, ap: int, f: int, timing: TimingParams,
                 txop_duration: float | None = None) -> float:
    """Payload bits delivered by one won TXOP: C(ap, f) * bandwidth * txop."""
    if txop_duration is None:
        txop_duration = timing.txop
    return float(
        channel.spectral_efficiency[ap, f] * timing.channel_bandwidth * txop_duration
    )


@dataclass
class SlotOutcome:
    """Resolution of a single contention slot across all channels.

    transmitters maps channel -> tuple of AP ids that transmitted there;
    verdicts maps channel -> Verdict; observation/feedback are per AP.
    """

    transmitters: dict[int, tuple[int, ...]]
    verdicts: dict[int, Verdict]
    observation: dict[int, int]
    feedback: dict[int, Feedback]


def resolve_slot(
    intents: dict[int, int],
    primary: np.ndarray,
    n_channels: int,
) -> SlotOutcome:
    """Resolve one slot given transmit intents (ap -> channel).

    Every AP listed in intents must intend its own primary channel. Observation
    is Busy for an AP whenever at least one AP (itself included) transmitted on
    its primary channel. A sole transmitter earns ACK; colliding transmitters
    each earn Timeout; everyone else gets no feedback.
    """
    per_channel: dict[int, list[int]] = {}
    for ap, f in intents.items():
        if primary[ap] != f:
            raise ValueError(f"AP {ap} intends channel {f} but its primary is {primary[ap]}")
        per_channel.setdefault(f, []).append(ap)

    transmitters = {f: tuple(sorted(aps)) for f, aps in per_channel.items()}
    verdicts: dict[int, Verdict] = {}
    for f in range(n_channels):
        aps = transmitters.get(f, ())
        if len(aps) == 0:
            verdicts[f] = Verdict.IDLE
        elif len(aps) == 1:
            verdicts[f] = Verdict.SUCCESS
        else:
            verdicts[f] = Verdict.COLLISION

    observation: dict[int, int] = {}
    feedback: dict[int, Feedback] = {}
    for ap in range(len(primary)):
        f = int(primary[ap])
        observation[ap] = BUSY if transmitters.get(f) else IDLE
        if ap in intents:
            feedback[ap] = Feedback.ACK if verdicts[f] is Verdict.SUCCESS else Feedback.TIMEOUT
        else:
            feedback[ap] = Feedback.NONE
    return SlotOutcome(transmitters, verdicts, observation, feedback)


class RngStream:
    """Seeded RNG tree: one root seed, independent substreams per trial and AP.

    Identical seeds reproduce identical simulation traces. Substreams are
    derived through SeedSequence spawn keys, so trial i / AP k always sees the
    same stream no matter how trials are scheduled across workers.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def trial(self, trial_index: int) -> np.random.Generator:
        """Engine-level stream for one trial (channel draws, backoff draws)."""
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(trial_index, 0))
        )

    def agent(self, trial_index: int, ap: int) -> np.random.Generator:
        """Per-AP stream (weight init, exploration) within one trial."""
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(trial_index, 1 + ap))
        )
