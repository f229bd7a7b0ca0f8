"""Closed-form throughput model, contention fixed point, and run metrics.

The analytical model treats one channel at a time. Contention among n
saturated stations is summarized by the per-virtual-slot transmit probability
tau and conditional collision probability p, coupled through the classic
backoff fixed point. Throughput then follows from the airtime composition:
the fraction of channel time spent in a station's successful transactions,
times the payload share of each transaction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simcore import TimingParams


class FixedPointError(RuntimeError):
    """The damped iteration failed to converge."""


@dataclass(frozen=True)
class OverheadModel:
    """Protocol overhead in seconds plus the rates that turn it into bits."""

    delta0_rts: float
    delta0_basic: float
    packet_bits: float
    channel_rate: float
    basic_rate: float

    @property
    def delta_rts_bits(self) -> float:
        return self.delta0_rts * self.channel_rate

    @property
    def delta_basic_bits(self) -> float:
        return self.delta0_basic * self.channel_rate


def overhead_rts(timing: TimingParams) -> float:
    """RTS/CTS access overhead per successful transaction, in seconds.

    Three control frames at the basic rate (each with its PHY preamble), the
    data-frame header, one DIFS, and the three SIFS gaps of the sequence.
    """
    return (
        timing.rts
        + timing.cts
        + timing.ack
        + timing.header
        + timing.difs
        + 3.0 * timing.sifs
    )


def overhead_basic(timing: TimingParams) -> float:
    """Plain DCF overhead: ACK, data-frame header, one DIFS, one SIFS."""
    return timing.ack + timing.header + timing.difs + timing.sifs


def per_ap_rate(z: float, packet_bits: float, channel_rate: float, delta0: float) -> float:
    """Long-run data rate x = z * L * U / (L + delta), delta = delta0 * U bits."""
    delta = delta0 * channel_rate
    return z * packet_bits * channel_rate / (packet_bits + delta)


@dataclass(frozen=True)
class SlotProfile:
    """Durations of the three virtual-slot outcomes on one channel."""

    sigma: float   # empty slot
    tau_t: float   # successful transaction, inter-frame spaces included
    tau_f: float   # collided transaction

    def expected_slot(self, p_idle: float, p_success: float, p_collision: float) -> float:
        return p_idle * self.sigma + p_success * self.tau_t + p_collision * self.tau_f


def rts_profile(timing: TimingParams) -> SlotProfile:
    """Virtual-slot durations for RTS/CTS access with TXOP payloads."""
    return SlotProfile(
        sigma=timing.slot_time,
        tau_t=overhead_rts(timing) + timing.txop,
        tau_f=timing.rts + timing.cts_timeout + timing.difs,
    )


def basic_profile(timing: TimingParams) -> SlotProfile:
    """Virtual-slot durations for plain DCF; collisions waste the whole TXOP."""
    return SlotProfile(
        sigma=timing.slot_time,
        tau_t=overhead_basic(timing) + timing.txop,
        tau_f=timing.header + timing.txop + timing.ack_timeout + timing.difs,
    )


@dataclass
class ContentionSolution:
    """Fixed-point summary for n saturated stations on one channel."""

    n_aps: int
    tau: float
    p: float
    z: float               # per-AP airtime fraction of successful transactions
    p_transmit: float      # P(at least one station transmits in a slot)
    p_success: float       # P(exactly one transmits)
    expected_slot: float   # seconds per virtual slot, 0 when no profile given
    residual: float
    iterations: int


def _tau_of_p(p: float, w: int, m: int) -> float:
    num = 2.0 * (1.0 - 2.0 * p)
    den = (1.0 - 2.0 * p) * (w + 1) + p * w * (1.0 - (2.0 * p) ** m)
    if den == 0.0:  # exact p = 1/2 kills both terms; nudge off the pole
        return _tau_of_p(p + 1e-12, w, m)
    return num / den


def bianchi_fixed_point(
    n_aps: int,
    w: int = 32,
    m: int = 6,
    profile: SlotProfile | None = None,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> ContentionSolution:
    """Solve the coupled (tau, p) equations by damped fixed-point iteration.

    tau = 2(1-2p) / ((1-2p)(W+1) + pW(1-(2p)^m)), p = 1 - (1-tau)^(n-1).
    A station alone on the channel has p = 0 and the closed form tau = 2/(W+1).
    z is the per-AP fraction of channel airtime carried by successful
    transactions; it needs the slot profile and is 0 when none is supplied.
    """
    if n_aps < 1:
        raise ValueError("need at least one station")
    tau = 2.0 / (w + 1)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = 1.0 - (1.0 - tau) ** (n_aps - 1)
        tau_next = _tau_of_p(p, w, m)
        delta = tau_next - tau
        tau = min(max(tau + damping * delta, 1e-12), 1.0 - 1e-12)
        if abs(delta) < tol:
            break
    else:
        raise FixedPointError(f"no convergence for n={n_aps}, W={w}, m={m}")
    p = 1.0 - (1.0 - tau) ** (n_aps - 1)
    residual = abs(tau - _tau_of_p(p, w, m))
    p_transmit = 1.0 - (1.0 - tau) ** n_aps
    p_success = n_aps * tau * (1.0 - tau) ** (n_aps - 1)
    if profile is not None:
        e_slot = profile.expected_slot(
            1.0 - p_transmit, p_success, p_transmit - p_success
        )
        z = (p_success / n_aps) * profile.tau_t / e_slot
    else:
        e_slot = 0.0
        z = 0.0
    return ContentionSolution(
        n_aps=n_aps,
        tau=tau,
        p=p,
        z=z,
        p_transmit=p_transmit,
        p_success=p_success,
        expected_slot=e_slot,
        residual=residual,
        iterations=iterations,
    )


def channel_throughput(
    n_aps: int,
    channel_rates: np.ndarray,
    timing: TimingParams,
    w: int = 32,
    m: int = 6,
    protocol: str = "rts_cts",
) -> float:
    """Analytical aggregate rate of one channel shared by n saturated APs.

    channel_rates holds each sharing AP's payload rate U = C * bandwidth.
    Every transaction carries one TXOP, so per_ap_rate reduces to
    z * U * txop / (txop + delta0) for each AP.
    """
    if protocol in ("rts_cts", "rts_cts_optimized"):
        profile, delta0 = rts_profile(timing), overhead_rts(timing)
    elif protocol == "dcf_basic":
        profile, delta0 = basic_profile(timing), overhead_basic(timing)
    else:
        raise ValueError(f"no analytical model for protocol {protocol!r}")
    solution = bianchi_fixed_point(n_aps, w=w, m=m, profile=profile)
    total = 0.0
    for u in np.asarray(channel_rates, dtype=float):
        packet_bits = u * timing.txop
        total += per_ap_rate(solution.z, packet_bits, u, delta0)
    return total


def optimize_window(
    n_aps: int,
    timing: TimingParams,
    packet_bits: float,
    m: int = 6,
    protocol: str = "rts_cts",
) -> int:
    """Initial contention window maximizing the analytical channel throughput.

    Grid search over W in {2, 4, ..., 4096}; the payload rate is inferred
    from packet_bits per TXOP.
    """
    u = packet_bits / timing.txop
    best_w, best_x = None, -1.0
    for k in range(1, 13):
        w = 2 ** k
        x = channel_throughput(
            n_aps, np.full(n_aps, u), timing, w=w, m=m, protocol=protocol
        )
        if x > best_x:
            best_w, best_x = w, x
    return best_w


def compute_utility(avg_rates: np.ndarray) -> float:
    """Network utility sum_n log(rate_n), natural log."""
    rates = np.asarray(avg_rates, dtype=float)
    if np.any(rates <= 0.0):
        raise ValueError("utility undefined: some AP has zero average rate")
    return float(np.sum(np.log(rates)))


def pf_ratio(avg_rate: float, phi: float) -> float:
    """Proportional-fairness ratio b = average rate over proportional rate."""
    if phi <= 0.0:
        raise ValueError("phi must be positive")
    return avg_rate / phi


@dataclass
class MetricsTrace:
    """Per-run metric summary plus optional time series."""

    protocol: str
    n_aps: int
    n_channels: int
    duration: float                 # simulated seconds
    throughput: float               # aggregate bits/s
    per_ap_rate: np.ndarray         # (N,) long-run bits/s per AP
    success_slots: int
    collision_slots: int
    idle_slots: int
    collision_per_txop: float
    idle_per_txop: float
    utility: float | None
    trace_ticks: np.ndarray | None = None
    trace_throughput: np.ndarray | None = None
    trace_pf: np.ndarray | None = None  # (len(ticks), N) windowed PF ratios
    trace_counts: np.ndarray | None = None  # (len(ticks), 3) success/collision/idle

    @classmethod
    def from_counts(
        cls,
        protocol: str,
        n_aps: int,
        n_channels: int,
        duration: float,
        delivered_bits: np.ndarray,
        success_slots: int,
        collision_slots: int,
        idle_slots: int,
        trace_ticks=None,
        trace_throughput=None,
        trace_pf=None,
        trace_counts=None,
    ) -> "MetricsTrace":
        per_ap = np.asarray(delivered_bits, dtype=float) / duration
        try:
            utility = compute_utility(per_ap)
        except ValueError:
            utility = None
        successes = max(success_slots, 1)
        return cls(
            protocol=protocol,
            n_aps=n_aps,
            n_channels=n_channels,
            duration=duration,
            throughput=float(per_ap.sum()),
            per_ap_rate=per_ap,
            success_slots=success_slots,
            collision_slots=collision_slots,
            idle_slots=idle_slots,
            collision_per_txop=collision_slots / successes,
            idle_per_txop=idle_slots / successes,
            utility=utility,
            trace_ticks=trace_ticks,
            trace_throughput=trace_throughput,
            trace_pf=trace_pf,
            trace_counts=trace_counts,
        )
