"""Trial engines: the time loops that drive each protocol family.

Three loop shapes cover the seven protocol variants. DCF basic and RTS/CTS
run independent per-channel backoff loops over a fixed round-robin channel
assignment. SH-TXOP runs one wide-band backoff loop whose winner splits the
sub-channels. The DLCA variants run on a global grid of fixed-length
contention slots with per-slot learning and periodic controller rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import apc
from .agent import DlcaAgent, Hyperparams
from .analytics import MetricsTrace, optimize_window
from .apc import FairnessLedger
from .protocols import BackoffState, shtxop_assignment
from .simcore import (
    BUSY,
    ChannelModel,
    FadingMode,
    TimingParams,
    Verdict,
    advance_clock,
    deliver_bits,
)

DCF_PROTOCOLS = ("dcf_basic", "rts_cts", "rts_cts_optimized")
DLCA_PROTOCOLS = ("dlca", "dlca_greedy", "dlca_greedy_fomaml")


def round_robin_primary(n_aps: int, n_channels: int) -> np.ndarray:
    """Fixed primary-channel map used by the non-learning protocols."""
    return np.arange(n_aps, dtype=np.int64) % n_channels


@dataclass
class Perturbation:
    """Mid-run spectral-efficiency swap between two APs."""

    ap_a: int
    ap_b: int
    at_tick: int


def _run_channel_dcf(
    aps: list[int],
    f: int,
    protocol: str,
    timing: TimingParams,
    channel: ChannelModel,
    rng: np.random.Generator,
    duration: float,
    cw_min: int,
    m: int,
    delivered: np.ndarray,
):
    """One channel's backoff loop; returns (success, collision, idle) counts.

    Each pass resolves one virtual slot: if nobody's counter is at zero the
    channel idles for one slot time and counters decrement; otherwise the
    zero-counter APs transmit and everyone else stays frozen for the whole
    transaction (its trailing DIFS included in the transaction duration).
    """
    if protocol == "dcf_basic":
        t_success = advance_clock(timing, "basic_success")
        t_collision = advance_clock(timing, "basic_collision")
    else:
        t_success = advance_clock(timing, "rts_success")
        t_collision = advance_clock(timing, "rts_collision")
    sigma = timing.slot_time

    states = [BackoffState.fresh(rng, cw_min=cw_min, m=m) for _ in aps]
    successes = collisions = idles = 0
    now = 0.0
    while now < duration:
        zeros = [i for i, st in enumerate(states) if st.counter == 0]
        if not zeros:
            now += sigma
            idles += 1
            for st in states:
                st.on_idle_slot()
        elif len(zeros) == 1:
            i = zeros[0]
            now += t_success
            successes += 1
            delivered[aps[i]] += deliver_bits(channel, aps[i], f, timing)
            states[i].on_success(rng)
        else:
            now += t_collision
            collisions += 1
            for i in zeros:
                states[i].on_collision(rng)
    return successes, collisions, idles


def run_dcf_trial(
    protocol: str,
    n_aps: int,
    n_channels: int,
    timing: TimingParams,
    channel: ChannelModel,
    rng: np.random.Generator,
    duration: float,
    cw_min: int = 32,
    m: int = 6,
) -> MetricsTrace:
    """DCF basic / RTS/CTS trial over fixed round-robin channel assignment."""
    primary = round_robin_primary(n_aps, n_channels)
    delivered = np.zeros(n_aps)
    successes = collisions = idles = 0
    for f in range(n_channels):
        aps = [ap for ap in range(n_aps) if primary[ap] == f]
        if not aps:
            continue
        w = cw_min
        if protocol == "rts_cts_optimized":
            mean_rate = float(
                np.mean(channel.spectral_efficiency[aps, f]) * timing.channel_bandwidth
            )
            w = optimize_window(len(aps), timing, packet_bits=mean_rate * timing.txop, m=m)
        s, c, i = _run_channel_dcf(
            aps, f, protocol, timing, channel, rng, duration, w, m, delivered
        )
        successes += s
        collisions += c
        idles += i
    return MetricsTrace.from_counts(
        protocol, n_aps, n_channels, duration, delivered, successes, collisions, idles
    )


def run_shtxop_trial(
    n_aps: int,
    n_channels: int,
    timing: TimingParams,
    channel: ChannelModel,
    rng: np.random.Generator,
    duration: float,
    cw_min: int = 32,
    m: int = 6,
) -> MetricsTrace:
    """SH-TXOP trial: wide-band contention, winner splits the sub-channels.

    The wide-band backoff has no ACK step, so colliding winners redraw their
    counters without doubling the window; a collision burns a whole TXOP.
    """
    t_success = advance_clock(timing, "shtxop_success")
    t_collision = advance_clock(timing, "shtxop_collision")
    sigma = timing.slot_time

    states = [BackoffState.fresh(rng, cw_min=cw_min, m=m) for _ in range(n_aps)]
    delivered = np.zeros(n_aps)
    successes = collisions = idles = 0
    now = 0.0
    while now < duration:
        zeros = [ap for ap, st in enumerate(states) if st.counter == 0]
        if not zeros:
            now += sigma
            idles += 1
            for st in states:
                st.on_idle_slot()
        elif len(zeros) == 1:
            winner = zeros[0]
            now += t_success
            successes += 1
            plan = shtxop_assignment(winner, n_aps, n_channels)
            for f, ap in plan.sub_channel_assignment.items():
                delivered[ap] += deliver_bits(channel, ap, f, timing)
            states[winner].on_success(rng)
        else:
            now += t_collision
            collisions += 1
            for ap in zeros:
                states[ap].on_collision_no_feedback(rng)
    return MetricsTrace.from_counts(
        "sh_txop", n_aps, n_channels, duration, delivered, successes, collisions, idles
    )


def run_dlca_trial(
    protocol: str,
    n_aps: int,
    n_channels: int,
    timing: TimingParams,
    channel: ChannelModel,
    trial_rng: np.random.Generator,
    agent_rngs: list[np.random.Generator],
    hyper: Hyperparams,
    n_slots: int,
    trace_every: int = 500,
    perturbation: Perturbation | None = None,
) -> MetricsTrace:
    """DLCA trial on the global contention-slot grid.

    protocol selects the controller duties: "dlca" keeps a fixed round-robin
    allocation and fully independent learners; "dlca_greedy" adds the periodic
    greedy PF reallocation; "dlca_greedy_fomaml" additionally aggregates and
    broadcasts the Q-networks on the same period.
    """
    slot_len = advance_clock(timing, "dlca_contention_slot")
    period = max(1, round(hyper.fomaml_period / slot_len))
    bandwidth = timing.channel_bandwidth

    agents = [
        DlcaAgent(ap, n_aps, agent_rngs[ap], hyper) for ap in range(n_aps)
    ]
    ledger = FairnessLedger.zeros(n_aps)
    if protocol == "dlca":
        primary = round_robin_primary(n_aps, n_channels)
        counts = np.bincount(primary, minlength=n_channels)
        plan = apc.AllocationPlan(primary, counts)
    else:
        plan = apc.greedy_pf_allocate(channel.spectral_efficiency, bandwidth, ledger)
    for ap, c in enumerate(apc.broadcast_contender_counts(plan)):
        agents[ap].set_contender_count(int(c))

    delivered = np.zeros(n_aps)
    successes = collisions = idles = 0
    # windowed accumulators for the trace
    win_bits = np.zeros(n_aps)
    win_succ = win_coll = win_idle = 0
    ticks, tr_tp, tr_pf, tr_counts = [], [], [], []

    for t in range(n_slots):
        if perturbation is not None and t == perturbation.at_tick:
            channel.swap_rows(perturbation.ap_a, perturbation.ap_b)

        primary = plan.primary_channel
        state_vecs = [ag.state_vector() for ag in agents]
        actions = np.fromiter(
            (ag.act(s) for ag, s in zip(agents, state_vecs)), dtype=np.int64, count=n_aps
        )
        # resolve all channels at once; verdict per channel
        slot_bits = np.zeros(n_aps)
        n_tx = np.bincount(primary[actions == 1], minlength=n_channels)
        for f in np.flatnonzero(n_tx):
            if n_tx[f] == 1:
                winner = int(np.flatnonzero((primary == f) & (actions == 1))[0])
                slot_bits[winner] = deliver_bits(channel, winner, int(f), timing)
                successes += 1
                win_succ += 1
            else:
                collisions += 1
                win_coll += 1
        idle_channels = int(n_channels - np.count_nonzero(n_tx))
        idles += idle_channels
        win_idle += idle_channels

        for ap, ag in enumerate(agents):
            action = int(actions[ap])
            busy = BUSY if n_tx[primary[ap]] > 0 else 0
            if action == 1:
                outcome = 1 if slot_bits[ap] > 0.0 else -1
            else:
                outcome = 0
            reward = ag.score_slot(action, outcome, busy)
            ag.state.push(action, busy)
            next_vec = ag.state_vector()
            ag.record_and_maybe_train(state_vecs[ap], action, reward, next_vec)

        delivered += slot_bits
        win_bits += slot_bits
        ledger.update(slot_bits / slot_len)

        if t % period == period - 1:
            if protocol in ("dlca_greedy", "dlca_greedy_fomaml"):
                channel.redraw(trial_rng)
                plan = apc.greedy_pf_allocate(
                    channel.spectral_efficiency, bandwidth, ledger, epoch=t
                )
                for ap, c in enumerate(apc.broadcast_contender_counts(plan)):
                    agents[ap].set_contender_count(int(c))
            if protocol == "dlca_greedy_fomaml":
                apc.fomaml_round(
                    agents, hyper.rho, hyper.gamma, trial_rng, hyper.batch_size
                )

        if (t + 1) % trace_every == 0:
            window_time = trace_every * slot_len
            rates = win_bits / window_time
            counts = plan.per_channel_count[plan.primary_channel]
            phi = (
                channel.spectral_efficiency[np.arange(n_aps), plan.primary_channel]
                * bandwidth
                / np.maximum(counts, 1)
            )
            ticks.append(t + 1)
            tr_tp.append(float(rates.sum()))
            tr_pf.append(rates / phi)
            tr_counts.append((win_succ, win_coll, win_idle))
            win_bits = np.zeros(n_aps)
            win_succ = win_coll = win_idle = 0

    duration = n_slots * slot_len
    return MetricsTrace.from_counts(
        protocol,
        n_aps,
        n_channels,
        duration,
        delivered,
        successes,
        collisions,
        idles,
        trace_ticks=np.array(ticks, dtype=np.int64),
        trace_throughput=np.array(tr_tp),
        trace_pf=np.array(tr_pf) if tr_pf else None,
        trace_counts=np.array(tr_counts, dtype=np.int64) if tr_counts else None,
    )
