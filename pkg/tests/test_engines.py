"""Trial-engine behavior: determinism, protocol contrasts, trace shapes."""

import numpy as np
import pytest

from apcsim.agent import Hyperparams
from apcsim.engines import (
    Perturbation,
    round_robin_primary,
    run_dcf_trial,
    run_dlca_trial,
    run_shtxop_trial,
)
from apcsim.simcore import ChannelModel, RngStream, TimingParams

TIMING = TimingParams()


def fixed_channel(matrix):
    c = np.asarray(matrix, dtype=float)
    return ChannelModel(spectral_efficiency=c, draw_lo=0.01, draw_hi=10.0)


def drawn_channel(seed, n, f):
    return ChannelModel.draw(np.random.default_rng(seed), n, f)


class TestRoundRobin:
    def test_wraps_over_channels(self):
        assert round_robin_primary(6, 4).tolist() == [0, 1, 2, 3, 0, 1]

    def test_single_channel(self):
        assert round_robin_primary(3, 1).tolist() == [0, 0, 0]


class TestDcfTrial:
    def test_same_seed_reproduces(self):
        a = run_dcf_trial("rts_cts", 6, 3, TIMING, drawn_channel(5, 6, 3),
                          np.random.default_rng(11), duration=0.25)
        b = run_dcf_trial("rts_cts", 6, 3, TIMING, drawn_channel(5, 6, 3),
                          np.random.default_rng(11), duration=0.25)
        np.testing.assert_array_equal(a.per_ap_rate, b.per_ap_rate)
        assert (a.success_slots, a.collision_slots, a.idle_slots) == (
            b.success_slots, b.collision_slots, b.idle_slots)

    def test_different_seed_differs(self):
        a = run_dcf_trial("rts_cts", 6, 3, TIMING, drawn_channel(5, 6, 3),
                          np.random.default_rng(11), duration=0.25)
        b = run_dcf_trial("rts_cts", 6, 3, TIMING, drawn_channel(5, 6, 3),
                          np.random.default_rng(12), duration=0.25)
        assert not np.array_equal(a.per_ap_rate, b.per_ap_rate)

    def test_single_ap_channels_never_collide(self):
        trace = run_dcf_trial("dcf_basic", 4, 4, TIMING, drawn_channel(0, 4, 4),
                              np.random.default_rng(1), duration=0.2)
        assert trace.collision_slots == 0
        assert np.all(trace.per_ap_rate > 0)

    def test_optimized_window_beats_default_when_uncontended(self):
        # one AP per channel: the optimizer drops W from 32 to 2 and nearly
        # eliminates idle backoff, so throughput must come out strictly higher
        channel = drawn_channel(3, 8, 8)
        plain = run_dcf_trial("rts_cts", 8, 8, TIMING, channel,
                              np.random.default_rng(2), duration=0.3)
        tuned = run_dcf_trial("rts_cts_optimized", 8, 8, TIMING, channel,
                              np.random.default_rng(2), duration=0.3)
        assert tuned.throughput > plain.throughput

    def test_empty_channels_are_skipped(self):
        trace = run_dcf_trial("rts_cts", 2, 5, TIMING, drawn_channel(7, 2, 5),
                              np.random.default_rng(3), duration=0.1)
        assert trace.per_ap_rate.shape == (2,)
        assert np.all(trace.per_ap_rate > 0)


class TestShTxopTrial:
    def test_every_ap_gets_subchannel_time(self):
        trace = run_shtxop_trial(4, 4, TIMING, drawn_channel(9, 4, 4),
                                 np.random.default_rng(4), duration=0.3)
        assert np.all(trace.per_ap_rate > 0)
        assert trace.success_slots > 0

    def test_more_aps_than_channels(self):
        trace = run_shtxop_trial(5, 2, TIMING, drawn_channel(10, 5, 2),
                                 np.random.default_rng(5), duration=0.3)
        # only the winner and its successor get the two sub-channels, but over
        # many TXOPs the rotation reaches everyone
        assert np.all(trace.per_ap_rate > 0)

    def test_reproducible(self):
        a = run_shtxop_trial(5, 2, TIMING, drawn_channel(10, 5, 2),
                             np.random.default_rng(6), duration=0.2)
        b = run_shtxop_trial(5, 2, TIMING, drawn_channel(10, 5, 2),
                             np.random.default_rng(6), duration=0.2)
        np.testing.assert_array_equal(a.per_ap_rate, b.per_ap_rate)


def dlca_rngs(seed, n_aps, trial=0):
    streams = RngStream(seed)
    return streams.trial(trial), [streams.agent(trial, ap) for ap in range(n_aps)]


class TestDlcaTrial:
    def test_trace_shapes_and_window_accounting(self):
        trial_rng, agent_rngs = dlca_rngs(21, 2)
        trace = run_dlca_trial(
            "dlca_greedy", 2, 2, TIMING, drawn_channel(21, 2, 2),
            trial_rng, agent_rngs, Hyperparams(), n_slots=1000, trace_every=250,
        )
        assert trace.trace_ticks.tolist() == [250, 500, 750, 1000]
        assert trace.trace_throughput.shape == (4,)
        assert trace.trace_pf.shape == (4, 2)
        assert trace.trace_counts.shape == (4, 3)
        # each slot resolves every channel exactly once
        assert np.all(trace.trace_counts.sum(axis=1) == 250 * 2)
        assert trace.success_slots == trace.trace_counts[:, 0].sum()

    def test_same_seeds_reproduce(self):
        runs = []
        for _ in range(2):
            trial_rng, agent_rngs = dlca_rngs(33, 2)
            runs.append(run_dlca_trial(
                "dlca", 2, 2, TIMING, drawn_channel(33, 2, 2),
                trial_rng, agent_rngs, Hyperparams(), n_slots=600,
            ))
        np.testing.assert_array_equal(runs[0].per_ap_rate, runs[1].per_ap_rate)
        assert runs[0].success_slots == runs[1].success_slots

    def test_round_robin_variant_never_collides_across_channels(self):
        # both APs prefer channel 0 strongly enough that the greedy allocator
        # would double-book it; the plain variant must keep them apart on the
        # fixed round-robin map, where a collision is impossible
        channel = fixed_channel([[3.0, 0.5], [3.0, 1.0]])
        trial_rng, agent_rngs = dlca_rngs(8, 2)
        trace = run_dlca_trial(
            "dlca", 2, 2, TIMING, channel, trial_rng, agent_rngs,
            Hyperparams(), n_slots=500,
        )
        assert trace.collision_slots == 0

    def test_greedy_variant_shares_the_better_channel(self):
        channel = fixed_channel([[3.0, 0.5], [3.0, 1.0]])
        trial_rng, agent_rngs = dlca_rngs(8, 2)
        trace = run_dlca_trial(
            "dlca_greedy", 2, 2, TIMING, channel, trial_rng, agent_rngs,
            Hyperparams(), n_slots=500,
        )
        # two untrained learners on one shared channel collide early and often
        assert trace.collision_slots > 0

    def test_perturbation_swaps_channel_rows(self):
        channel = drawn_channel(40, 2, 2)
        before = channel.spectral_efficiency.copy()
        trial_rng, agent_rngs = dlca_rngs(40, 2)
        run_dlca_trial(
            "dlca", 2, 2, TIMING, channel, trial_rng, agent_rngs,
            Hyperparams(), n_slots=50,
            perturbation=Perturbation(ap_a=0, ap_b=1, at_tick=10),
        )
        np.testing.assert_array_equal(channel.spectral_efficiency[0], before[1])
        np.testing.assert_array_equal(channel.spectral_efficiency[1], before[0])

    def test_fomaml_variant_runs_rounds(self):
        trial_rng, agent_rngs = dlca_rngs(50, 2)
        trace = run_dlca_trial(
            "dlca_greedy_fomaml", 2, 2, TIMING, drawn_channel(50, 2, 2),
            trial_rng, agent_rngs, Hyperparams(), n_slots=300,
        )
        # period is 118 slots, so two controller rounds fit in 300
        assert trace.throughput > 0

    @pytest.mark.parametrize("n_slots,trace_every", [(100, 300), (99, 100)])
    def test_no_trace_when_window_never_fills(self, n_slots, trace_every):
        trial_rng, agent_rngs = dlca_rngs(60, 2)
        trace = run_dlca_trial(
            "dlca", 2, 2, TIMING, drawn_channel(60, 2, 2),
            trial_rng, agent_rngs, Hyperparams(), n_slots=n_slots,
            trace_every=trace_every,
        )
        assert trace.trace_pf is None
        assert trace.trace_counts is None
