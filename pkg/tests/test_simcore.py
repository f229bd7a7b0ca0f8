"""Timing arithmetic, slot resolution, channel model, RNG streams."""

import numpy as np
import pytest

from apcsim.simcore import (
    BUSY,
    IDLE,
    ChannelModel,
    FadingMode,
    Feedback,
    RngStream,
    TimingParams,
    Verdict,
    advance_clock,
    deliver_bits,
    resolve_slot,
)

# Durations recomputed independently with exact rational arithmetic
# (6 Mb/s basic rate, 20 us PHY preamble, Table-style MAC constants).
EXPECTED_US = {
    "backoff_slot": 50.0,
    "rts_cts_exchange": 141.33333333333334,
    "txop_slot": 774.6666666666667,
    "dlca_contention_slot": 848.0,
    "shtxop_atf": 41.33333333333333,
    "rts_success": 1044.0,
    "rts_collision": 474.6666666666667,
    "basic_success": 902.6666666666666,
    "basic_collision": 1136.0,
    "shtxop_success": 837.3333333333334,
    "shtxop_collision": 768.0,
}


class TestDurations:
    @pytest.mark.parametrize("kind,expected", sorted(EXPECTED_US.items()))
    def test_composite_durations(self, kind, expected):
        timing = TimingParams()
        assert advance_clock(timing, kind) * 1e6 == pytest.approx(expected, rel=1e-12)

    def test_frame_airtimes(self):
        t = TimingParams()
        assert t.rts * 1e6 == pytest.approx(46.666666666666664, rel=1e-12)
        assert t.cts * 1e6 == pytest.approx(38.66666666666667, rel=1e-12)
        assert t.ack == t.cts  # same body size
        assert t.atf * 1e6 == pytest.approx(41.33333333333333, rel=1e-12)
        assert t.header * 1e6 == pytest.approx(68.0, rel=1e-12)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown slot kind"):
            advance_clock(TimingParams(), "warp_speed")

    def test_dcf_and_rts_transactions_differ_by_handshake(self):
        # the basic-mode success is the RTS success minus the handshake cost
        t = TimingParams()
        handshake = t.rts + t.sifs + t.cts + t.sifs
        assert advance_clock(t, "rts_success") - advance_clock(
            t, "basic_success"
        ) == pytest.approx(handshake, rel=1e-12)

    def test_validate_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            TimingParams(slot_time=0.0).validate()
        with pytest.raises(ValueError):
            TimingParams(txop=1e-9).validate()  # txop shorter than the handshake


class TestChannelModel:
    def test_draw_within_range(self):
        rng = np.random.default_rng(1)
        ch = ChannelModel.draw(rng, 6, 4, lo=1.0, hi=3.0)
        ch.validate()
        assert ch.spectral_efficiency.shape == (6, 4)
        assert np.all(ch.spectral_efficiency >= 1.0)
        assert np.all(ch.spectral_efficiency <= 3.0)

    def test_block_constant_never_redraws(self):
        rng = np.random.default_rng(2)
        ch = ChannelModel.draw(rng, 3, 3)
        before = ch.spectral_efficiency.copy()
        ch.redraw(rng)
        np.testing.assert_array_equal(ch.spectral_efficiency, before)

    def test_epoch_mode_redraws(self):
        rng = np.random.default_rng(3)
        ch = ChannelModel.draw(rng, 3, 3, fading_mode=FadingMode.REDRAW_AT_EPOCH)
        before = ch.spectral_efficiency.copy()
        ch.redraw(rng)
        assert not np.array_equal(ch.spectral_efficiency, before)
        ch.validate()

    def test_swap_rows(self):
        rng = np.random.default_rng(4)
        ch = ChannelModel.draw(rng, 4, 2)
        a = ch.spectral_efficiency[1].copy()
        b = ch.spectral_efficiency[3].copy()
        ch.swap_rows(1, 3)
        np.testing.assert_array_equal(ch.spectral_efficiency[1], b)
        np.testing.assert_array_equal(ch.spectral_efficiency[3], a)

    def test_deliver_bits_is_rate_times_txop(self):
        ch = ChannelModel(spectral_efficiency=np.array([[2.0]]))
        bits = deliver_bits(ch, 0, 0, TimingParams())
        assert bits == pytest.approx(2.0 * 20e6 * 640e-6, rel=1e-12)


class TestResolveSlot:
    def test_sole_transmitter_succeeds(self):
        primary = np.array([0, 0, 1])
        out = resolve_slot({1: 0}, primary, 2)
        assert out.verdicts[0] is Verdict.SUCCESS
        assert out.feedback[1] is Feedback.ACK
        assert out.observation[0] == BUSY  # shares channel 0
        assert out.observation[1] == BUSY  # own transmission counts
        assert out.observation[2] == IDLE

    def test_collision_times_out_everyone(self):
        primary = np.array([0, 0, 0])
        out = resolve_slot({0: 0, 2: 0}, primary, 1)
        assert out.verdicts[0] is Verdict.COLLISION
        assert out.feedback[0] is Feedback.TIMEOUT
        assert out.feedback[2] is Feedback.TIMEOUT
        assert out.feedback[1] is Feedback.NONE  # listener gets no feedback
        assert out.observation[1] == BUSY

    def test_channels_are_independent(self):
        primary = np.array([0, 1])
        out = resolve_slot({0: 0, 1: 1}, primary, 2)
        assert out.verdicts[0] is Verdict.SUCCESS
        assert out.verdicts[1] is Verdict.SUCCESS

    def test_transmit_off_primary_rejected(self):
        primary = np.array([0, 1])
        with pytest.raises(ValueError):
            resolve_slot({0: 1}, primary, 2)

    def test_empty_slot_is_idle_everywhere(self):
        primary = np.array([0, 1])
        out = resolve_slot({}, primary, 2)
        assert all(v is Verdict.IDLE for v in out.verdicts.values())
        assert all(obs == IDLE for obs in out.observation.values())
        assert all(fb is Feedback.NONE for fb in out.feedback.values())


class TestRngStream:
    def test_same_seed_same_draws(self):
        a = RngStream(7).trial(3).random(5)
        b = RngStream(7).trial(3).random(5)
        np.testing.assert_array_equal(a, b)

    def test_trial_and_agent_streams_are_distinct(self):
        s = RngStream(7)
        assert s.trial(0).random() != s.agent(0, 0).random()
        assert s.agent(0, 1).random() != s.agent(1, 1).random()
