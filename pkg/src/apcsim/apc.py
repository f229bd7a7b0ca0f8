"""Centralized AP controller: PF channel allocation and parameter aggregation.

The controller runs two periodic duties on the same tick: reassigning every
AP's primary channel with a greedy proportional-fair pass, and aggregating
the per-AP Q-network parameters (average, one global gradient step on a batch
drawn across all APs' replay buffers, broadcast back).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qnn
from .agent import DlcaAgent

# Guards the PF score at cold start, where average throughput is still zero.
_DTILDE_FLOOR = 1e-12


@dataclass
class AllocationPlan:
    """Primary-channel map plus the per-channel contender counts."""

    primary_channel: np.ndarray   # (N,) channel index per AP
    per_channel_count: np.ndarray  # (F,) contender count per channel
    epoch: int = 0

    def validate(self) -> None:
        n_aps = self.primary_channel.shape[0]
        counts = np.bincount(self.primary_channel, minlength=self.per_channel_count.shape[0])
        if not np.array_equal(counts, self.per_channel_count):
            raise ValueError("per_channel_count inconsistent with the channel map")
        if int(self.per_channel_count.sum()) != n_aps:
            raise ValueError("every AP must be mapped to exactly one channel")


@dataclass
class FairnessLedger:
    """Running average throughput per AP (the PF denominator)."""

    avg_throughput: np.ndarray  # (N,) bits/s
    slot_index: int = 0

    @classmethod
    def zeros(cls, n_aps: int) -> "FairnessLedger":
        return cls(avg_throughput=np.zeros(n_aps), slot_index=0)

    def update(self, delivered_rates: np.ndarray) -> None:
        """Fold slot t's instantaneous rates into the running average.

        D_t = (1 - 1/t) D_{t-1} + x_t / t, with t counted from 1.
        """
        self.slot_index += 1
        t = self.slot_index
        self.avg_throughput *= 1.0 - 1.0 / t
        self.avg_throughput += delivered_rates / t


def update_average_throughput(ledger: FairnessLedger, delivered_rates: np.ndarray) -> FairnessLedger:
    ledger.update(delivered_rates)
    return ledger


def greedy_pf_allocate(
    spectral_efficiency: np.ndarray,
    bandwidth: float,
    ledger: FairnessLedger,
    epoch: int = 0,
) -> AllocationPlan:
    """Assign each AP a primary channel by the greedy proportional-fair rule.

    APs are visited in ascending id order. Each picks the channel maximizing
    phi(f) / D = (C(ap, f) * bandwidth / (n(f) + 1)) / D(ap), where n(f)
    counts the APs already placed on f, so later APs see earlier choices.
    Ties resolve to the lowest channel id.
    """
    n_aps, n_channels = spectral_efficiency.shape
    counts = np.zeros(n_channels, dtype=np.int64)
    assignment = np.zeros(n_aps, dtype=np.int64)
    dtilde = np.maximum(ledger.avg_throughput, _DTILDE_FLOOR)
    for ap in range(n_aps):
        phi = spectral_efficiency[ap] * bandwidth / (counts + 1)
        score = phi / dtilde[ap]
        best = int(np.argmax(score))  # argmax returns the first (lowest f) maximum
        assignment[ap] = best
        counts[best] += 1
    return AllocationPlan(primary_channel=assignment, per_channel_count=counts, epoch=epoch)


def broadcast_contender_counts(plan: AllocationPlan) -> np.ndarray:
    """Per-AP contender count: how many APs share this AP's primary channel."""
    return plan.per_channel_count[plan.primary_channel]


def fomaml_round(
    agents: list[DlcaAgent],
    rho: float,
    gamma: float,
    rng: np.random.Generator,
    batch_size: int = 32,
) -> qnn.QnnParams:
    """Aggregate agent networks and broadcast the result.

    theta_g starts as the element-wise mean of all agents' parameters, then
    takes one semi-gradient step on a batch drawn uniformly across the union
    of the agents' replay buffers. Each sample's TD error and gradient are
    evaluated at the contributing agent's own pre-average parameters (the
    first-order approximation), and the averaged update lands on theta_g.
    The broadcast replaces every agent's parameters.
    """
    theta_g = qnn.average_params([ag.params for ag in agents])

    sizes = np.array([len(ag.buffer) for ag in agents])
    total = int(sizes.sum())
    if total >= 1:
        draw = min(batch_size, total)
        picks = rng.integers(0, total, size=draw)
        bounds = np.cumsum(sizes)
        grad_w = [np.zeros_like(w) for w in theta_g.weights]
        grad_b = [np.zeros_like(b) for b in theta_g.biases]
        for p in picks:
            k = int(np.searchsorted(bounds, p, side="right"))
            offset = int(bounds[k - 1]) if k > 0 else 0
            s, a, r, s2 = agents[k].buffer.get(int(p) - offset)
            local = agents[k].params
            v = qnn.target_value(r, qnn.forward(local, s2), gamma)
            q, g = qnn.q_gradient(local, s, a)
            td = v - q
            for gw, dw in zip(grad_w, g.weights):
                gw += td * dw
            for gb, db in zip(grad_b, g.biases):
                gb += td * db
        for w, gw in zip(theta_g.weights, grad_w):
            w += rho * gw / draw
        for b, gb in zip(theta_g.biases, grad_b):
            b += rho * gb / draw

    for ag in agents:
        ag.params = theta_g.copy()
    return theta_g
