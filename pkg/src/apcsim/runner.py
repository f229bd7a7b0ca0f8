"""Scenario execution: seeded Monte-Carlo trials and sweep fan-out.

Trials fan out across a thread pool sized by the APCSIM_WORKERS environment
variable (default 1); the reduce into a report is single-threaded and ordered
by trial index, so scheduling never affects results.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytics import MetricsTrace
from .engines import (
    DLCA_PROTOCOLS,
    Perturbation,
    run_dcf_trial,
    run_dlca_trial,
    run_shtxop_trial,
)
from .scenarios import ScenarioConfig
from .simcore import ChannelModel, FadingMode, RngStream

WORKERS_ENV = "APCSIM_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


@dataclass
class RunReport:
    """Aggregate of one scenario's trials."""

    config: ScenarioConfig
    trials: list[MetricsTrace]
    wall_seconds: list[float]

    @property
    def mean_throughput(self) -> float:
        return float(np.mean([t.throughput for t in self.trials]))

    @property
    def mean_utility(self) -> float | None:
        vals = [t.utility for t in self.trials if t.utility is not None]
        return float(np.mean(vals)) if vals else None

    @property
    def mean_collision_per_txop(self) -> float:
        return float(np.mean([t.collision_per_txop for t in self.trials]))

    @property
    def mean_idle_per_txop(self) -> float:
        return float(np.mean([t.idle_per_txop for t in self.trials]))

    @property
    def total_wall_seconds(self) -> float:
        return float(sum(self.wall_seconds))


def run_trial(config: ScenarioConfig, trial_index: int) -> MetricsTrace:
    """One seeded trial of the configured scenario."""
    streams = RngStream(config.seed)
    rng = streams.trial(trial_index)
    channel = ChannelModel.draw(
        rng,
        config.n_aps,
        config.n_channels,
        lo=config.draw_lo,
        hi=config.draw_hi,
        fading_mode=FadingMode(config.fading_mode),
    )
    if config.protocol in DLCA_PROTOCOLS:
        agent_rngs = [streams.agent(trial_index, ap) for ap in range(config.n_aps)]
        perturbation = None
        tick = config.swap_tick()
        if tick is not None:
            p = config.perturbation
            perturbation = Perturbation(p.ap_a, p.ap_b, tick)
        return run_dlca_trial(
            config.protocol,
            config.n_aps,
            config.n_channels,
            config.timing,
            channel,
            rng,
            agent_rngs,
            config.hyper,
            config.n_slots(),
            trace_every=config.trace_every,
            perturbation=perturbation,
        )
    if config.protocol == "sh_txop":
        return run_shtxop_trial(
            config.n_aps,
            config.n_channels,
            config.timing,
            channel,
            rng,
            config.duration,
            cw_min=config.cw_min,
            m=config.retry_stages,
        )
    return run_dcf_trial(
        config.protocol,
        config.n_aps,
        config.n_channels,
        config.timing,
        channel,
        rng,
        config.duration,
        cw_min=config.cw_min,
        m=config.retry_stages,
    )


def run_scenario(config: ScenarioConfig) -> RunReport:
    """Run all trials of a scenario; deterministic given the config seed."""
    config.validate()
    workers = worker_count()

    def timed(i: int) -> tuple[MetricsTrace, float]:
        t0 = time.perf_counter()
        metrics = run_trial(config, i)
        return metrics, time.perf_counter() - t0

    indices = range(config.trials)
    if workers == 1:
        results = [timed(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(timed, indices))
    return RunReport(
        config=config,
        trials=[m for m, _ in results],
        wall_seconds=[w for _, w in results],
    )


@dataclass
class SweepResult:
    param: str
    values: list
    reports: list[RunReport] = field(default_factory=list)


_SWEEP_FIELDS = {
    "N": "n_aps",
    "F": "n_channels",
    "n_aps": "n_aps",
    "n_channels": "n_channels",
    "trials": "trials",
    "seed": "seed",
}


def parse_sweep_spec(spec: str) -> tuple[str, list[int]]:
    """Parse a sweep like "N=8..56:8" into a config field and its values.

    Also accepts an explicit list form "N=8,16,24".
    """
    name, sep, rest = spec.partition("=")
    if not sep or not rest:
        raise ValueError(f"sweep spec {spec!r} must look like N=8..56:8 or N=8,16")
    if name not in _SWEEP_FIELDS:
        raise ValueError(
            f"cannot sweep {name!r}; supported: {', '.join(sorted(set(_SWEEP_FIELDS)))}"
        )
    field_name = _SWEEP_FIELDS[name]
    try:
        if ".." in rest:
            lo_s, _, hi_rest = rest.partition("..")
            hi_s, _, step_s = hi_rest.partition(":")
            lo, hi = int(lo_s), int(hi_s)
            step = int(step_s) if step_s else 1
            if step < 1 or hi < lo:
                raise ValueError
            values = list(range(lo, hi + 1, step))
        else:
            values = [int(v) for v in rest.split(",")]
    except ValueError:
        raise ValueError(f"cannot parse sweep values in {spec!r}") from None
    if not values:
        raise ValueError(f"sweep {spec!r} produced no values")
    return field_name, values


def run_sweep(base: ScenarioConfig, spec: str) -> SweepResult:
    """Run the base scenario once per value of the swept parameter."""
    field_name, values = parse_sweep_spec(spec)
    result = SweepResult(param=field_name, values=values)
    for v in values:
        cfg = ScenarioConfig(**{**base.__dict__, field_name: v})
        result.reports.append(run_scenario(cfg))
    return result
