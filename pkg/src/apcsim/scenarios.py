"""Scenario configuration: presets, JSON loading, validation.

A scenario pins everything a run needs: protocol, topology, timing,
learning hyperparameters, trial count, and the seed. Named presets cover
the standard experiment setups; a JSON config may start from a preset and
override individual keys.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .agent import Hyperparams
from .engines import DCF_PROTOCOLS, DLCA_PROTOCOLS, Perturbation
from .simcore import FadingMode, TimingParams

PROTOCOLS = DCF_PROTOCOLS + ("sh_txop",) + DLCA_PROTOCOLS

# fraction of the run at which a preset-configured swap fires when the
# perturbation tick is left unset
SWAP_FRACTION = 0.3


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class ScenarioConfig:
    protocol: str
    n_aps: int
    n_channels: int
    trials: int = 10
    seed: int = 0
    duration: float = 5.0  # simulated seconds
    timing: TimingParams = field(default_factory=TimingParams)
    hyper: Hyperparams | None = None
    draw_lo: float = 1.0
    draw_hi: float = 3.0
    fading_mode: str = "block_constant"
    cw_min: int = 32
    retry_stages: int = 6
    trace_every: int = 500  # contention slots per trace window (dlca variants)
    perturbation: Perturbation | None = None
    preset: str | None = None

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(
                f"unknown protocol {self.protocol!r}; expected one of {', '.join(PROTOCOLS)}"
            )
        if self.n_aps < 1 or self.n_channels < 1:
            raise ConfigError("n_aps and n_channels must both be at least 1")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.duration > 0:
            raise ConfigError("duration must be a positive number of seconds")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if not 0 < self.draw_lo <= self.draw_hi:
            raise ConfigError("draw range must satisfy 0 < lo <= hi")
        try:
            FadingMode(self.fading_mode)
        except ValueError:
            modes = ", ".join(m.value for m in FadingMode)
            raise ConfigError(
                f"unknown fading_mode {self.fading_mode!r}; expected one of {modes}"
            ) from None
        if self.cw_min < 1 or self.retry_stages < 0:
            raise ConfigError("cw_min must be >= 1 and retry_stages >= 0")
        if self.trace_every < 1:
            raise ConfigError("trace_every must be at least 1")
        try:
            self.timing.validate()
        except ValueError as exc:
            raise ConfigError(f"timing: {exc}") from None
        if self.protocol in DLCA_PROTOCOLS:
            if self.hyper is None:
                raise ConfigError(f"protocol {self.protocol!r} requires hyperparams")
            try:
                self.hyper.validate()
            except ValueError as exc:
                raise ConfigError(f"hyperparams: {exc}") from None
        if self.perturbation is not None:
            if self.protocol not in DLCA_PROTOCOLS:
                raise ConfigError("perturbation is only meaningful for dlca variants")
            p = self.perturbation
            if not (0 <= p.ap_a < self.n_aps and 0 <= p.ap_b < self.n_aps):
                raise ConfigError("perturbation AP ids out of range")
            if p.ap_a == p.ap_b:
                raise ConfigError("perturbation needs two distinct APs")

    # -- slot-grid helpers -------------------------------------------------

    def dlca_slot_seconds(self) -> float:
        from .simcore import advance_clock

        return advance_clock(self.timing, "dlca_contention_slot")

    def n_slots(self) -> int:
        """Length of the DLCA contention-slot grid for this duration."""
        return max(1, round(self.duration / self.dlca_slot_seconds()))

    def swap_tick(self) -> int | None:
        """Resolved perturbation tick; None when no swap is configured."""
        if self.perturbation is None:
            return None
        if self.perturbation.at_tick >= 0:
            return self.perturbation.at_tick
        return round(SWAP_FRACTION * self.n_slots())

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "protocol": self.protocol,
            "n_aps": self.n_aps,
            "n_channels": self.n_channels,
            "trials": self.trials,
            "seed": self.seed,
            "duration": self.duration,
            "draw_lo": self.draw_lo,
            "draw_hi": self.draw_hi,
            "fading_mode": self.fading_mode,
            "cw_min": self.cw_min,
            "retry_stages": self.retry_stages,
            "trace_every": self.trace_every,
            "timing": dataclasses.asdict(self.timing),
        }
        if self.hyper is not None:
            d["hyperparams"] = dataclasses.asdict(self.hyper)
        if self.perturbation is not None:
            d["perturbation"] = dataclasses.asdict(self.perturbation)
        if self.preset is not None:
            d["preset"] = self.preset
        return d

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _apply(config_dict: dict) -> ScenarioConfig:
    d = dict(config_dict)
    preset = d.pop("preset", None)
    timing = TimingParams(**d.pop("timing", {}))
    hyper_d = d.pop("hyperparams", None)
    hyper = Hyperparams(**hyper_d) if hyper_d is not None else None
    pert_d = d.pop("perturbation", None)
    pert = Perturbation(**pert_d) if pert_d is not None else None
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return ScenarioConfig(
        timing=timing, hyper=hyper, perturbation=pert, preset=preset, **d
    )


def from_dict(config_dict: dict) -> ScenarioConfig:
    """Build a config from a JSON-shaped dict, resolving any preset base."""
    if not isinstance(config_dict, dict):
        raise ConfigError("config root must be a JSON object")
    name = config_dict.get("preset")
    if name is not None:
        base = preset(name).to_dict()
        overrides = {k: v for k, v in config_dict.items() if k != "preset"}
        for key in ("timing", "hyperparams", "perturbation"):
            if key in overrides and key in base and overrides[key] is not None:
                merged = dict(base[key])
                merged.update(overrides[key])
                overrides[key] = merged
        base.update(overrides)
        base["preset"] = name
        return _apply(base)
    return _apply(config_dict)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    cfg = from_dict(raw)
    cfg.validate()
    return cfg


# -- presets ----------------------------------------------------------------


def _slots_to_seconds(n_slots: int) -> float:
    from .simcore import advance_clock

    return n_slots * advance_clock(TimingParams(), "dlca_contention_slot")


def _fig5() -> ScenarioConfig:
    return ScenarioConfig(
        protocol="dlca_greedy_fomaml",
        n_aps=8,
        n_channels=8,
        trials=5,
        duration=_slots_to_seconds(50_000),
        hyper=Hyperparams(),
    )


def _fig6() -> ScenarioConfig:
    # tighter draw range keeps one clean channel available per AP at N = F
    return ScenarioConfig(
        protocol="dlca_greedy_fomaml",
        n_aps=8,
        n_channels=8,
        trials=10,
        duration=_slots_to_seconds(20_000),
        draw_lo=2.0,
        draw_hi=3.0,
        hyper=Hyperparams(),
    )


def _fig7() -> ScenarioConfig:
    return ScenarioConfig(
        protocol="dlca_greedy_fomaml",
        n_aps=16,
        n_channels=8,
        trials=10,
        duration=_slots_to_seconds(20_000),
        hyper=Hyperparams(),
    )


def _fig8() -> ScenarioConfig:
    return ScenarioConfig(
        protocol="dlca_greedy_fomaml",
        n_aps=16,
        n_channels=8,
        trials=1,
        duration=_slots_to_seconds(50_000),
        trace_every=500,
        hyper=Hyperparams(),
    )


def _fig9() -> ScenarioConfig:
    return ScenarioConfig(
        protocol="dlca_greedy_fomaml",
        n_aps=16,
        n_channels=8,
        trials=10,
        duration=_slots_to_seconds(20_000),
        hyper=Hyperparams(),
    )


def _fig10() -> ScenarioConfig:
    return ScenarioConfig(
        protocol="dlca_greedy_fomaml",
        n_aps=18,
        n_channels=8,
        trials=1,
        duration=_slots_to_seconds(100_000),
        trace_every=1000,
        hyper=Hyperparams(),
        perturbation=Perturbation(ap_a=0, ap_b=2, at_tick=-1),
    )


_PRESETS = {
    "fig5": (_fig5, "aggregate throughput baseline (sweep N, F via overrides)"),
    "fig6": (_fig6, "zero-collision regime, N=8 on F=8 channels"),
    "fig7": (_fig7, "collision and idle overhead, N=16 on F=8 channels"),
    "fig8": (_fig8, "throughput convergence trace, N=16 on F=8 channels"),
    "fig9": (_fig9, "proportional-fair utility, N=16 on F=8 channels"),
    "fig10": (_fig10, "PF-ratio trace with a mid-run efficiency swap, N=18"),
}


def preset_names() -> list[str]:
    return list(_PRESETS)


def preset_description(name: str) -> str:
    return _PRESETS[name][1]


def preset(name: str) -> ScenarioConfig:
    try:
        build = _PRESETS[name][0]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(_PRESETS)}"
        ) from None
    cfg = build()
    cfg.preset = name
    return cfg
