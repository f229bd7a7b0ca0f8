"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict

from ..analytics import MetricsTrace
from ..runner import RunReport
from ..scenarios import ScenarioConfig, from_dict


class PerturbationModel(BaseModel):
    ap_a: int
    ap_b: int
    at_tick: int = -1  # -1 resolves to the preset swap fraction


class ScenarioModel(BaseModel):
    """Scenario request body; same shape as a JSON config file."""

    model_config = ConfigDict(extra="forbid")

    preset: str | None = None
    protocol: str | None = None
    n_aps: int | None = None
    n_channels: int | None = None
    trials: int | None = None
    seed: int | None = None
    duration: float | None = None
    draw_lo: float | None = None
    draw_hi: float | None = None
    fading_mode: str | None = None
    cw_min: int | None = None
    retry_stages: int | None = None
    trace_every: int | None = None
    timing: dict[str, float] | None = None
    hyperparams: dict[str, float] | None = None
    perturbation: PerturbationModel | None = None

    def to_config(self) -> ScenarioConfig:
        raw = self.model_dump(exclude_none=True)
        cfg = from_dict(raw)
        cfg.validate()
        return cfg


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str]


class PresetInfo(BaseModel):
    name: str
    description: str
    config: dict


class TrialMetricsModel(BaseModel):
    throughput_bps: float
    utility: float | None
    per_ap_rate_bps: list[float]
    success_slots: int
    collision_slots: int
    idle_slots: int
    collision_per_txop: float
    idle_per_txop: float

    @classmethod
    def from_trace(cls, t: MetricsTrace) -> "TrialMetricsModel":
        return cls(
            throughput_bps=t.throughput,
            utility=t.utility,
            per_ap_rate_bps=[float(x) for x in t.per_ap_rate],
            success_slots=t.success_slots,
            collision_slots=t.collision_slots,
            idle_slots=t.idle_slots,
            collision_per_txop=t.collision_per_txop,
            idle_per_txop=t.idle_per_txop,
        )


class ReportModel(BaseModel):
    config: dict
    trials: list[TrialMetricsModel]
    mean_throughput_bps: float
    mean_utility: float | None
    mean_collision_per_txop: float
    mean_idle_per_txop: float
    total_wall_seconds: float

    @classmethod
    def from_report(cls, report: RunReport) -> "ReportModel":
        return cls(
            config=report.config.to_dict(),
            trials=[TrialMetricsModel.from_trace(t) for t in report.trials],
            mean_throughput_bps=report.mean_throughput,
            mean_utility=report.mean_utility,
            mean_collision_per_txop=report.mean_collision_per_txop,
            mean_idle_per_txop=report.mean_idle_per_txop,
            total_wall_seconds=report.total_wall_seconds,
        )


class JobInfo(BaseModel):
    job_id: str
    status: str  # queued | running | done | error
    detail: str | None = None
