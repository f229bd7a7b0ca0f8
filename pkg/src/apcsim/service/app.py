"""HTTP front end: submit scenario runs as jobs, fetch reports and CSVs.

Jobs run on a single background thread each and live in an in-process
registry, which is all a desk-scale simulation service needs. Determinism
lives in the core package; the service is plumbing.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from ..reports import summary_csv_text, trace_csv_text
from ..runner import RunReport, run_scenario
from ..scenarios import ConfigError, preset, preset_description, preset_names
from .schemas import (
    JobInfo,
    PresetInfo,
    ReportModel,
    ScenarioModel,
    ValidateResponse,
)


@dataclass
class _Job:
    job_id: str
    status: str = "queued"
    report: RunReport | None = None
    error: str | None = None
    thread: threading.Thread | None = None


@dataclass
class _Registry:
    jobs: dict[str, _Job] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def add(self, job: _Job) -> None:
        with self.lock:
            self.jobs[job.job_id] = job

    def get(self, job_id: str) -> _Job:
        with self.lock:
            job = self.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id!r}")
        return job


def create_app() -> FastAPI:
    app = FastAPI(title="apcsim", version="0.1.0")
    registry = _Registry()

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/presets")
    def presets() -> list[PresetInfo]:
        return [
            PresetInfo(
                name=name,
                description=preset_description(name),
                config=preset(name).to_dict(),
            )
            for name in preset_names()
        ]

    @app.post("/validate")
    def validate(body: ScenarioModel) -> ValidateResponse:
        try:
            body.to_config()
        except ConfigError as exc:
            return ValidateResponse(valid=False, errors=[str(exc)])
        return ValidateResponse(valid=True, errors=[])

    @app.post("/jobs", status_code=202)
    def submit(body: ScenarioModel) -> JobInfo:
        try:
            config = body.to_config()
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        job = _Job(job_id=uuid.uuid4().hex)

        def work() -> None:
            job.status = "running"
            try:
                job.report = run_scenario(config)
                job.status = "done"
            except Exception as exc:  # surfaced through the job status
                job.error = str(exc)
                job.status = "error"

        job.thread = threading.Thread(target=work, daemon=True)
        registry.add(job)
        job.thread.start()
        return JobInfo(job_id=job.job_id, status=job.status)

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str) -> JobInfo:
        job = registry.get(job_id)
        return JobInfo(job_id=job.job_id, status=job.status, detail=job.error)

    def _finished(job_id: str) -> _Job:
        job = registry.get(job_id)
        if job.status == "error":
            raise HTTPException(status_code=500, detail=job.error)
        if job.status != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.status}")
        return job

    @app.get("/jobs/{job_id}/report")
    def job_report(job_id: str) -> ReportModel:
        return ReportModel.from_report(_finished(job_id).report)

    @app.get("/jobs/{job_id}/summary.csv", response_class=PlainTextResponse)
    def job_summary_csv(job_id: str) -> str:
        return summary_csv_text([_finished(job_id).report])

    @app.get("/jobs/{job_id}/trace.csv", response_class=PlainTextResponse)
    def job_trace_csv(job_id: str) -> str:
        return trace_csv_text(_finished(job_id).report)

    return app
