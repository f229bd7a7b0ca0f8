"""Command-line entry point.

Runs scenarios locally by default; with --server it acts as a thin client of
the HTTP service, submitting the same config as a job and downloading the
resulting CSVs. Exit code 0 on success, 2 on configuration problems, 1 on
anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .reports import emit_csv, emit_sweep_csv, SUMMARY_COLUMNS, _summary_row
from .runner import RunReport, run_scenario, run_sweep, parse_sweep_spec
from .scenarios import (
    ConfigError,
    ScenarioConfig,
    load_config,
    preset,
    preset_description,
    preset_names,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2


def _print_summary(reports: list[RunReport]) -> None:
    rows = [",".join(SUMMARY_COLUMNS)] + [_summary_row(r) for r in reports]
    table = [line.split(",") for line in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.server:
        return _remote_run(args.server, config, args.out)
    report = run_scenario(config)
    paths = emit_csv(report, args.out)
    _print_summary([report])
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    parse_sweep_spec(args.param)  # reject malformed specs before any work
    if args.server:
        return _remote_sweep(args.server, config, args.param, args.out)
    sweep = run_sweep(config, args.param)
    paths = emit_sweep_csv(sweep, args.out)
    _print_summary(sweep.reports)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(f"{name:8s} {preset_description(name)}")
        return EXIT_OK
    cfg = preset(args.name)
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(f"ok: {config.protocol} N={config.n_aps} F={config.n_channels} "
          f"trials={config.trials} seed={config.seed}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


# -- thin client -------------------------------------------------------------


def _remote_submit(client, base: str, config: ScenarioConfig) -> str:
    resp = client.post(f"{base}/jobs", json=config.to_dict())
    resp.raise_for_status()
    return resp.json()["job_id"]


def _remote_wait(client, base: str, job_id: str, poll: float = 0.5) -> None:
    while True:
        resp = client.get(f"{base}/jobs/{job_id}")
        resp.raise_for_status()
        status = resp.json()["status"]
        if status == "done":
            return
        if status == "error":
            raise RuntimeError(f"job failed: {resp.json().get('detail')}")
        time.sleep(poll)


def _remote_fetch_csvs(client, base: str, job_id: str, out_dir: str) -> list[str]:
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in ("summary.csv", "trace.csv"):
        resp = client.get(f"{base}/jobs/{job_id}/{name}")
        resp.raise_for_status()
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(resp.text)
        paths.append(path)
    return paths


def _remote_run(server: str, config: ScenarioConfig, out_dir: str) -> int:
    import httpx

    base = server.rstrip("/")
    with httpx.Client(timeout=None) as client:
        job_id = _remote_submit(client, base, config)
        print(f"submitted job {job_id}")
        _remote_wait(client, base, job_id)
        for p in _remote_fetch_csvs(client, base, job_id, out_dir):
            print(f"wrote {p}")
    return EXIT_OK


def _remote_sweep(server: str, config: ScenarioConfig, spec: str, out_dir: str) -> int:
    import httpx

    field_name, values = parse_sweep_spec(spec)
    base = server.rstrip("/")
    with httpx.Client(timeout=None) as client:
        for v in values:
            point = ScenarioConfig(**{**config.__dict__, field_name: v})
            job_id = _remote_submit(client, base, point)
            print(f"submitted job {job_id} ({field_name}={v})")
            _remote_wait(client, base, job_id)
            for p in _remote_fetch_csvs(
                client, base, job_id, f"{out_dir}/{field_name}_{v}"
            ):
                print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apcsim",
        description="Multi-AP channel-access simulator: DCF, SH-TXOP, and "
        "learning-based variants with a proportional-fair controller.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario config")
    run_p.add_argument("config", help="path to a JSON scenario config")
    run_p.add_argument("--out", default="results", help="output directory for CSVs")
    run_p.add_argument("--server", help="service URL; run remotely instead of locally")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a parameter sweep over a config")
    sweep_p.add_argument("config")
    sweep_p.add_argument(
        "--param", required=True, help='sweep spec, e.g. "N=8..56:8" or "N=8,16,24"'
    )
    sweep_p.add_argument("--out", default="results")
    sweep_p.add_argument("--server")
    sweep_p.set_defaults(func=_cmd_sweep)

    presets_p = sub.add_parser("presets", help="list or show the named presets")
    presets_sub = presets_p.add_subparsers(dest="action", required=True)
    presets_sub.add_parser("list")
    show_p = presets_sub.add_parser("show")
    show_p.add_argument("name")
    presets_p.set_defaults(func=_cmd_presets)

    validate_p = sub.add_parser("validate", help="check a config without running it")
    validate_p.add_argument("config")
    validate_p.set_defaults(func=_cmd_validate)

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
