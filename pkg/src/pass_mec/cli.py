"""Command-line client for the solver service.

Each subcommand speaks the service's HTTP interface. Without ``--server``
the app runs in-process through the test client, so no server needs to be
up; with ``--server URL`` the same requests go to a remote instance.

Exit codes: 0 success, 1 config error, 2 no feasible delay on all trials,
3 I/O error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .experiments import TrialRecord, emit_results

EXIT_CONFIG_ERROR = 1
EXIT_NO_FEASIBLE = 2
EXIT_IO_ERROR = 3


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        click.echo(f"error: cannot read config {path}: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        click.echo(f"error: config {path} is not valid JSON: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)


def _apply_overrides(config: dict, seed, trials, schemes) -> dict:
    if seed is not None:
        config["seed"] = seed
    if trials is not None:
        config["num_trials"] = trials
    if schemes is not None:
        config["schemes"] = [s.strip() for s in schemes.split(",") if s.strip()]
    return config


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(client: httpx.Client, path: str, payload: dict) -> httpx.Response:
    resp = client.post(path, json=payload)
    if resp.status_code == 409:
        click.echo(f"error: {resp.json().get('detail', 'no feasible delay')}",
                   err=True)
        sys.exit(EXIT_NO_FEASIBLE)
    if resp.status_code == 422:
        click.echo(f"error: invalid request: {resp.text}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    resp.raise_for_status()
    return resp


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        click.echo(f"error: cannot write {path}: {exc}", err=True)
        sys.exit(EXIT_IO_ERROR)


config_opt = click.option("--config", "config_path", required=True,
                          type=str, help="JSON experiment config")
server_opt = click.option("--server", default=None,
                          help="base URL of a running service; in-process if omitted")
seed_opt = click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None)
out_opt = click.option("--out", "out_dir", default=".", help="output directory")


@click.group()
def main() -> None:
    """Pinching-antenna NOMA-MEC delay-minimization toolkit."""


@main.command()
@config_opt
@server_opt
@seed_opt
@click.option("--trial", type=int, default=0, help="trial index to solve")
@click.option("--scheme", default=None, help="noma_pass | mimo | fdma")
def solve(config_path, server, seed, trial, scheme) -> None:
    """Solve one generated scenario and print the report as JSON."""
    config = _apply_overrides(_load_config(config_path), seed, None, None)
    with _client(server) as client:
        resp = _post(client, "/solve",
                     {"config": config, "trial_index": trial, "scheme": scheme})
    click.echo(json.dumps(resp.json(), indent=2, sort_keys=True))


@main.command()
@config_opt
@server_opt
@seed_opt
@out_opt
def trace(config_path, server, seed, out_dir) -> None:
    """Reproduce the bisection convergence trace and write trace.csv."""
    config = _apply_overrides(_load_config(config_path), seed, None, None)
    with _client(server) as client:
        resp = _post(client, "/trace", {"config": config, "trial_index": 0})
    body = resp.json()
    lines = ["iteration,phase,d_t_s,feasible,inner_iters,reason"]
    for e in body["trace"]:
        lines.append(f"{e['index']},{e['phase']},{e['d_t_s']!r},"
                     f"{'true' if e['feasible'] else 'false'},"
                     f"{e['inner_iters']},{e.get('reason') or ''}")
    _write_text(Path(out_dir) / "trace.csv", "\n".join(lines) + "\n")
    _write_text(Path(out_dir) / "trace_record.json",
                json.dumps(body["record"], indent=2, sort_keys=True) + "\n")
    click.echo(f"trace written to {out_dir} "
               f"(final delay {body['record']['delay_s']} s)")


@main.command()
@config_opt
@server_opt
@seed_opt
@out_opt
@click.option("--trials", type=click.IntRange(min=1), default=None)
@click.option("--schemes", default=None, help="comma-separated scheme list")
def sweep(config_path, server, seed, out_dir, trials, schemes) -> None:
    """Run the configured sweep and write results.csv / allocations.json."""
    config = _apply_overrides(_load_config(config_path), seed, trials, schemes)
    with _client(server) as client:
        resp = _post(client, "/sweep", {"config": config})
    body = resp.json()
    records = [TrialRecord.model_validate(r) for r in body["records"]]
    try:
        paths = emit_results(records, out_dir)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO_ERROR)
    if not any(r.converged for r in records):
        click.echo("error: no feasible delay on any trial", err=True)
        sys.exit(EXIT_NO_FEASIBLE)
    click.echo("\n".join(str(p) for p in paths))


@main.command("validate-config")
@config_opt
@server_opt
def validate_config(config_path, server) -> None:
    """Validate an experiment config file."""
    config = _load_config(config_path)
    with _client(server) as client:
        resp = client.post("/validate-config", json=config)
    body = resp.json()
    click.echo(json.dumps(body, indent=2, sort_keys=True))
    if not body.get("valid"):
        sys.exit(EXIT_CONFIG_ERROR)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port) -> None:
    """Run the solver service."""
    import uvicorn

    uvicorn.run("pass_mec.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
