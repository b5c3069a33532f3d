"""Command-line client.

Every subcommand builds a service request model and dispatches it either to
the in-process handlers (default) or, with ``--server URL``, to a running
offloadmdp HTTP service; results are written to local files.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import click

from . import __version__
from .config import ScenarioConfig, load_config
from .exceptions import OffloadError
from .service import handlers, schemas


def _dispatch(server: str | None, endpoint: str, request, response_cls):
    if server is None:
        fn = {
            "/solve": handlers.solve,
            "/simulate": handlers.simulate,
            "/sweep": handlers.sweep,
            "/fit-energy": handlers.fit_energy,
            "/oracle-check": handlers.run_oracle_check,
        }[endpoint]
        return fn(request)
    import httpx

    resp = httpx.post(
        server.rstrip("/") + endpoint,
        json=json.loads(request.model_dump_json()),
        timeout=None,
    )
    if resp.status_code != 200:
        raise click.ClickException(f"server returned {resp.status_code}: {resp.text}")
    return response_cls.model_validate(resp.json())


def _load_config_or_fail(path: str) -> ScenarioConfig:
    p = Path(path)
    if not p.exists():
        raise click.ClickException(f"config file not found: {p}")
    try:
        return load_config(p)
    except (ValueError, OffloadError) as exc:
        raise click.ClickException(f"invalid config {p}: {exc}") from exc


def _apply_overrides(config: ScenarioConfig, seed, episodes, action_mode) -> ScenarioConfig:
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if episodes is not None:
        updates["episodes"] = episodes
    if action_mode is not None:
        updates["action_mode"] = action_mode
    return config.model_copy(update=updates) if updates else config


@click.group()
@click.version_option(__version__)
@click.option("--server", default=None, help="Base URL of a running service; default runs in-process.")
@click.pass_context
def main(ctx, server):
    """Plan, simulate, and sweep WLAN/cellular offloading scenarios."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


_seed_opt = click.option("--seed", type=int, default=None, help="Override the config seed.")
_episodes_opt = click.option("--episodes", type=int, default=None, help="Override the episode count.")
_mode_opt = click.option(
    "--action-mode",
    type=click.Choice(["auto", "exhaustive", "edf"]),
    default=None,
    help="Override the solver's action search mode.",
)
_workers_opt = click.option("--workers", type=int, default=1, show_default=True)


@main.command()
@click.argument("config_path", metavar="CONFIG")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Policy table output (.npz).")
@_seed_opt
@_mode_opt
@_workers_opt
@click.pass_context
def solve(ctx, config_path, out, seed, action_mode, workers):
    """Solve a scenario exactly and save the policy table."""
    config = _apply_overrides(_load_config_or_fail(config_path), seed, None, action_mode)
    request = schemas.SolveRequest(config=config, workers=workers)
    try:
        resp = _dispatch(ctx.obj["server"], "/solve", request, schemas.SolveResponse)
    except OffloadError as exc:
        raise click.ClickException(str(exc)) from exc
    Path(out).write_bytes(base64.b64decode(resp.policy_b64))
    click.echo(
        f"solved {resp.fingerprint[:12]}: horizon={resp.horizon} "
        f"states/epoch={resp.state_count} mode={resp.action_mode} "
        f"mean start value={resp.mean_start_value:.6g} -> {out}"
    )


@main.command()
@click.argument("config_path", metavar="CONFIG")
@click.option(
    "--policy",
    type=click.Choice(["dp", "heuristic", "baseline", "price_only"]),
    default="dp",
    show_default=True,
)
@click.option("--policy-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Reuse a solved policy table instead of re-solving.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@_seed_opt
@_episodes_opt
@_mode_opt
@_workers_opt
@click.pass_context
def simulate(ctx, config_path, policy, policy_file, out, fmt, seed, episodes, action_mode, workers):
    """Run seeded Monte Carlo episodes under one policy."""
    config = _apply_overrides(_load_config_or_fail(config_path), seed, episodes, action_mode)
    policy_b64 = None
    if policy_file is not None:
        policy_b64 = base64.b64encode(Path(policy_file).read_bytes()).decode()
    request = schemas.SimulateRequest(
        config=config, policy=policy, policy_b64=policy_b64, workers=workers
    )
    try:
        resp = _dispatch(ctx.obj["server"], "/simulate", request, schemas.SimulateResponse)
    except OffloadError as exc:
        raise click.ClickException(str(exc)) from exc
    from .reports import emit_report
    from .sim import AggregateReport

    report = AggregateReport(**resp.report.model_dump())
    emit_report([report], fmt, out)
    click.echo(
        f"{report.policy}: mean cost {report.mean_monetary_yen:.6g} yen, "
        f"mean energy {report.mean_energy_joule:.6g} J, "
        f"finish rate {report.finish_rate:.4g} over {report.episodes} episodes -> {out}"
    )


@main.command()
@click.argument("config_path", metavar="CONFIG")
@click.option("--axis", type=click.Choice(["theta", "flows", "aps", "deadline"]), required=True)
@click.option("--values", required=True, help="Comma-separated axis values, e.g. 4,8,12,16.")
@click.option("--policies", default=None,
              help="Comma-separated subset of dp,heuristic,baseline,price_only.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@_seed_opt
@_episodes_opt
@_mode_opt
@_workers_opt
@click.pass_context
def sweep(ctx, config_path, axis, values, policies, out, fmt, seed, episodes, action_mode, workers):
    """Vary one axis, run all policies, and emit a combined report."""
    config = _apply_overrides(_load_config_or_fail(config_path), None, None, action_mode)
    try:
        parsed_values = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise click.ClickException(f"bad --values list: {values!r}") from exc
    if not parsed_values:
        raise click.ClickException("--values must list at least one number")
    request = schemas.SweepRequest(
        config=config,
        axis=axis,
        values=parsed_values,
        policies=policies.split(",") if policies else None,
        episodes=episodes,
        seed=seed,
        workers=workers,
    )
    try:
        resp = _dispatch(ctx.obj["server"], "/sweep", request, schemas.SweepResponse)
    except OffloadError as exc:
        raise click.ClickException(str(exc)) from exc
    if fmt == "csv":
        Path(out).write_text(resp.csv)
    else:
        from .reports import to_json_text
        from .sim import AggregateReport

        reports = [AggregateReport(**r.model_dump()) for r in resp.reports]
        Path(out).write_text(to_json_text(reports))
    click.echo(f"swept {axis} over {len(parsed_values)} values: {len(resp.reports)} rows -> {out}")


@main.command("fit-energy")
@click.argument("samples_path", metavar="SAMPLES")
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write the fitted curve as JSON.")
@click.pass_context
def fit_energy(ctx, samples_path, out):
    """Fit an exponential energy curve to CSV rows of throughput,joule_per_mbit."""
    p = Path(samples_path)
    if not p.exists():
        raise click.ClickException(f"samples file not found: {p}")
    samples = []
    for line_no, line in enumerate(p.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        try:
            samples.append((float(parts[0]), float(parts[1])))
        except (IndexError, ValueError) as exc:
            raise click.ClickException(f"{p}:{line_no}: expected 'throughput,energy'") from exc
    request = schemas.FitEnergyRequest(samples=samples)
    try:
        resp = _dispatch(ctx.obj["server"], "/fit-energy", request, schemas.FitEnergyResponse)
    except OffloadError as exc:
        raise click.ClickException(str(exc)) from exc
    if out:
        Path(out).write_text(
            json.dumps({"amplitude": resp.amplitude, "decay": resp.decay}, indent=2) + "\n"
        )
    click.echo(f"fit: {resp.amplitude:.6g} * exp(-{resp.decay:.6g} * x)")


@main.command("oracle-check")
@click.option("--instances", type=int, default=25, show_default=True)
@_seed_opt
@click.pass_context
def oracle_check_cmd(ctx, instances, seed):
    """Compare the exact solver against the brute-force oracle on tiny instances."""
    request = schemas.OracleCheckRequest(instances=instances, seed=seed or 0)
    try:
        resp = _dispatch(ctx.obj["server"], "/oracle-check", request, schemas.OracleCheckResponse)
    except OffloadError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(
        f"{resp.comparisons} comparisons over {resp.instances} instances, "
        f"max |dp - brute force| = {resp.max_abs_diff:.3g}"
    )
    if not resp.passed:
        worst = max(resp.cases, key=lambda c: c.abs_diff)
        raise click.ClickException(
            f"oracle mismatch on {worst.scenario_id} start={worst.start_location}: "
            f"dp={worst.dp_value!r} brute={worst.brute_force!r}"
        )
    click.echo("oracle check passed")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("offloadmdp.service.app:app", host=host, port=port)


def cli_main(args=None) -> int:
    """Programmatic entry point: run the CLI on an argument list, return the exit code."""
    try:
        main(args=args, standalone_mode=True)
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    main()
