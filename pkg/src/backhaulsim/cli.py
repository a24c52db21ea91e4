"""Command-line client for the simulator service.

Every subcommand talks HTTP to the service layer: against a remote server
when --server is given, otherwise against an in-process instance over an
ASGI transport, so the CLI works with no server running and exercises the
exact same request path either way. File output happens client-side.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
from pathlib import Path

import click
import httpx

from .harness import ExperimentConfig, apply_override, export, load_config, result_from_dict

_REQUEST_TIMEOUT_S = 3600.0


class ServiceClient:
    """POST/GET wrapper that hides where the service actually lives."""

    def __init__(self, server: str | None = None):
        self.server = server

    def request(self, method: str, path: str, payload: dict | None = None) -> httpx.Response:
        if self.server:
            with httpx.Client(base_url=self.server, timeout=_REQUEST_TIMEOUT_S) as client:
                return client.request(method, path, json=payload)

        from .service import create_app

        async def go() -> httpx.Response:
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://backhaulsim", timeout=_REQUEST_TIMEOUT_S
            ) as client:
                return await client.request(method, path, json=payload)

        return asyncio.run(go())

    def call(self, method: str, path: str, payload: dict | None = None) -> dict:
        try:
            response = self.request(method, path, payload)
        except httpx.HTTPError as exc:
            raise click.ClickException(f"service unreachable: {exc}") from exc
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise click.ClickException(f"HTTP {response.status_code}: {detail}")
        return response.json()


def _config_payload(config: ExperimentConfig) -> dict:
    payload = dataclasses.asdict(config)
    payload.pop("output_dir", None)
    return payload


def _build_config(config_file: str | None, overrides: tuple[str, ...], **direct) -> ExperimentConfig:
    config = load_config(config_file) if config_file else ExperimentConfig()
    for name, value in direct.items():
        if value is not None:
            config = config.replace(**{name: value})
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise click.ClickException(f"--set expects key=value, got {item!r}")
        try:
            config = apply_override(config, key.strip(), raw.strip())
        except Exception as exc:
            raise click.ClickException(str(exc)) from exc
    return config


def _print_summary(payload: dict) -> None:
    summary = payload["summary"]
    click.echo(
        f"{payload['algorithm']} ({payload['mode']}), {payload['drops']} drops, "
        f"seed {payload['seed']}:"
    )
    click.echo(f"  mean rate    {float(summary['mean_rate_bps']) / 1e3:10.1f} kbit/s")
    finite = summary["mean_finite_delay_s"]
    click.echo(f"  mean delay   {float(finite) * 1e3:10.3f} ms (stable queues only)")
    click.echo(f"  stable       {float(summary['stable_fraction']):10.1%}")
    converged = payload["converged_at"]
    if any(c is not None for c in converged):
        fired = [c for c in converged if c is not None]
        click.echo(
            f"  converged    {len(fired)}/{len(converged)} drops"
            f" (median iteration {sorted(fired)[len(fired) // 2]})"
        )
    if payload["failures"]:
        click.echo(f"  FAILED DROPS {len(payload['failures'])}")


def _write_outputs(payload: dict, out: str | None, csv: str | None) -> None:
    if not out and not csv:
        return
    result = result_from_dict(payload)
    if out:
        export(result, "json", out)
        click.echo(f"  wrote {out}")
    if csv:
        export(result, "csv", csv)
        click.echo(f"  wrote {csv}")


@click.group()
@click.option("--server", default=None, metavar="URL", help="Remote service URL; default runs in process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Two-tier uplink simulator: rate splitting, relays, regret learning."""
    ctx.obj = ServiceClient(server)


@main.command()
@click.option("--algorithm", type=click.Choice(["CLA", "RU1", "OFF", "RSF", "RSL", "SAT"], case_sensitive=False), default=None)
@click.option("--backhaul", type=click.Choice(["ota", "wrd", "hyb"]), default=None, help="Backhaul mode.")
@click.option("--drops", type=int, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None, help="INI config file.")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override any dotted config key.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write full JSON result here.")
@click.option("--csv", type=click.Path(dir_okay=False), default=None, help="Write per-user CSV table here.")
@click.option("--strict", is_flag=True, help="Exit nonzero when any drop failed.")
@click.pass_obj
def run(client: ServiceClient, algorithm, backhaul, drops, iterations, seed, config_file, overrides, out, csv, strict) -> None:
    """Run one experiment and print its summary."""
    config = _build_config(
        config_file,
        overrides,
        algorithm=algorithm.upper() if algorithm else None,
        mode=backhaul,
        drops=drops,
        iterations=iterations,
        seed=seed,
    )
    payload = client.call("POST", "/experiments/run", _config_payload(config))
    _print_summary(payload)
    _write_outputs(payload, out, csv)
    if strict and payload["failures"]:
        raise SystemExit(1)


@main.command()
@click.option("--param", required=True, metavar="KEY", help="Dotted config key to sweep.")
@click.option("--values", required=True, metavar="V1,V2,...", help="Comma-separated sweep values.")
@click.option("--algorithm", type=click.Choice(["CLA", "RU1", "OFF", "RSF", "RSL", "SAT"], case_sensitive=False), default=None)
@click.option("--backhaul", type=click.Choice(["ota", "wrd", "hyb"]), default=None)
@click.option("--drops", type=int, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Write one JSON result per point.")
@click.option("--strict", is_flag=True)
@click.pass_obj
def sweep(client: ServiceClient, param, values, algorithm, backhaul, drops, iterations, seed, config_file, overrides, out_dir, strict) -> None:
    """Run the experiment once per value of one config key."""
    config = _build_config(
        config_file,
        overrides,
        algorithm=algorithm.upper() if algorithm else None,
        mode=backhaul,
        drops=drops,
        iterations=iterations,
        seed=seed,
    )
    value_list = [v.strip() for v in values.split(",") if v.strip()]
    if not value_list:
        raise click.ClickException("--values must name at least one value")
    payload = client.call(
        "POST",
        "/experiments/sweep",
        {"base": _config_payload(config), "param": param, "values": value_list},
    )
    failed = 0
    click.echo(f"sweep over {param}:")
    for point in payload["points"]:
        summary = point["result"]["summary"]
        failed += len(point["result"]["failures"])
        click.echo(
            f"  {param}={point['value']:>10s}  mean rate {float(summary['mean_rate_bps']) / 1e3:10.1f} kbit/s"
            f"  stable {float(summary['stable_fraction']):6.1%}"
        )
        if out_dir:
            safe = str(point["value"]).replace("/", "_")
            path = Path(out_dir) / f"{param.replace('.', '_')}_{safe}.json"
            result = result_from_dict(point["result"])
            export(result, "json", path)
    if out_dir:
        click.echo(f"  wrote {len(payload['points'])} files under {out_dir}")
    if strict and failed:
        raise SystemExit(1)


@main.command("validate-schedules")
@click.option("--utility-exp", type=float, default=0.50, show_default=True)
@click.option("--regret-exp", type=float, default=0.55, show_default=True)
@click.option("--strategy-exp", type=float, default=0.60, show_default=True)
@click.option("--horizon", type=int, default=10_000, show_default=True)
@click.pass_obj
def validate_schedules_cmd(client: ServiceClient, utility_exp, regret_exp, strategy_exp, horizon) -> None:
    """Check the three step-size conditions; exit 1 on any violation."""
    payload = client.call(
        "POST",
        "/schedules/validate",
        {
            "schedules": {
                "utility_exp": utility_exp,
                "regret_exp": regret_exp,
                "strategy_exp": strategy_exp,
            },
            "horizon": horizon,
        },
    )
    for name, total in sorted(payload["step_sums"].items()):
        click.echo(f"  {name:9s} step sum {total:12.2f} over horizon {payload['horizon']}")
    if payload["ok"]:
        click.echo("schedules OK")
        return
    for failure in payload["failures"]:
        click.echo(f"  VIOLATION: {failure}")
    raise SystemExit(1)


@main.command("cce-check")
@click.argument("game_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--steps", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-epsilon", type=float, default=None, help="Exit 1 when the gap exceeds this.")
@click.pass_obj
def cce_check(client: ServiceClient, game_file, steps, seed, max_epsilon) -> None:
    """Equilibrium gap of a matrix game given as JSON.

    The file holds {"utilities": [tensor per player]} and optionally a
    "joint" distribution; without one, regret-matching self-play over
    --steps rounds supplies the empirical joint distribution.
    """
    try:
        spec = json.loads(Path(game_file).read_text())
    except ValueError as exc:
        raise click.ClickException(f"{game_file} is not valid JSON: {exc}") from exc
    if "utilities" not in spec:
        raise click.ClickException('game file must contain a "utilities" list')
    payload = client.call(
        "POST",
        "/cce/gap",
        {
            "utilities": spec["utilities"],
            "joint": spec.get("joint"),
            "steps": steps,
            "seed": seed,
        },
    )
    source = "given joint" if spec.get("joint") is not None else f"self-play, {payload['steps']} steps"
    click.echo(f"per-player deviation gains ({source}): "
               + ", ".join(f"{g:.4f}" for g in payload["gaps"]))
    click.echo(f"epsilon = {payload['epsilon']:.4f}")
    if max_epsilon is not None and payload["epsilon"] > max_epsilon:
        raise SystemExit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service under uvicorn."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
