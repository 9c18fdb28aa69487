"""Command-line client for the qhydro service.

The CLI is a thin HTTP client. By default it mounts the service in-process
(no network, no running server needed); pass --server URL to talk to a
remote instance instead. Artifacts and the summary are written to --out;
without --out the summary JSON goes to stdout.

Exit codes: 0 all requested verdicts passed; 1 some verdict failed;
2 invalid configuration; 3 grid cap exceeded.
"""

import asyncio
import json
import pathlib
import sys

import click
import httpx


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge to the ASGI app, so the CLI stays a plain HTTP
    client whether or not a server process exists."""

    def __init__(self, app):
        self._app = app

    def handle_request(self, request):
        async def roundtrip():
            transport = httpx.ASGITransport(app=self._app)
            response = await transport.handle_async_request(request)
            body = b"".join([chunk async for chunk in response.stream])
            await response.aclose()
            return httpx.Response(
                status_code=response.status_code,
                headers=response.headers,
                content=body,
            )

        return asyncio.run(roundtrip())


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from .service import app

    return httpx.Client(
        transport=_InProcessTransport(app),
        base_url="http://qhydro.local",
        timeout=None,
    )


def _fail_for_status(response):
    if response.status_code == 200:
        return
    try:
        body = response.json()
    except Exception:
        body = {"code": "internal", "detail": response.text}
    click.echo(f"error ({body.get('code', '?')}): {body.get('detail', '')}", err=True)
    if body.get("code") == "cap_exceeded":
        sys.exit(3)
    if body.get("code") == "invalid_config" or response.status_code == 422:
        sys.exit(2)
    sys.exit(1)


def _write_bundle(payload, out):
    summary_text = json.dumps(payload["summary"], sort_keys=True) + "\n"
    if out is None:
        click.echo(summary_text, nl=False)
        return
    outdir = pathlib.Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "summary.json").write_text(summary_text, encoding="utf-8")
    for artifact in payload["artifacts"]:
        (outdir / artifact["name"]).write_text(artifact["content"], encoding="utf-8")
    click.echo(f"wrote {1 + len(payload['artifacts'])} files to {outdir}")


def _execute(server, request, out):
    # validate client-side first so bad requests never create directories
    with _client(server) as client:
        response = client.post("/runs", json=request)
        _fail_for_status(response)
        payload = response.json()
    _write_bundle(payload, out)
    for name, ok in sorted(payload["summary"].get("verdicts", {}).items()):
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name}")
    sys.exit(0 if payload["all_passed"] else 1)


server_option = click.option("--server", default=None, help="remote service URL")
scenario_option = click.option("--scenario", required=True)
out_option = click.option("--out", default=None, help="artifact output directory")
eps_option = click.option("--eps", type=float, default=None, help="defined-mask threshold override")
seed_option = click.option("--seed", type=int, default=0)
cap_option = click.option("--cap-override", type=int, default=None, help="raise the grid point cap")


@click.group()
def main():
    """Grid-based quantum-hydrodynamics field diagnostics."""


@main.command("list")
@click.argument("filter_text", default="", required=False)
@server_option
def list_cmd(filter_text, server):
    """List bundled scenarios (optionally filtered by substring)."""
    with _client(server) as client:
        response = client.get("/scenarios", params={"filter": filter_text})
        _fail_for_status(response)
        for row in response.json():
            click.echo(f"{row['name']:20s} {row['description']}")
    sys.exit(0)


def _common_run(server, scenario, operations, levels, out, eps, seed, cap_override):
    request = {
        "scenario": scenario,
        "operations": list(operations),
        "levels": levels,
        "eps": eps,
        "seed": seed,
        "cap_override": cap_override,
        "include_artifacts": out is not None,
    }
    _execute(server, request, out)


@main.command()
@scenario_option
@out_option
@eps_option
@seed_option
@cap_option
@server_option
def fields(scenario, out, eps, seed, cap_override, server):
    """Densities, currents, velocities and the scalar quantum pressure."""
    _common_run(server, scenario, ["fields"], 0, out, eps, seed, cap_override)


@main.command()
@scenario_option
@out_option
@eps_option
@seed_option
@cap_option
@server_option
def tensors(scenario, out, eps, seed, cap_override, server):
    """Momentum-flow and pressure tensors in both gauges."""
    _common_run(server, scenario, ["tensors"], 0, out, eps, seed, cap_override)


@main.command()
@scenario_option
@click.option("--levels", type=int, default=0, help="refinements for convergence orders")
@out_option
@eps_option
@seed_option
@cap_option
@server_option
def check(scenario, levels, out, eps, seed, cap_override, server):
    """Balance-law residuals, gauge check and curl diagnostics."""
    _common_run(server, scenario, ["check"], levels, out, eps, seed, cap_override)


@main.command()
@scenario_option
@click.option("--levels", type=int, default=1)
@out_option
@eps_option
@seed_option
@cap_option
@server_option
def cyl(scenario, levels, out, eps, seed, cap_override, server):
    """Cylindrical elements, symmetry check and divergence comparison."""
    _common_run(server, scenario, ["cyl"], levels, out, eps, seed, cap_override)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@out_option
@server_option
def run(config_path, out, server):
    """Run the operations named in a key = value config file."""
    from .runner import parse_config_text

    try:
        cfg = parse_config_text(pathlib.Path(config_path).read_text(encoding="utf-8"))
    except Exception as exc:
        click.echo(f"error (invalid_config): {exc}", err=True)
        sys.exit(2)
    request = {
        "scenario": cfg.scenario,
        "operations": list(cfg.operations),
        "levels": cfg.levels,
        "eps": cfg.eps,
        "seed": cfg.seed,
        "cap_override": cfg.cap_override,
        "include_artifacts": cfg.include_artifacts and out is not None,
    }
    _execute(server, request, out)


@main.command()
@click.argument("directory", type=click.Path(exists=True))
def report(directory):
    """Render the verdict table from a run directory's summary.json."""
    path = pathlib.Path(directory) / "summary.json"
    if not path.exists():
        click.echo(f"error (invalid_config): no summary.json in {directory}", err=True)
        sys.exit(2)
    summary = json.loads(path.read_text(encoding="utf-8"))
    click.echo(f"scenario: {summary.get('scenario')}")
    click.echo(f"operations: {', '.join(summary.get('operations', []))}")
    verdicts = summary.get("verdicts", {})
    for name, ok in sorted(verdicts.items()):
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name}")
    all_passed = summary.get("all_passed", False)
    click.echo(f"overall: {'PASS' if all_passed else 'FAIL'}")
    sys.exit(0 if all_passed else 1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
