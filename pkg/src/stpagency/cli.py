"""``agency``: command-line client for the detection service.

Every analysis subcommand builds a JSON request and posts it to the service;
by default the service runs in-process (no network), while ``--server URL``
targets a running instance instead. Responses print as JSON (default) or as
an indented text rendering of the same structure.

Exit codes: 0 on success (including failing verdicts, which are results),
1 for malformed input, 2 for domain errors; errors print on stderr as the
serialized error object.
"""

from __future__ import annotations

import asyncio
import json
import sys
from typing import Optional

import click
import httpx


def _read_json(path: str, what: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as handle:
            return json.load(handle)
    except FileNotFoundError:
        click.echo(f"error: {what} file {path!r} not found", err=True)
        sys.exit(1)
    except json.JSONDecodeError as exc:
        click.echo(
            f"error: {path}: line {exc.lineno} column {exc.colno}: {exc.msg}", err=True
        )
        sys.exit(1)


def _entity_set_argument(path: str):
    """A file path, or the shorthands all-stps / all-stps:K / pa-loop."""
    if path == "pa-loop":
        return {"builtin": "pa-loop"}
    if path == "all-stps":
        return {"builtin": "all-stps"}
    if path.startswith("all-stps:"):
        size = path.split(":", 1)[1]
        if not size.isdigit() or int(size) < 1:
            click.echo(f"error: bad domain size in {path!r}", err=True)
            sys.exit(1)
        return {"builtin": "all-stps", "max_domain_size": int(size)}
    return _read_json(path, "entity set")


def _trajectory_argument(text: str):
    """A support index, or a full assignment like 'M@0=0,E@0=1,...'."""
    try:
        return int(text)
    except ValueError:
        pass
    out = {}
    for chunk in text.split(","):
        key, eq, sym = chunk.partition("=")
        if not eq:
            click.echo(f"error: trajectory item {chunk!r} is missing '='", err=True)
            sys.exit(1)
        out[key.strip()] = sym.strip()
    return out


def _render_text(value, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for key, item in value.items():
            if isinstance(item, (dict, list)) and item:
                lines.append(f"{pad}{key}:")
                lines.extend(_render_text(item, indent + 1))
            else:
                rendered = json.dumps(item) if isinstance(item, (dict, list)) else item
                lines.append(f"{pad}{key}: {rendered}")
    elif isinstance(value, list):
        for item in value:
            if isinstance(item, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_render_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {item}")
    else:
        lines.append(f"{pad}{value}")
    return lines


def _request(ctx_obj: dict, method: str, path: str, payload: Optional[dict] = None):
    server = ctx_obj["server"]
    if server is not None:
        response = httpx.request(
            method, server.rstrip("/") + path, json=payload, timeout=600.0
        )
        return response.status_code, response.json()

    from .service import create_app

    async def call():
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://service", timeout=600.0
        ) as client:
            response = await client.request(method, path, json=payload)
            return response.status_code, response.json()

    return asyncio.run(call())


def _emit(ctx_obj: dict, status: int, body) -> None:
    if status == 200:
        if ctx_obj["format"] == "json":
            click.echo(json.dumps(body, indent=2))
        else:
            click.echo("\n".join(_render_text(body)))
        return
    click.echo(json.dumps(body, indent=2), err=True)
    if status == 422:
        sys.exit(1)
    if status == 409:
        sys.exit(2)
    sys.exit(1)


@click.group()
@click.option("--server", default=None, metavar="URL", help="Use a running service instead of in-process execution.")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", help="Output rendering.")
@click.pass_context
def main(ctx: click.Context, server: Optional[str], fmt: str) -> None:
    """Detect actions and perceptions of spatiotemporal patterns in finite
    Markov chains."""
    ctx.obj = {"server": server, "format": fmt}


@main.command()
@click.argument("chain", metavar="CHAIN.json")
@click.pass_obj
def validate(obj: dict, chain: str) -> None:
    """Structural report for a chain document."""
    payload = {"chain": _read_json(chain, "chain")}
    _emit(obj, *_request(obj, "POST", "/validate", payload))


@main.command()
@click.argument("chain", metavar="CHAIN.json")
@click.option("--cap", type=int, default=None, help="Override the support enumeration cap.")
@click.pass_obj
def enumerate(obj: dict, chain: str, cap: Optional[int]) -> None:
    """List every positive-probability trajectory with its probability."""
    payload = {"chain": _read_json(chain, "chain"), "cap": cap}
    _emit(obj, *_request(obj, "POST", "/enumerate", payload))


@main.command()
@click.argument("chain", metavar="CHAIN.json")
@click.argument("entity_set", metavar="ENTITYSET")
@click.option("--entity", required=True, help="Id of the entity under query.")
@click.option("--trajectory", required=True, help="Support index or full assignment 'j@t=s,...'.")
@click.option("--t", type=int, default=None, help="Query one timestep; omit for a full report.")
@click.option("--history", type=int, default=0, show_default=True, help="Environment history length.")
@click.pass_obj
def actions(obj: dict, chain: str, entity_set: str, entity: str, trajectory: str,
            t: Optional[int], history: int) -> None:
    """Find co-actions of an entity occurrence (or report all timesteps)."""
    payload = {
        "chain": _read_json(chain, "chain"),
        "entity_set": _entity_set_argument(entity_set),
        "entity": entity,
        "trajectory": _trajectory_argument(trajectory),
        "t": t,
        "history": history,
    }
    route = "/actions/report" if t is None else "/actions/query"
    _emit(obj, *_request(obj, "POST", route, payload))


@main.command()
@click.argument("chain", metavar="CHAIN.json")
@click.argument("entity_set", metavar="ENTITYSET")
@click.option("--anchor", required=True, help="Id of the anchor entity.")
@click.option("--t", type=int, required=True, help="Perception timestep.")
@click.option("--r", type=int, default=1, show_default=True, help="Branching horizon.")
@click.pass_obj
def perceptions(obj: dict, chain: str, entity_set: str, anchor: str, t: int, r: int) -> None:
    """Environments, branching blocks, morphs and perception classes."""
    payload = {
        "chain": _read_json(chain, "chain"),
        "entity_set": _entity_set_argument(entity_set),
        "anchor": anchor,
        "t": t,
        "r": r,
    }
    _emit(obj, *_request(obj, "POST", "/perceptions", payload))


@main.command("entityset-check")
@click.argument("chain", metavar="CHAIN.json")
@click.argument("entity_set", metavar="ENTITYSET")
@click.pass_obj
def entityset_check(obj: dict, chain: str, entity_set: str) -> None:
    """Non-interpenetration check; a failing verdict is still exit 0."""
    payload = {
        "chain": _read_json(chain, "chain"),
        "entity_set": _entity_set_argument(entity_set),
    }
    _emit(obj, *_request(obj, "POST", "/entityset/check", payload))


@main.group()
def paloop() -> None:
    """Operations on perception-action loops (labels M and E)."""


def _paloop_cmd(obj: dict, route: str, chain: str, extra: dict) -> None:
    payload = {"chain": _read_json(chain, "chain"), **extra}
    _emit(obj, *_request(obj, "POST", route, payload))


@paloop.command()
@click.argument("chain", metavar="CHAIN.json")
@click.pass_obj
def extract(obj: dict, chain: str) -> None:
    """Sensor and action partitions per transition."""
    _paloop_cmd(obj, "/paloop/extract", chain, {})


@paloop.command()
@click.argument("chain", metavar="CHAIN.json")
@click.pass_obj
def extend(obj: dict, chain: str) -> None:
    """Emit the half-step extension with explicit sensor/actuator nodes."""
    _paloop_cmd(obj, "/paloop/extend", chain, {})


@paloop.command()
@click.argument("chain", metavar="CHAIN.json")
@click.option("--seeds", type=int, default=0, show_default=True, help="Also verify this many seeded random loops.")
@click.pass_obj
def verify(obj: dict, chain: str, seeds: int) -> None:
    """Check the extension marginalizes back exactly."""
    _paloop_cmd(obj, "/paloop/verify", chain, {"seeds": seeds})


@paloop.command()
@click.argument("chain", metavar="CHAIN.json")
@click.option("--t", type=int, default=None, help="Single timestep; omit for all.")
@click.pass_obj
def entropy(obj: dict, chain: str, t: Optional[int]) -> None:
    """Conditional entropy of the next memory given the environment."""
    _paloop_cmd(obj, "/paloop/entropy", chain, {"t": t})


@paloop.command()
@click.argument("chain", metavar="CHAIN.json")
@click.option("--t", type=int, default=None, help="Single timestep; omit for all.")
@click.option("--seeds", type=int, default=0, show_default=True, help="Also verify this many seeded random loops.")
@click.pass_obj
def equiv(obj: dict, chain: str, t: Optional[int], seeds: int) -> None:
    """Check action existence matches entropy positivity."""
    _paloop_cmd(obj, "/paloop/equiv", chain, {"t": t, "seeds": seeds})


@paloop.command()
@click.argument("chain", metavar="CHAIN.json")
@click.option("--anchor", default=None, help="Memory-path id like '0,1,0'; omit to survey all.")
@click.option("--t", type=int, default=None, help="Timestep (required with --anchor).")
@click.option("--seeds", type=int, default=0, show_default=True, help="Also verify this many seeded random loops.")
@click.pass_obj
def specialize(obj: dict, chain: str, anchor: Optional[str], t: Optional[int], seeds: int) -> None:
    """Compare the generic perception partition against mechanism rows."""
    _paloop_cmd(obj, "/paloop/specialize", chain, {"anchor": anchor, "t": t, "seeds": seeds})


@main.command()
@click.argument("name")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Write to a file instead of stdout.")
@click.pass_obj
def fixture(obj: dict, name: str, output: Optional[str]) -> None:
    """Emit a built-in chain document (copy, pa, ca2)."""
    status, body = _request(obj, "GET", f"/fixture/{name}")
    if status != 200:
        _emit(obj, status, body)
        return
    text = json.dumps(body, indent=2) + "\n"
    if output is None:
        click.echo(text, nl=False)
    else:
        with open(output, "w") as handle:
            handle.write(text)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
