"""Operator command line.

Subcommands: `run` (host the gateway), `scenario tc1|tc2`, `report
risk-matrix`, `seal history`, `verify history`, and `replay`. Output is
machine-readable JSON on stdout unless a markdown rendering is requested,
so scripts and humans consume the same binary. Exit codes: 0 success,
1 operational failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

import click

from . import harness, integrity, maestro
from .agent import AgentConfig, MonitoringAgent
from .replay import ReplayPlan, ReplayError, replay as run_replay
from .pcap import CaptureError

ENV_TOKEN = "AGENT_TOKEN"
ENV_BIND = "AGENT_BIND_ADDR"
ENV_SEAL_KEY = "AGENT_SEAL_KEY"
ENV_ADAPTER_URL = "AGENT_ADAPTER_URL"
ENV_ADAPTER_TOKEN = "AGENT_ADAPTER_TOKEN"


def _echo_json(payload: object) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return click.exceptions.Exit(1)


@click.group()
def main() -> None:
    """Self-monitoring network telemetry agent."""


@main.command()
@click.option("--token", envvar=ENV_TOKEN, required=False, help="Static bearer token (env AGENT_TOKEN).")
@click.option("--bind", envvar=ENV_BIND, default="127.0.0.1:8787", show_default=True)
@click.option("--seal-key", envvar=ENV_SEAL_KEY, default=None, help="History seal key (env AGENT_SEAL_KEY).")
@click.option("--workdir", type=click.Path(path_type=Path), default=Path("agent-state"), show_default=True)
@click.option("--rules", "rules_path", type=click.Path(path_type=Path, exists=True), default=None,
              help="Detection rule set (JSON); defaults to the built-in rules.")
@click.option("--adapter-url", envvar=ENV_ADAPTER_URL, default=None,
              help="External reasoner endpoint (env AGENT_ADAPTER_URL); falls back to the rule core.")
@click.option("--adapter-token", envvar=ENV_ADAPTER_TOKEN, default="",
              help="Bearer token for the reasoner endpoint (env AGENT_ADAPTER_TOKEN).")
def run(
    token: str | None,
    bind: str,
    seal_key: str | None,
    workdir: Path,
    rules_path: Path | None,
    adapter_url: str | None,
    adapter_token: str,
) -> None:
    """Host the gateway (HTTP + WebSocket) until interrupted."""
    import uvicorn

    from .detection import load_rules
    from .gateway import GatewayRuntime, create_app
    from .reasoning import HttpAdapter

    if not token:
        raise _fail("a bearer token is required: pass --token or set AGENT_TOKEN")
    host, _, port = bind.partition(":")
    runtime = GatewayRuntime(
        token=token,
        workdir=workdir,
        seal_key=seal_key.encode() if seal_key else None,
        rules=load_rules(rules_path) if rules_path else None,
        adapter=HttpAdapter(adapter_url, token=adapter_token) if adapter_url else None,
    )
    uvicorn.run(create_app(runtime), host=host or "127.0.0.1", port=int(port or 8787))


@main.command()
@click.argument("scenario_id", type=click.Choice(["tc1", "tc2"]))
@click.option("--defense", type=click.Choice(["on", "off"]), default="off", show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Directory for report files (default: reports/).")
@click.option("--seed", type=int, default=7, show_default=True)
def scenario(scenario_id: str, defense: str, out_dir: Path | None, seed: int) -> None:
    """Run one attack scenario against a fresh simulated agent."""
    with tempfile.TemporaryDirectory(prefix="netsentinel-cli-") as tmp:
        config = harness.ScenarioConfig(defense=defense, workdir=tmp, seed=seed)
        try:
            if scenario_id == "tc1":
                report = harness.run_tc1(config)
            else:
                report = harness.run_tc2(config)
        except harness.ScenarioError as exc:
            raise _fail(str(exc)) from None
        harness.save_report(report, out_dir or Path("reports"))
        _echo_json(report.to_dict())


@main.group()
def report() -> None:
    """Emit agent reports."""


@report.command("risk-matrix")
@click.option("--format", "fmt", type=click.Choice(["json", "md"]), default="json", show_default=True)
def risk_matrix(fmt: str) -> None:
    """Print the scored threat landscape (ranking order)."""
    matrix = maestro.build_risk_matrix(maestro.builtin_registry())
    sys.stdout.write(maestro.emit_report(matrix, fmt).decode("utf-8"))


@main.command()
@click.argument("target", type=click.Choice(["history"]))
@click.option("--path", type=click.Path(path_type=Path), default=Path("history.json"), show_default=True)
@click.option("--key", envvar=ENV_SEAL_KEY, required=False, help="Seal key (env AGENT_SEAL_KEY).")
@click.option("--snapshot-dir", type=click.Path(path_type=Path), default=None,
              help="Also keep a sealed snapshot here for rollback.")
def seal(target: str, path: Path, key: str | None, snapshot_dir: Path | None) -> None:
    """Seal a memory file so tampering becomes detectable."""
    if not key:
        raise _fail("a seal key is required: pass --key or set AGENT_SEAL_KEY")
    if not path.exists():
        path.write_text("[]\n", encoding="utf-8")
    store = integrity.SnapshotStore(snapshot_dir) if snapshot_dir else None
    s = integrity.seal(path, key.encode(), snapshot_store=store)
    _echo_json({"sealed": str(path), "key_id": s.key_id, "mac_hex": s.mac_hex, "sealed_at": s.sealed_at})


@main.command()
@click.argument("target", type=click.Choice(["history"]))
@click.option("--path", type=click.Path(path_type=Path), default=Path("history.json"), show_default=True)
@click.option("--key", envvar=ENV_SEAL_KEY, required=False, help="Seal key (env AGENT_SEAL_KEY).")
def verify(target: str, path: Path, key: str | None) -> None:
    """Check a sealed memory file; exits 1 unless the seal verifies."""
    if not key:
        raise _fail("a seal key is required: pass --key or set AGENT_SEAL_KEY")
    result = integrity.verify(path, key.encode())
    _echo_json(
        {
            "path": str(path),
            "status": result.status.value,
            "expected_mac": result.expected_mac,
            "computed_mac": result.computed_mac,
            "detail": result.detail,
        }
    )
    if result.status is not integrity.VerificationStatus.VALID:
        raise click.exceptions.Exit(1)


@main.command()
@click.argument("capture", type=click.Path(path_type=Path))
@click.option("--rate", "rate_pps", type=float, required=True, help="Replay rate, packets per second.")
@click.option("--iterations", type=int, default=1, show_default=True)
@click.option("--mode", type=click.Choice(["simulated", "wall"]), default="simulated", show_default=True)
@click.option("--rules", "rules_path", type=click.Path(path_type=Path, exists=True), default=None,
              help="Detection rule set (JSON); defaults to the built-in rules.")
def replay(capture: Path, rate_pps: float, iterations: int, mode: str, rules_path: Path | None) -> None:
    """Replay a capture into a fresh agent and print what it saw."""
    if rate_pps <= 0 or iterations < 1:
        raise click.UsageError("--rate must be > 0 and --iterations >= 1")
    with tempfile.TemporaryDirectory(prefix="netsentinel-replay-") as tmp:
        tmp_path = Path(tmp)
        agent_config = AgentConfig(
            history_path=tmp_path / "history.json",
            forensic_path=tmp_path / "forensic.log",
            snapshot_dir=tmp_path / "snapshots",
            defense_enabled=False,
        )
        if rules_path is not None:
            from .detection import load_rules

            agent_config.rules = load_rules(rules_path)
        agent = MonitoringAgent(agent_config)
        plan = ReplayPlan(source=capture, rate_pps=rate_pps, iterations=iterations, clock=mode)
        try:
            stats = run_replay(plan, agent.deliver, clock=agent.clock if mode == "simulated" else None)
        except (ReplayError, CaptureError) as exc:
            raise _fail(str(exc)) from None
        agent.run_quiet_snapshots(2)
        _echo_json(
            {
                "packets_sent": stats.packets_sent,
                "elapsed_s": stats.elapsed_s,
                "achieved_pps": stats.achieved_pps,
                "snapshots": [s.to_dict() for s in agent.snapshots],
                "alerts": len(agent.events),
            }
        )


if __name__ == "__main__":
    main()
