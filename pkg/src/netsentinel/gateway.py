"""WebSocket and control layer.

Streams telemetry, alerts, explanations, and proposal state changes to any
number of clients (per-connection strictly increasing seq, exactly once),
and exposes the risk matrix, history, the approve/override workflow, and
scenario controls over HTTP. Every route requires the static bearer token;
a slow consumer whose buffer overflows is disconnected and the drop is
recorded in the forensic log.
"""

from __future__ import annotations

import asyncio
import json
from collections import deque
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import Response
from pydantic import BaseModel

from . import harness, integrity, maestro, tuner
from .agent import AlreadyDecidedError, MonitoringAgent, ProposalExpiredError, UnknownActionError

__all__ = ["GatewayRuntime", "Subscriber", "create_app", "DEFAULT_WS_BUFFER"]

DEFAULT_WS_BUFFER = 1_000


class Subscriber:
    """One connection's ordered outbox."""

    def __init__(self, buffer_limit: int = DEFAULT_WS_BUFFER):
        self.buffer_limit = buffer_limit
        self.queue: deque[dict] = deque()
        self.seq = 0
        self.dropped = False

    def enqueue(self, msg_type: str, payload: dict) -> None:
        if self.dropped:
            return
        if len(self.queue) >= self.buffer_limit:
            self.dropped = True
            return
        self.seq += 1
        self.queue.append({"type": msg_type, "seq": self.seq, "payload": payload})

    def pop(self) -> dict | None:
        return self.queue.popleft() if self.queue else None


class GatewayRuntime:
    """Authoritative gateway state: token, active agent, reports, fan-out."""

    def __init__(
        self,
        token: str,
        workdir: str | Path,
        seal_key: bytes | None = None,
        reports_dir: str | Path | None = None,
        ws_buffer: int = DEFAULT_WS_BUFFER,
        rules: list | None = None,
        adapter=None,
    ):
        if not token:
            raise ValueError("a non-empty bearer token is required")
        self.token = token
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.seal_key = seal_key
        self.rules = rules
        self.adapter = adapter
        self.reports_dir = Path(reports_dir) if reports_dir else self.workdir / "reports"
        self.ws_buffer = ws_buffer
        self.forensic = integrity.ForensicLog(self.workdir / "gateway-forensic.log")
        self.matrix = maestro.build_risk_matrix(maestro.builtin_registry())
        self.matrix_json = maestro.emit_report(self.matrix, "json")
        self.agent: MonitoringAgent | None = None
        self.reports: dict[str, harness.ScenarioReport] = {}
        self._subscribers: list[Subscriber] = []
        self._runs = 0

    # -- fan-out ----------------------------------------------------------

    def attach(self) -> Subscriber:
        sub = Subscriber(self.ws_buffer)
        self._subscribers.append(sub)
        return sub

    def detach(self, sub: Subscriber) -> None:
        if sub in self._subscribers:
            self._subscribers.remove(sub)

    def broadcast(self, msg_type: str, payload: dict) -> None:
        for sub in self._subscribers:
            sub.enqueue(msg_type, payload)

    def note_dropped_connection(self, sub: Subscriber) -> None:
        self.forensic.append(
            {"event": "ws_connection_dropped", "reason": "slow consumer exceeded buffer",
             "buffered": len(sub.queue), "last_seq": sub.seq}
        )

    # -- scenario control ---------------------------------------------------

    def run_scenario(self, scenario_id: str, defense: str, auto_approve: bool = True) -> harness.ScenarioReport:
        if scenario_id not in ("tc1", "tc2"):
            raise KeyError(scenario_id)
        self._runs += 1
        config = harness.ScenarioConfig(
            defense=defense,
            workdir=self.workdir / f"run-{self._runs:03d}-{scenario_id}",
            auto_approve=auto_approve,
            rules=self.rules,
            adapter=self.adapter,
        )
        if self.seal_key is not None:
            config.seal_key = self.seal_key
        self.broadcast(
            "scenario_status",
            {"scenario": scenario_id, "defense": defense, "state": "running"},
        )
        execute = harness.execute_tc1 if scenario_id == "tc1" else harness.execute_tc2
        outcome = execute(config, agent_hook=lambda agent: agent.subscribe(self.broadcast))
        self.agent = outcome.agent
        self.reports[scenario_id] = outcome.report
        harness.save_report(outcome.report, self.reports_dir)
        self.broadcast(
            "scenario_status",
            {
                "scenario": scenario_id,
                "defense": defense,
                "state": "finished",
                "validated": outcome.report.validated,
            },
        )
        return outcome.report

    def history_snapshot(self) -> dict:
        if self.agent is not None:
            path = Path(self.agent.config.history_path)
            verification = self.agent.verify_history()
        else:
            path = self.workdir / "history.json"
            verification = (
                integrity.verify(path, self.seal_key) if self.seal_key and path.exists() else None
            )
        entries = [e.to_dict() for e in tuner.load_history(path)] if path.exists() else []
        return {
            "path": str(path),
            "entries": entries,
            "verification": verification.status.value if verification is not None else None,
        }


class DecisionBody(BaseModel):
    operator: str = "operator"


class ScenarioBody(BaseModel):
    defense: str = "off"
    auto_approve: bool = True


def create_app(runtime: GatewayRuntime) -> FastAPI:
    app = FastAPI(title="netsentinel gateway", version="0.1.0")

    def require_token(request: Request) -> None:
        auth = request.headers.get("authorization", "")
        if auth != f"Bearer {runtime.token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    authed = Depends(require_token)

    @app.get("/health", dependencies=[authed])
    def health() -> dict:
        return {"status": "ok", "scenarios_run": len(runtime.reports)}

    @app.get("/risk-matrix", dependencies=[authed])
    def risk_matrix() -> Response:
        # cached bytes: byte-identical across calls
        return Response(content=runtime.matrix_json, media_type="application/json")

    @app.get("/history", dependencies=[authed])
    def history() -> dict:
        return runtime.history_snapshot()

    @app.get("/actions", dependencies=[authed])
    def actions(status: str | None = None) -> dict:
        if runtime.agent is None:
            return {"actions": []}
        proposals = runtime.agent.proposals.values()
        if status is not None:
            proposals = [p for p in proposals if p.status.value == status]
        return {"actions": [p.to_dict() for p in proposals]}

    def _decide(action_id: str, verdict: str, body: DecisionBody | None) -> dict:
        if runtime.agent is None:
            raise HTTPException(status_code=404, detail="no agent is active")
        operator = body.operator if body else "operator"
        try:
            proposal = runtime.agent.decide(action_id, verdict, operator=operator)
        except UnknownActionError:
            raise HTTPException(status_code=404, detail=f"unknown action id {action_id}") from None
        except AlreadyDecidedError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except ProposalExpiredError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return proposal.to_dict()

    @app.post("/actions/{action_id}/approve", dependencies=[authed])
    def approve(action_id: str, body: DecisionBody | None = None) -> dict:
        return _decide(action_id, "approve", body)

    @app.post("/actions/{action_id}/override", dependencies=[authed])
    def override(action_id: str, body: DecisionBody | None = None) -> dict:
        return _decide(action_id, "override", body)

    @app.post("/scenarios/{scenario_id}/run", dependencies=[authed])
    def run_scenario(scenario_id: str, body: ScenarioBody | None = None) -> dict:
        body = body or ScenarioBody()
        if body.defense not in ("on", "off"):
            raise HTTPException(status_code=422, detail="defense must be 'on' or 'off'")
        try:
            report = runtime.run_scenario(scenario_id, body.defense, body.auto_approve)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown scenario {scenario_id}") from None
        return report.to_dict()

    @app.get("/scenarios/{scenario_id}/report", dependencies=[authed])
    def scenario_report(scenario_id: str) -> dict:
        if scenario_id not in runtime.reports:
            raise HTTPException(status_code=404, detail=f"no report for scenario {scenario_id}")
        return runtime.reports[scenario_id].to_dict()

    @app.websocket("/ws")
    async def stream(websocket: WebSocket) -> None:
        token = websocket.query_params.get("token", "")
        if not token:
            auth = websocket.headers.get("authorization", "")
            token = auth.removeprefix("Bearer ").strip()
        if token != runtime.token:
            # refused before any message
            await websocket.close(code=1008)
            return
        await websocket.accept()
        sub = runtime.attach()
        try:
            while True:
                if sub.dropped:
                    runtime.note_dropped_connection(sub)
                    await websocket.send_json(
                        {"type": "error", "seq": sub.seq + 1, "payload": {"reason": "buffer overflow"}}
                    )
                    await websocket.close(code=1011)
                    return
                msg = sub.pop()
                if msg is None:
                    await asyncio.sleep(0.01)
                    continue
                await websocket.send_json(msg)
        except WebSocketDisconnect:
            pass
        finally:
            runtime.detach(sub)

    return app
