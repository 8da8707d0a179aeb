/**
 * Browser entry: wires the reconnecting stream into the reducer and paints
 * the panels. All data flows through applyMessage(); operator decisions go
 * out through the DecisionSubmitter and come back as action_status frames.
 */

import { buildChart, renderChartSvg } from "./chart.js";
import {
  DecisionSubmitter,
  fetchRiskMatrix,
  fetchTransport,
  runScenario,
} from "./gateway-client.js";
import { ReconnectingStream } from "./reconnect.js";
import {
  ViewState,
  applyMessage,
  crossesGuideLine,
  initialState,
  maxIntervalS,
  pendingProposals,
  setConnection,
  setRiskMatrix,
} from "./state.js";

const params = new URLSearchParams(window.location.search);
const token = params.get("token") ?? "dev-token";
const httpBase = params.get("api") ?? "";
const wsUrl =
  params.get("ws") ??
  `${window.location.protocol === "https:" ? "wss" : "ws"}://${window.location.host}/ws?token=${token}`;

const http = fetchTransport(httpBase, token);
const submitter = new DecisionSubmitter(http);

let state: ViewState = initialState();

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function render(): void {
  el("connection").textContent = state.connection;
  el("connection").dataset.status = state.connection;

  el("chart").innerHTML = renderChartSvg(buildChart(state));
  const peak = maxIntervalS(state);
  el("peak").textContent = peak === null ? "-" : `${peak.toFixed(2)} s`;
  el("peak").classList.toggle("over-line", crossesGuideLine(state));

  el("alerts").innerHTML = state.alerts
    .slice(-12)
    .reverse()
    .map(
      (a) =>
        `<li class="sev-${a.severity.toLowerCase()}">[${a.t.toFixed(1)}s] ${a.rule_id}: ` +
        `${Math.round(a.observed)} vs ${Math.round(a.threshold)} (${a.subject})</li>`,
    )
    .join("");

  el("explanations").innerHTML = state.explanations
    .slice(-6)
    .reverse()
    .map((e) => `<li>${e.summary}</li>`)
    .join("");

  el("pending").innerHTML = pendingProposals(state)
    .map(
      (p) =>
        `<li data-id="${p.id}"><code>${p.id}</code> ${p.kind} ` +
        `(confidence ${p.confidence.toFixed(2)}) ` +
        `<button data-verdict="approve" data-id="${p.id}">approve</button>` +
        `<button data-verdict="override" data-id="${p.id}">override</button></li>`,
    )
    .join("") || "<li class='empty'>nothing pending</li>";

  el("decided").innerHTML = Object.values(state.decided)
    .map((p) => `<li><code>${p.id}</code> ${p.kind} -> ${p.status}</li>`)
    .join("");

  el("scenario").textContent = state.scenario
    ? `${state.scenario.scenario} (${state.scenario.defense}): ${state.scenario.state}` +
      (state.scenario.validated === undefined ? "" : `, validated=${state.scenario.validated}`)
    : "idle";

  el("risk-matrix").textContent = state.riskMatrix
    ? JSON.stringify(state.riskMatrix, null, 2)
    : "not loaded";
}

function update(next: ViewState): void {
  state = next;
  render();
}

el("pending").addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const id = target.dataset.id;
  const verdict = target.dataset.verdict as "approve" | "override" | undefined;
  if (!id || !verdict) return;
  // fire-and-confirm: the pending entry moves only when action_status arrives
  void submitter.submit(id, verdict).then((outcome) => {
    if (outcome.outcome === "error") console.warn("decision failed", outcome);
  });
});

el("run-tc1").addEventListener("click", () => void runScenario(http, "tc1", "on"));
el("run-tc2").addEventListener("click", () => void runScenario(http, "tc2", "on"));

const stream = new ReconnectingStream(
  () => new WebSocket(wsUrl) as unknown as import("./reconnect.js").SocketLike,
  {
    onFrame: (frame) => update(applyMessage(state, frame)),
    onStatus: (status) => update(setConnection(state, status)),
  },
);
stream.start();

void fetchRiskMatrix(http).then((matrix) => update(setRiskMatrix(state, matrix)));
render();
