/**
 * View state as a pure function of the message transcript.
 *
 * applyMessage() is the only way data enters the view: it validates the
 * frame, enforces strictly increasing per-connection seq numbers, and
 * returns a new state. Replaying a recorded transcript therefore always
 * reproduces the same final state, which is what the tests do.
 */

import {
  Alert,
  Explanation,
  PAYLOAD_SCHEMAS,
  Proposal,
  ScenarioStatus,
  Telemetry,
  WireMessageSchema,
} from "./messages.js";

export const SNAPSHOT_BUFFER = 300;
export const ALERT_BUFFER = 500;
export const DEGRADED_FACTOR = 1.25;
export const GUIDE_LINE_S = 13;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ViewState {
  connection: ConnectionStatus;
  lastSeq: number;
  snapshots: Telemetry[];
  alerts: Alert[];
  explanations: Explanation[];
  pending: Record<string, Proposal>;
  decided: Record<string, Proposal>;
  scenario: ScenarioStatus | null;
  riskMatrix: unknown | null;
  baselineIntervalS: number | null;
  droppedFrames: number;
}

export function initialState(): ViewState {
  return {
    connection: "connecting",
    lastSeq: 0,
    snapshots: [],
    alerts: [],
    explanations: [],
    pending: {},
    decided: {},
    scenario: null,
    riskMatrix: null,
    baselineIntervalS: null,
    droppedFrames: 0,
  };
}

function dropped(state: ViewState, reason: string, frame: unknown): ViewState {
  console.warn(`dashboard: dropped frame (${reason})`, frame);
  return { ...state, droppedFrames: state.droppedFrames + 1 };
}

/** Apply one raw frame; invalid or out-of-order frames leave the view
 * unchanged apart from the dropped counter. */
export function applyMessage(state: ViewState, raw: unknown): ViewState {
  const envelope = WireMessageSchema.safeParse(raw);
  if (!envelope.success) {
    return dropped(state, "envelope schema", raw);
  }
  const message = envelope.data;
  if (message.seq <= state.lastSeq) {
    return dropped(state, `seq ${message.seq} not after ${state.lastSeq}`, raw);
  }
  const parsed = PAYLOAD_SCHEMAS[message.type].safeParse(message.payload);
  if (!parsed.success) {
    return dropped(state, `${message.type} payload schema`, raw);
  }
  const next: ViewState = { ...state, lastSeq: message.seq };
  switch (message.type) {
    case "telemetry": {
      const snap = parsed.data as Telemetry;
      next.snapshots = [...state.snapshots, snap].slice(-SNAPSHOT_BUFFER);
      next.baselineIntervalS = state.baselineIntervalS ?? snap.update_interval_s;
      break;
    }
    case "alert": {
      next.alerts = [...state.alerts, parsed.data as Alert].slice(-ALERT_BUFFER);
      break;
    }
    case "explanation": {
      next.explanations = [...state.explanations, parsed.data as Explanation];
      break;
    }
    case "action_proposal": {
      const proposal = parsed.data as Proposal;
      next.pending = { ...state.pending, [proposal.id]: proposal };
      break;
    }
    case "action_status": {
      // the only path out of the pending list: server confirmation
      const proposal = parsed.data as Proposal;
      const pending = { ...state.pending };
      delete pending[proposal.id];
      next.pending = pending;
      next.decided = { ...state.decided, [proposal.id]: proposal };
      break;
    }
    case "scenario_status": {
      next.scenario = parsed.data as ScenarioStatus;
      break;
    }
  }
  return next;
}

export function reduceTranscript(frames: unknown[], start?: ViewState): ViewState {
  let state = start ?? initialState();
  for (const frame of frames) {
    state = applyMessage(state, frame);
  }
  return state;
}

export function setConnection(state: ViewState, connection: ConnectionStatus): ViewState {
  return { ...state, connection };
}

export function setRiskMatrix(state: ViewState, riskMatrix: unknown): ViewState {
  return { ...state, riskMatrix };
}

// -- selectors the renderer consumes -------------------------------------

export function maxIntervalS(state: ViewState): number | null {
  if (state.snapshots.length === 0) return null;
  return Math.max(...state.snapshots.map((s) => s.update_interval_s));
}

/** Snapshot seqs whose interval exceeds the degraded threshold
 * (baseline x 1.25), the points the chart flags. */
export function degradedSeqs(state: ViewState, factor: number = DEGRADED_FACTOR): number[] {
  const baseline = state.baselineIntervalS;
  if (baseline === null) return [];
  return state.snapshots
    .filter((s) => s.update_interval_s > baseline * factor)
    .map((s) => s.seq);
}

export function crossesGuideLine(state: ViewState, guideS: number = GUIDE_LINE_S): boolean {
  const peak = maxIntervalS(state);
  return peak !== null && peak > guideS;
}

export function pendingProposals(state: ViewState): Proposal[] {
  return Object.values(state.pending).sort((a, b) => a.id.localeCompare(b.id));
}

export function alertMarkers(state: ViewState): { t: number; rule: string; severity: string }[] {
  return state.alerts.map((a) => ({ t: a.t, rule: a.rule_id, severity: a.severity }));
}
