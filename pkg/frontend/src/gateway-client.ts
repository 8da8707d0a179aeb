/**
 * HTTP side of the gateway: decisions and one-shot fetches.
 *
 * Decisions are fire-and-confirm: the POST only requests the transition,
 * the view moves when the action_status frame arrives on the socket. A
 * second click while a request is in flight is suppressed client-side; a
 * 409 means someone else decided first, so the authoritative state is
 * fetched and handed back for the view to adopt.
 */

import { Proposal, ProposalSchema } from "./messages.js";

export interface HttpResponse {
  status: number;
  json: unknown;
}

export interface GatewayHttp {
  get(path: string): Promise<HttpResponse>;
  post(path: string, body?: unknown): Promise<HttpResponse>;
}

/** fetch()-backed transport for the browser build. */
export function fetchTransport(baseUrl: string, token: string): GatewayHttp {
  const headers = { Authorization: `Bearer ${token}`, "Content-Type": "application/json" };
  const call = async (method: string, path: string, body?: unknown): Promise<HttpResponse> => {
    const response = await fetch(baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let json: unknown = null;
    try {
      json = await response.json();
    } catch {
      json = null;
    }
    return { status: response.status, json };
  };
  return {
    get: (path) => call("GET", path),
    post: (path, body) => call("POST", path, body),
  };
}

export type SubmitOutcome =
  | { outcome: "confirmed"; proposal: Proposal }
  | { outcome: "conflict"; proposal: Proposal | null }
  | { outcome: "suppressed" }
  | { outcome: "error"; status: number };

export class DecisionSubmitter {
  private inFlight = new Set<string>();

  constructor(
    private readonly http: GatewayHttp,
    private readonly operator: string = "operator",
  ) {}

  async submit(actionId: string, verdict: "approve" | "override"): Promise<SubmitOutcome> {
    if (this.inFlight.has(actionId)) {
      return { outcome: "suppressed" };
    }
    this.inFlight.add(actionId);
    try {
      const response = await this.http.post(`/actions/${actionId}/${verdict}`, {
        operator: this.operator,
      });
      if (response.status === 200) {
        const proposal = ProposalSchema.safeParse(response.json);
        if (proposal.success) {
          return { outcome: "confirmed", proposal: proposal.data };
        }
        return { outcome: "error", status: response.status };
      }
      if (response.status === 409) {
        return { outcome: "conflict", proposal: await this.authoritative(actionId) };
      }
      return { outcome: "error", status: response.status };
    } finally {
      this.inFlight.delete(actionId);
    }
  }

  /** After a conflict, ask the server what actually happened. */
  private async authoritative(actionId: string): Promise<Proposal | null> {
    const response = await this.http.get("/actions");
    if (response.status !== 200) return null;
    const body = response.json as { actions?: unknown[] } | null;
    for (const raw of body?.actions ?? []) {
      const parsed = ProposalSchema.safeParse(raw);
      if (parsed.success && parsed.data.id === actionId) {
        return parsed.data;
      }
    }
    return null;
  }
}

export async function fetchRiskMatrix(http: GatewayHttp): Promise<unknown | null> {
  const response = await http.get("/risk-matrix");
  return response.status === 200 ? response.json : null;
}

export async function runScenario(
  http: GatewayHttp,
  scenario: "tc1" | "tc2",
  defense: "on" | "off",
): Promise<HttpResponse> {
  return http.post(`/scenarios/${scenario}/run`, { defense, auto_approve: false });
}
