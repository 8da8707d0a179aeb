/**
 * Wire-format schemas for the gateway's WebSocket stream.
 *
 * Every inbound frame is validated before it can touch view state; a frame
 * that fails its schema is dropped with a console diagnostic, never
 * partially applied.
 */

import { z } from "zod";

export const TelemetrySchema = z.object({
  seq: z.number().int().nonnegative(),
  t: z.number(),
  pps: z.number(),
  bytes_per_s: z.number(),
  top_protocol: z.string(),
  cpu_util: z.number(),
  mem_util: z.number(),
  queue_len: z.number(),
  update_interval_s: z.number().positive(),
});
export type Telemetry = z.infer<typeof TelemetrySchema>;

export const AlertSchema = z.object({
  t: z.number(),
  rule_id: z.string(),
  severity: z.string(),
  observed: z.number(),
  threshold: z.number(),
  subject: z.string(),
  maps_to_threat: z.number().int(),
});
export type Alert = z.infer<typeof AlertSchema>;

export const ProposalSchema = z.object({
  id: z.string().min(1),
  kind: z.enum(["raise_alert", "block_source", "extend_capture", "rollback_history", "rate_limit"]),
  params: z.record(z.string(), z.unknown()),
  confidence: z.number().min(0).max(1),
  policy: z.enum(["auto", "needs_approval"]),
  status: z.enum(["pending", "approved", "overridden", "executed", "expired"]),
  created_t: z.number(),
  decided_t: z.number().nullable(),
  operator: z.string().nullable(),
});
export type Proposal = z.infer<typeof ProposalSchema>;

export const ExplanationSchema = z.object({
  summary: z.string(),
  suspected_threats: z.array(
    z.object({ threat_id: z.number().int(), confidence: z.number().min(0).max(1) }),
  ),
  evidence: z.array(z.string()),
  recommended_actions: z.array(ProposalSchema),
});
export type Explanation = z.infer<typeof ExplanationSchema>;

export const ScenarioStatusSchema = z.object({
  scenario: z.string(),
  defense: z.string(),
  state: z.enum(["running", "finished"]),
  validated: z.boolean().optional(),
});
export type ScenarioStatus = z.infer<typeof ScenarioStatusSchema>;

export const WireMessageSchema = z.object({
  type: z.enum([
    "telemetry",
    "alert",
    "explanation",
    "action_proposal",
    "action_status",
    "scenario_status",
  ]),
  seq: z.number().int().positive(),
  payload: z.record(z.string(), z.unknown()),
});
export type WireMessage = z.infer<typeof WireMessageSchema>;

export const PAYLOAD_SCHEMAS = {
  telemetry: TelemetrySchema,
  alert: AlertSchema,
  explanation: ExplanationSchema,
  action_proposal: ProposalSchema,
  action_status: ProposalSchema,
  scenario_status: ScenarioStatusSchema,
} as const;
