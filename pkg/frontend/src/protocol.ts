/**
 * Wire protocol types for the session channel.
 *
 * These mirror the server's published WireMessage JSON schema
 * (GET /api/schema/wire). Every server frame carries the session id and a
 * per-session monotonic sequence number; client frames send only a type
 * and payload, and the server assigns sequencing when it logs them.
 */

export type Role = "student" | "caregiver";

export type Accuracy = "correct" | "error";

export interface StepRow {
  text: string;
  accuracy: Accuracy;
  feedback: string;
}

export interface ChatEntry {
  role: Role;
  text: string;
  ts: number;
}

export interface Recommendation {
  tag: string;
  body: string;
}

export interface StateSyncPayload {
  question: string | null;
  index: number;
  total: number;
  steps: StepRow[];
  chat: ChatEntry[];
  last_accuracy: Accuracy | "none";
  caregiver_joined: boolean;
  completed: boolean;
}

export interface AttemptResultPayload {
  text: string;
  accuracy: Accuracy;
  feedback: string;
  matched_rule: string | null;
  buggy_rule: string | null;
}

export interface HintPayload {
  level: 1 | 2 | 3;
  text: string;
}

export interface NextStepsPayload {
  steps: string[];
}

export interface RecommendationsPayload {
  items: Recommendation[];
  generated_by: "llm" | "fallback";
  context_class?: string;
}

export interface ProblemAdvancedPayload {
  new_question: string | null;
  index: number;
}

export interface ErrorPayload {
  code: string;
  detail: string;
}

/** A frame as received from the server. */
export type ServerFrame =
  | { session: string; seq: number; type: "state_sync"; payload: StateSyncPayload }
  | { session: string; seq: number; type: "attempt_result"; payload: AttemptResultPayload }
  | { session: string; seq: number; type: "hint"; payload: HintPayload }
  | { session: string; seq: number; type: "chat"; payload: ChatEntry }
  | { session: string; seq: number; type: "next_steps"; payload: NextStepsPayload }
  | { session: string; seq: number; type: "recommendations"; payload: RecommendationsPayload }
  | { session: string; seq: number; type: "problem_advanced"; payload: ProblemAdvancedPayload }
  | { session: string; seq: number; type: "error"; payload: ErrorPayload };

/** A frame as sent by this client. */
export type ClientFrame =
  | { type: "attempt"; payload: { text: string } }
  | { type: "hint_request"; payload: { level?: 1 | 2 | 3 } }
  | { type: "chat"; payload: { text: string } };

const SERVER_TYPES = new Set([
  "state_sync",
  "attempt_result",
  "hint",
  "chat",
  "next_steps",
  "recommendations",
  "problem_advanced",
  "error",
]);

/**
 * Parse one incoming message. Returns null for anything that is not a
 * well-formed server frame; the connection stays up either way.
 */
export function parseServerFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const frame = data as Record<string, unknown>;
  if (
    typeof frame.session !== "string" ||
    typeof frame.seq !== "number" ||
    typeof frame.type !== "string" ||
    !SERVER_TYPES.has(frame.type) ||
    typeof frame.payload !== "object" ||
    frame.payload === null
  ) {
    return null;
  }
  return frame as unknown as ServerFrame;
}
