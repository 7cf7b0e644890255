/**
 * Wire protocol for the controller's supervision endpoint.
 *
 * Message shapes mirror the JSON Schemas in ../schemas; the validators
 * here are strict (unknown types, missing fields, and out-of-range
 * values throw), and the conformance tests replay the recorded fixture
 * streams through them so both sides of the repo validate the same bytes.
 */

export const SCHEMA_VERSION = 1;

export const MODES = ["autonomous", "approval", "wizard_of_oz", "paused", "stopped"] as const;
export type Mode = (typeof MODES)[number];

export const EMOTIONS = [
  "neutral", "pleasure", "excitement", "arousal", "distress",
  "misery", "depression", "sleepiness", "contentment",
] as const;
export type Emotion = (typeof EMOTIONS)[number];

export const COMMAND_KINDS = [
  "select_scenario", "start", "pause", "resume", "stop",
  "set_mode", "approve", "deny", "override_behavior", "set_difficulty",
] as const;
export type CommandKind = (typeof COMMAND_KINDS)[number];

export const PROVENANCE_SOURCES = ["reactive", "deliberative", "emotional"] as const;

export interface QueueEntry {
  id: string;
  tag: string;
}

export interface Snapshot {
  tick: number;
  mode: Mode;
  mood_valence: number;
  mood_arousal: number;
  emotion: Emotion;
  emotion_intensity: number;
  engagement: number;
  drives: Record<string, number>;
  scenario_id: string;
  scenario_state: string;
  counters: Record<string, number>;
  goal_reached: boolean;
  difficulty: number;
  expected_token: string | null;
  behavior_tag: string | null;
  provenance: Record<string, string>;
  approval_queue: QueueEntry[];
}

export interface Hello {
  session_id: string;
  robot_id: string;
  scenario_id: string;
  scenarios: string[];
  behaviors: string[];
  tick_period_ms: number;
}

export interface AckPayload {
  kind: string;
  accepted: boolean;
  reason: string | null;
  correlation_id?: string | null;
}

export type ServerMessage =
  | { type: "hello"; v: number; payload: Hello }
  | { type: "snapshot"; v: number; payload: Snapshot }
  | { type: "ack"; v: number; payload: AckPayload }
  | { type: "error"; v: number; payload: { message: string } };

export interface CommandPayload {
  scenario?: string;
  mode?: Mode;
  id?: string;
  tag?: string;
  index?: number;
}

export class ProtocolError extends Error {}

function fail(path: string, reason: string): never {
  throw new ProtocolError(`${path}: ${reason}`);
}

function obj(value: unknown, path: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    fail(path, "expected an object");
  }
  return value as Record<string, unknown>;
}

function str(value: unknown, path: string): string {
  if (typeof value !== "string") fail(path, "expected a string");
  return value;
}

function strOrNull(value: unknown, path: string): string | null {
  if (value === null) return null;
  return str(value, path);
}

function presentStrOrNull(p: Record<string, unknown>, key: string, path: string): string | null {
  if (!(key in p)) fail(`${path}.${key}`, "missing");
  return strOrNull(p[key], `${path}.${key}`);
}

function num(value: unknown, path: string, lo = -Infinity, hi = Infinity): number {
  if (typeof value !== "number" || Number.isNaN(value)) fail(path, "expected a number");
  if (value < lo || value > hi) fail(path, `out of range [${lo}, ${hi}]`);
  return value;
}

function int(value: unknown, path: string, lo = -Infinity): number {
  const n = num(value, path, lo);
  if (!Number.isInteger(n)) fail(path, "expected an integer");
  return n;
}

function bool(value: unknown, path: string): boolean {
  if (typeof value !== "boolean") fail(path, "expected a boolean");
  return value;
}

function oneOf<T extends readonly string[]>(value: unknown, options: T, path: string): T[number] {
  const s = str(value, path);
  if (!options.includes(s)) fail(path, `expected one of ${options.join(", ")}`);
  return s as T[number];
}

function numberMap(value: unknown, path: string, lo: number, hi: number, integer = false): Record<string, number> {
  const record = obj(value, path);
  const out: Record<string, number> = {};
  for (const [key, v] of Object.entries(record)) {
    out[key] = integer ? int(v, `${path}.${key}`, lo) : num(v, `${path}.${key}`, lo, hi);
  }
  return out;
}

function parseSnapshot(value: unknown, path: string): Snapshot {
  const p = obj(value, path);
  const queue = p["approval_queue"];
  if (!Array.isArray(queue)) fail(`${path}.approval_queue`, "expected an array");
  const provenance = obj(p["provenance"] ?? fail(`${path}.provenance`, "missing"), `${path}.provenance`);
  for (const [unit, source] of Object.entries(provenance)) {
    oneOf(source, PROVENANCE_SOURCES, `${path}.provenance.${unit}`);
  }
  return {
    tick: int(p["tick"], `${path}.tick`, 0),
    mode: oneOf(p["mode"], MODES, `${path}.mode`),
    mood_valence: num(p["mood_valence"], `${path}.mood_valence`, -1, 1),
    mood_arousal: num(p["mood_arousal"], `${path}.mood_arousal`, -1, 1),
    emotion: oneOf(p["emotion"], EMOTIONS, `${path}.emotion`),
    emotion_intensity: num(p["emotion_intensity"], `${path}.emotion_intensity`, 0, 1),
    engagement: num(p["engagement"], `${path}.engagement`, 0, 1),
    drives: numberMap(p["drives"], `${path}.drives`, 0, 1),
    scenario_id: str(p["scenario_id"], `${path}.scenario_id`),
    scenario_state: str(p["scenario_state"], `${path}.scenario_state`),
    counters: numberMap(p["counters"], `${path}.counters`, 0, Infinity, true),
    goal_reached: bool(p["goal_reached"], `${path}.goal_reached`),
    difficulty: int(p["difficulty"], `${path}.difficulty`, 0),
    expected_token: presentStrOrNull(p, "expected_token", path),
    behavior_tag: presentStrOrNull(p, "behavior_tag", path),
    provenance: provenance as Record<string, string>,
    approval_queue: queue.map((entry, i) => {
      const e = obj(entry, `${path}.approval_queue[${i}]`);
      return {
        id: str(e["id"], `${path}.approval_queue[${i}].id`),
        tag: str(e["tag"], `${path}.approval_queue[${i}].tag`),
      };
    }),
  };
}

function parseHello(value: unknown, path: string): Hello {
  const p = obj(value, path);
  const list = (key: string): string[] => {
    const v = p[key];
    if (!Array.isArray(v)) fail(`${path}.${key}`, "expected an array");
    return v.map((s, i) => str(s, `${path}.${key}[${i}]`));
  };
  return {
    session_id: str(p["session_id"], `${path}.session_id`),
    robot_id: str(p["robot_id"], `${path}.robot_id`),
    scenario_id: str(p["scenario_id"], `${path}.scenario_id`),
    scenarios: list("scenarios"),
    behaviors: list("behaviors"),
    tick_period_ms: int(p["tick_period_ms"], `${path}.tick_period_ms`, 1),
  };
}

function parseAck(value: unknown, path: string): AckPayload {
  const p = obj(value, path);
  return {
    kind: str(p["kind"], `${path}.kind`),
    accepted: bool(p["accepted"], `${path}.accepted`),
    reason: presentStrOrNull(p, "reason", path),
    correlation_id: p["correlation_id"] === undefined ? undefined : strOrNull(p["correlation_id"], `${path}.correlation_id`),
  };
}

/** Decode and validate one inbound message; throws ProtocolError on violation. */
export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    fail("message", "not valid JSON");
  }
  const m = obj(data, "message");
  const v = int(m["v"], "message.v", 1);
  const type = str(m["type"], "message.type");
  switch (type) {
    case "hello":
      return { type, v, payload: parseHello(m["payload"], "hello") };
    case "snapshot":
      return { type, v, payload: parseSnapshot(m["payload"], "snapshot") };
    case "ack":
      return { type, v, payload: parseAck(m["payload"], "ack") };
    case "error": {
      const p = obj(m["payload"], "error");
      return { type, v, payload: { message: str(p["message"], "error.message") } };
    }
    default:
      fail("message.type", `unknown type ${type}`);
  }
}

const PAYLOAD_KEYS: Record<CommandKind, (keyof CommandPayload)[]> = {
  select_scenario: ["scenario"],
  start: [],
  pause: [],
  resume: [],
  stop: [],
  set_mode: ["mode"],
  approve: ["id"],
  deny: ["id"],
  override_behavior: ["tag"],
  set_difficulty: ["index"],
};

/** Build a schema-valid outbound command message. */
export function buildCommand(
  kind: CommandKind,
  payload: CommandPayload = {},
  correlationId?: string,
): string {
  if (!COMMAND_KINDS.includes(kind)) {
    throw new ProtocolError(`unknown command kind ${kind}`);
  }
  const allowed = PAYLOAD_KEYS[kind];
  for (const key of allowed) {
    if (payload[key] === undefined) {
      throw new ProtocolError(`command ${kind} requires payload field ${String(key)}`);
    }
  }
  const clean: Record<string, unknown> = {};
  for (const key of allowed) clean[key] = payload[key];
  const body: Record<string, unknown> = { kind, payload: clean };
  if (correlationId !== undefined) body["correlation_id"] = correlationId;
  return JSON.stringify({ type: "command", v: SCHEMA_VERSION, payload: body });
}
