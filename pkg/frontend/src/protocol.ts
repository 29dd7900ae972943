/**
 * Wire schema of the simulation service: one JSON object per line/frame.
 *
 * Every outgoing message passes through `validateClientMessage` before it is
 * sent, so the UI can only ever emit schema-valid traffic; incoming lines go
 * through `parseServerMessage`, which rejects anything the golden transcript
 * schema does not allow.
 */

export interface StateMessage {
  type: "state";
  tick: number;
  x: number[];
  distance: number;
  phase: number;
  velocity: number[];
  lyapunov: number;
}

export interface GridDataMessage {
  type: "grid_data";
  bounds: [number, number, number, number];
  resolution: [number, number];
  distance: number[];
  phase: number[];
  curves: number[][][];
  dim: number;
}

export interface AckMessage {
  type: "ack";
  ack: string;
  at_tick: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export type ServerMessage = StateMessage | GridDataMessage | AckMessage | ErrorMessage;

export type ClientMessage =
  | { type: "load"; model: unknown }
  | { type: "start"; x0: number[]; lambda?: number; step_size?: number }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "perturb"; delta: number[] }
  | { type: "set_lambda"; lambda: number }
  | { type: "set_state"; x: number[] }
  | { type: "grid"; bounds?: number[]; resolution: number | number[] };

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isFiniteVector(v: unknown, length?: number): v is number[] {
  return (
    Array.isArray(v) &&
    v.length > 0 &&
    (length === undefined || v.length === length) &&
    v.every(isFiniteNumber)
  );
}

/** Returns null when valid, otherwise a description of the violation. */
export function validateClientMessage(msg: ClientMessage, dim?: number): string | null {
  switch (msg.type) {
    case "load":
      return msg.model && typeof msg.model === "object" ? null : "load needs a model object";
    case "start":
      if (!isFiniteVector(msg.x0, dim)) return "start.x0 must be a finite vector";
      if (msg.lambda !== undefined && !(isFiniteNumber(msg.lambda) && msg.lambda > 0))
        return "start.lambda must be > 0";
      if (msg.step_size !== undefined && !(isFiniteNumber(msg.step_size) && msg.step_size > 0))
        return "start.step_size must be > 0";
      return null;
    case "pause":
    case "resume":
      return null;
    case "perturb":
      return isFiniteVector(msg.delta, dim) ? null : "perturb.delta must be a finite vector";
    case "set_lambda":
      return isFiniteNumber(msg.lambda) && msg.lambda > 0 ? null : "set_lambda.lambda must be > 0";
    case "set_state":
      return isFiniteVector(msg.x, dim) ? null : "set_state.x must be a finite vector";
    case "grid": {
      if (msg.bounds !== undefined && !isFiniteVector(msg.bounds, 4))
        return "grid.bounds must be 4 numbers when given";
      const res = msg.resolution;
      const okScalar = isFiniteNumber(res) && res >= 2;
      const okPair = isFiniteVector(res) && res.length === 2 && res.every((v) => v >= 2);
      return okScalar || okPair ? null : "grid.resolution must be >= 2 per axis";
    }
    default:
      return `unknown client message type ${(msg as { type?: unknown }).type}`;
  }
}

export function parseServerMessage(line: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new Error(`not JSON: ${line.slice(0, 80)}`);
  }
  if (typeof raw !== "object" || raw === null || !("type" in raw)) {
    throw new Error("server message must be an object with a type");
  }
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "state":
      if (
        isFiniteNumber(msg.tick) &&
        isFiniteVector(msg.x) &&
        isFiniteNumber(msg.distance) &&
        isFiniteNumber(msg.phase) &&
        isFiniteVector(msg.velocity) &&
        isFiniteNumber(msg.lyapunov)
      ) {
        return msg as unknown as StateMessage;
      }
      throw new Error("malformed state message");
    case "grid_data":
      if (
        isFiniteVector(msg.bounds, 4) &&
        isFiniteVector(msg.resolution, 2) &&
        Array.isArray(msg.distance) &&
        Array.isArray(msg.phase) &&
        Array.isArray(msg.curves) &&
        isFiniteNumber(msg.dim)
      ) {
        return msg as unknown as GridDataMessage;
      }
      throw new Error("malformed grid_data message");
    case "ack":
      if (typeof msg.ack === "string" && isFiniteNumber(msg.at_tick)) {
        return msg as unknown as AckMessage;
      }
      throw new Error("malformed ack message");
    case "error":
      if (typeof msg.code === "string" && typeof msg.message === "string") {
        return msg as unknown as ErrorMessage;
      }
      throw new Error("malformed error message");
    default:
      throw new Error(`unknown server message type ${String(msg.type)}`);
  }
}

export function encodeClientMessage(msg: ClientMessage, dim?: number): string {
  const problem = validateClientMessage(msg, dim);
  if (problem) {
    throw new Error(`refusing to send invalid message: ${problem}`);
  }
  return JSON.stringify(msg);
}
