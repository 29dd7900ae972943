/**
 * Client-side session state: the single source of truth for rendering.
 *
 * Everything shown on screen derives from server messages held here; the
 * client never integrates dynamics itself.  In particular the marker is
 * `view.lastState.x` verbatim, so while the service is paused (no state
 * messages) no input can move it; dragging only accumulates `perturb`
 * deltas that the server applies once it resumes ticking.
 */

import {
  ClientMessage,
  ErrorMessage,
  GridDataMessage,
  StateMessage,
  encodeClientMessage,
  parseServerMessage,
} from "./protocol.js";
import { Transport } from "./transport.js";

export interface DragVector {
  from: [number, number];
  to: [number, number];
}

export interface ViewState {
  connection: "connecting" | "open" | "closed";
  lastState: StateMessage | null;
  grid: GridDataMessage | null;
  trail: Array<[number, number]>;
  drag: DragVector | null;
  lambda: number;
  running: boolean;
  lastError: ErrorMessage | null;
  hint: string | null;
}

const TRAIL_LIMIT = 500;

export interface SessionOptions {
  tickRateHz?: number;
  now?: () => number;
}

export class PlaygroundSession {
  readonly view: ViewState = {
    connection: "connecting",
    lastState: null,
    grid: null,
    trail: [],
    drag: null,
    lambda: 1.0,
    running: false,
    lastError: null,
    hint: null,
  };
  onChange: (() => void) | null = null;

  private transport: Transport;
  private tickRateHz: number;
  private now: () => number;
  private awaitingStart = false;
  private dragging = false;
  private dragAnchor: [number, number] | null = null;
  private pendingDelta: [number, number] = [0, 0];
  private lastPerturbSentAt = -Infinity;

  constructor(transport: Transport, options: SessionOptions = {}) {
    this.transport = transport;
    this.tickRateHz = options.tickRateHz ?? 60;
    this.now =
      options.now ??
      (typeof performance !== "undefined" ? () => performance.now() : () => Date.now());
    transport.onLine = (line) => this.handleLine(line);
    transport.onOpen = () => {
      this.view.connection = "open";
      this.emit();
    };
    transport.onClose = () => {
      this.view.connection = "closed";
      this.emit();
    };
  }

  private emit(): void {
    this.onChange?.();
  }

  private send(msg: ClientMessage): void {
    const dim = this.view.grid?.dim;
    this.transport.send(encodeClientMessage(msg, dim));
  }

  handleLine(line: string): void {
    let msg;
    try {
      msg = parseServerMessage(line);
    } catch (err) {
      this.view.lastError = {
        type: "error",
        code: "client-parse",
        message: String(err),
      };
      this.emit();
      return;
    }
    switch (msg.type) {
      case "state": {
        if (this.awaitingStart) return; // stale frames from before the restart
        const last = this.view.lastState;
        if (last && msg.tick < last.tick) return; // rendered tick never decreases
        this.view.lastState = msg;
        this.view.trail.push([msg.x[0], msg.x[1]]);
        if (this.view.trail.length > TRAIL_LIMIT) {
          this.view.trail.splice(0, this.view.trail.length - TRAIL_LIMIT);
        }
        break;
      }
      case "grid_data":
        this.view.grid = msg;
        break;
      case "ack":
        if (msg.ack === "start") {
          this.awaitingStart = false;
          this.view.lastState = null;
          this.view.trail = [];
          this.view.running = true;
        } else if (msg.ack === "pause") {
          this.view.running = false;
        } else if (msg.ack === "resume") {
          this.view.running = true;
        }
        break;
      case "error":
        this.view.lastError = msg;
        break;
    }
    this.emit();
  }

  // -- outgoing intents ------------------------------------------------------

  requestGrid(
    bounds?: number[],
    resolution: number | [number, number] = 100
  ): void {
    this.view.grid = null;
    if (bounds === undefined) {
      this.send({ type: "grid", resolution }); // server derives the model box
    } else {
      this.send({ type: "grid", bounds, resolution });
    }
  }

  start(x0: [number, number], lambda?: number): void {
    const lam = lambda ?? this.view.lambda;
    this.view.lambda = lam;
    this.awaitingStart = true;
    this.send({ type: "start", x0: [x0[0], x0[1]], lambda: lam });
    this.view.lastState = null;
    this.view.trail = [];
    this.emit();
  }

  pause(): void {
    this.send({ type: "pause" });
  }

  resume(): void {
    this.send({ type: "resume" });
  }

  setLambda(lambda: number): void {
    this.view.lambda = lambda;
    if (this.view.lastState) {
      this.send({ type: "set_lambda", lambda });
    }
    this.emit();
  }

  markerPosition(): [number, number] | null {
    const s = this.view.lastState;
    return s ? [s.x[0], s.x[1]] : null;
  }

  /** Dragging pauses the rollout and accumulates perturb deltas. */
  beginDrag(point: [number, number]): boolean {
    if (!this.view.lastState) {
      this.view.hint = "click the canvas to start a rollout first";
      this.emit();
      return false;
    }
    this.dragging = true;
    this.dragAnchor = point;
    this.pendingDelta = [0, 0];
    this.view.drag = { from: this.markerPosition()!, to: point };
    this.send({ type: "pause" });
    this.emit();
    return true;
  }

  dragTo(point: [number, number]): void {
    if (!this.dragging || !this.dragAnchor) return;
    this.pendingDelta[0] += point[0] - this.dragAnchor[0];
    this.pendingDelta[1] += point[1] - this.dragAnchor[1];
    this.dragAnchor = point;
    if (this.view.drag) this.view.drag.to = point;
    this.flushPerturb(false);
    this.emit();
  }

  endDrag(): void {
    if (!this.dragging) return;
    this.dragging = false;
    this.dragAnchor = null;
    this.flushPerturb(true);
    this.send({ type: "resume" });
    this.view.drag = null;
    this.emit();
  }

  private flushPerturb(force: boolean): void {
    const [dx, dy] = this.pendingDelta;
    if (dx === 0 && dy === 0) return;
    const interval = 1000 / this.tickRateHz;
    if (!force && this.now() - this.lastPerturbSentAt < interval) return;
    this.lastPerturbSentAt = this.now();
    this.pendingDelta = [0, 0];
    this.send({ type: "perturb", delta: [dx, dy] });
  }

  close(): void {
    this.transport.close();
  }
}
