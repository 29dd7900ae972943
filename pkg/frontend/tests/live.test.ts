/**
 * End-to-end acceptance against a live local service.
 *
 * The model is produced with the `splinefield fit` CLI from a trajectory
 * CSV, served with `splinefield serve`, and driven through the session the
 * same way pointer handlers do; the UI side never touches the Python
 * package except over the wire.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { validateClientMessage } from "../src/protocol";
import { PlaygroundSession } from "../src/session";
import { Transport } from "../src/transport";

const PYTHON = process.env.PYTHON ?? "python3";

class TcpTransport implements Transport {
  onLine: ((line: string) => void) | null = null;
  onOpen: (() => void) | null = null;
  onClose: (() => void) | null = null;
  log: Record<string, unknown>[] = [];
  private sock: net.Socket;
  private buffer = "";

  constructor(port: number) {
    this.sock = net.createConnection({ host: "127.0.0.1", port });
    this.sock.setNoDelay(true);
    this.sock.on("connect", () => this.onOpen?.());
    this.sock.on("close", () => this.onClose?.());
    this.sock.on("data", (chunk) => {
      this.buffer += chunk.toString("utf8");
      let idx;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, idx);
        this.buffer = this.buffer.slice(idx + 1);
        if (line) this.onLine?.(line);
      }
    });
  }

  send(line: string): void {
    this.log.push(JSON.parse(line));
    this.sock.write(line + "\n");
  }

  close(): void {
    this.sock.destroy();
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(
  predicate: () => boolean,
  timeoutMs: number,
  what: string
): Promise<number> {
  const started = Date.now();
  while (Date.now() - started < timeoutMs) {
    if (predicate()) return Date.now() - started;
    await sleep(20);
  }
  throw new Error(`timed out after ${timeoutMs} ms waiting for ${what}`);
}

let server: ChildProcess;
let port = 0;
let scale = 0;

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "playground-"));
  const m = 120;
  const rows = ["t,x1,x2"];
  for (let j = 0; j < m; j++) {
    const u = j / (m - 1);
    rows.push(`${u},${2 * u},${0.4 * Math.sin(2 * Math.PI * u)}`);
  }
  const csv = join(dir, "demo.csv");
  writeFileSync(csv, rows.join("\n") + "\n");
  const model = join(dir, "demo.model.json");
  execFileSync(PYTHON, [
    "-m", "splinefield.cli", "fit",
    "--input", csv,
    "--segments", "5",
    "--terminal-zero-velocity",
    "--output", model,
  ]);

  const doc = JSON.parse(readFileSync(model, "utf8"));
  const pts: number[][] = doc.segments.flat();
  const mins = [Infinity, Infinity];
  const maxs = [-Infinity, -Infinity];
  for (const p of pts) {
    for (const axis of [0, 1]) {
      mins[axis] = Math.min(mins[axis], p[axis]);
      maxs[axis] = Math.max(maxs[axis], p[axis]);
    }
  }
  scale = Math.hypot(maxs[0] - mins[0], maxs[1] - mins[1]);
  expect(scale).toBeGreaterThan(1);

  server = spawn(PYTHON, [
    "-m", "splinefield.cli", "serve",
    "--model", model,
    "--port", "0",
    "--rate", "240",
  ]);
  const portText = await new Promise<string>((resolve, reject) => {
    let out = "";
    server.stdout!.on("data", (chunk) => {
      out += chunk.toString();
      const match = out.match(/simulation service on 127\.0\.0\.1:(\d+)/);
      if (match) resolve(match[1]);
    });
    server.on("exit", (code) => reject(new Error(`service died: ${code}\n${out}`)));
    setTimeout(() => reject(new Error(`service never announced a port\n${out}`)), 15000);
  });
  port = parseInt(portText, 10);
}, 30000);

afterAll(() => {
  server?.kill();
});

async function openSession(): Promise<{ session: PlaygroundSession; transport: TcpTransport }> {
  const transport = new TcpTransport(port);
  const session = new PlaygroundSession(transport, { tickRateHz: 240 });
  await waitFor(() => session.view.connection === "open", 5000, "connection");
  session.requestGrid(undefined, 40);
  await waitFor(() => session.view.grid !== null, 5000, "grid data");
  return { session, transport };
}

describe("playground against a live service", () => {
  it(
    "drag-perturb round trip: schema-valid perturbs, distance decays after release",
    async () => {
      const { session, transport } = await openSession();
      const curve = session.view.grid!.curves[0];
      const startPoint = curve[30] as [number, number];
      session.start(startPoint, 3.0);
      await waitFor(
        () => (session.view.lastState?.tick ?? 0) >= 5,
        5000,
        "rollout states"
      );

      const marker = session.markerPosition()!;
      expect(session.beginDrag(marker)).toBe(true);
      // Record every rendered distance: the displacement spike is brief.
      let peakDistance = 0;
      session.onChange = () => {
        const s = session.view.lastState;
        if (s) peakDistance = Math.max(peakDistance, s.distance);
      };
      // Scripted pointer path: pull the marker a quarter scale off the curve.
      const steps = 12;
      for (let k = 1; k <= steps; k++) {
        await sleep(12);
        session.dragTo([marker[0], marker[1] + (0.25 * scale * k) / steps]);
      }
      session.endDrag();

      const perturbs = transport.log.filter((m) => m.type === "perturb");
      expect(perturbs.length).toBeGreaterThan(1);
      for (const p of perturbs) {
        expect(validateClientMessage(p as never, 2)).toBeNull();
      }
      const total = perturbs.reduce(
        (acc, p) => acc + (p as { delta: number[] }).delta[1],
        0
      );
      expect(total).toBeCloseTo(0.25 * scale, 6);

      // The readout must fall back below threshold within 5 s of release.
      const elapsed = await waitFor(
        () => {
          const s = session.view.lastState;
          return s !== null && peakDistance > 0.2 * scale && s.distance < 1e-3 * scale;
        },
        5000,
        "distance decay below 1e-3 * scale"
      );
      expect(elapsed).toBeLessThanOrEqual(5000);
      expect(peakDistance).toBeGreaterThan(0.2 * scale); // displacement registered
      session.close();
    },
    30000
  );

  it(
    "no local dynamics: with the service paused the marker ignores all input",
    async () => {
      const { session } = await openSession();
      const curve = session.view.grid!.curves[0];
      session.start(curve[10] as [number, number], 1.0);
      await waitFor(
        () => (session.view.lastState?.tick ?? 0) >= 5,
        5000,
        "rollout states"
      );
      session.pause();
      await waitFor(() => !session.view.running, 5000, "pause ack");
      await sleep(150); // let in-flight frames settle
      const frozenTick = session.view.lastState!.tick;
      const frozenMarker = session.markerPosition()!;

      const probe = session.markerPosition()!;
      session.beginDrag(probe);
      for (let k = 1; k <= 10; k++) {
        await sleep(10);
        session.dragTo([probe[0] + 0.05 * k, probe[1] + 0.03 * k]);
      }
      session.setLambda(2.5);
      await sleep(400);

      expect(session.view.lastState!.tick).toBe(frozenTick);
      expect(session.markerPosition()).toEqual(frozenMarker);
      session.close();
    },
    30000
  );
});
