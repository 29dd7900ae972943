/** Browser wiring: canvas, pointer gestures, lambda slider, connection care. */

import { draw, heatmapCanvas, makeTransform } from "./render.js";
import { PlaygroundSession } from "./session.js";
import { WebSocketTransport } from "./transport.js";

const canvas = document.getElementById("field") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const toast = document.getElementById("toast")!;
const readout = document.getElementById("readout")!;
const slider = document.getElementById("lambda") as HTMLInputElement;
const sliderLabel = document.getElementById("lambda-value")!;

let session: PlaygroundSession | null = null;
let heatmap: HTMLCanvasElement | null = null;
let heatmapForGrid: object | null = null;
let retryDelayMs = 1000;
let lastErrorShown = "";

function showToast(text: string): void {
  toast.textContent = text;
  toast.classList.add("visible");
  setTimeout(() => toast.classList.remove("visible"), 4000);
}

function render(): void {
  if (!session) return;
  const view = session.view;
  if (view.grid && heatmapForGrid !== view.grid) {
    heatmap = heatmapCanvas(view.grid);
    heatmapForGrid = view.grid;
  }
  banner.classList.toggle("hidden", view.connection === "open");
  if (view.connection !== "open") {
    banner.textContent =
      view.connection === "connecting"
        ? "connecting to simulation service..."
        : `connection lost, retrying in ${(retryDelayMs / 1000).toFixed(0)}s`;
  }
  if (view.lastError && view.lastError.message !== lastErrorShown) {
    lastErrorShown = view.lastError.message;
    showToast(`${view.lastError.code}: ${view.lastError.message}`);
  }
  if (view.hint) {
    showToast(view.hint);
    view.hint = null;
  }
  const s = view.lastState;
  readout.textContent = s
    ? `tick ${s.tick}   distance ${s.distance.toExponential(3)}   phase ${s.phase.toFixed(3)}`
    : "click anywhere on the field to start";
  sliderLabel.textContent = view.lambda.toFixed(1);
  draw(ctx, view, heatmap);
}

function toWorld(event: PointerEvent): [number, number] | null {
  if (!session?.view.grid) return null;
  const rect = canvas.getBoundingClientRect();
  const tf = makeTransform(session.view.grid, canvas.width, canvas.height);
  return tf.toWorld([
    ((event.clientX - rect.left) / rect.width) * canvas.width,
    ((event.clientY - rect.top) / rect.height) * canvas.height,
  ]);
}

function nearMarker(event: PointerEvent): boolean {
  if (!session?.view.grid || !session.view.lastState) return false;
  const rect = canvas.getBoundingClientRect();
  const tf = makeTransform(session.view.grid, canvas.width, canvas.height);
  const [mx, my] = tf.toCanvas(session.markerPosition()!);
  const px = ((event.clientX - rect.left) / rect.width) * canvas.width;
  const py = ((event.clientY - rect.top) / rect.height) * canvas.height;
  return Math.hypot(px - mx, py - my) < 18;
}

let dragging = false;
let pendingClick: [number, number] | null = null;

canvas.addEventListener("pointerdown", (event) => {
  const world = toWorld(event);
  if (!world || !session) return;
  if (nearMarker(event)) {
    dragging = session.beginDrag(world);
    canvas.setPointerCapture(event.pointerId);
  } else {
    pendingClick = world;
  }
});

canvas.addEventListener("pointermove", (event) => {
  if (!dragging || !session) return;
  const world = toWorld(event);
  if (world) session.dragTo(world);
});

canvas.addEventListener("pointerup", (event) => {
  if (!session) return;
  if (dragging) {
    session.endDrag();
    dragging = false;
    canvas.releasePointerCapture(event.pointerId);
  } else if (pendingClick) {
    session.start(pendingClick);
    pendingClick = null;
  }
});

slider.addEventListener("input", () => {
  session?.setLambda(parseFloat(slider.value));
});

function connect(): void {
  const transport = new WebSocketTransport(`ws://${location.host}/ws`);
  session = new PlaygroundSession(transport, { tickRateHz: 60 });
  session.onChange = () => requestAnimationFrame(render);
  transport.onOpen = () => {
    session!.view.connection = "open";
    retryDelayMs = 1000;
    session!.requestGrid(undefined, 100); // server derives bounds from the model
    render();
  };
  transport.onClose = () => {
    session!.view.connection = "closed";
    render();
    setTimeout(connect, retryDelayMs);
    retryDelayMs = Math.min(retryDelayMs * 2, 10_000);
  };
  render();
}

connect();
