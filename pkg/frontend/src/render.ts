/** Canvas drawing: everything rendered comes straight out of ViewState. */

import { GridDataMessage } from "./protocol.js";
import { ViewState } from "./session.js";

export interface WorldTransform {
  toCanvas(p: [number, number]): [number, number];
  toWorld(p: [number, number]): [number, number];
}

export function makeTransform(
  grid: GridDataMessage,
  width: number,
  height: number
): WorldTransform {
  const [xmin, xmax, ymin, ymax] = grid.bounds;
  return {
    toCanvas([wx, wy]) {
      return [
        ((wx - xmin) / (xmax - xmin)) * width,
        height - ((wy - ymin) / (ymax - ymin)) * height,
      ];
    },
    toWorld([cx, cy]) {
      return [
        xmin + (cx / width) * (xmax - xmin),
        ymin + ((height - cy) / height) * (ymax - ymin),
      ];
    },
  };
}

const NEAR_COLOR = [24, 38, 84];
const FAR_COLOR = [238, 243, 250];

export function heatmapCanvas(grid: GridDataMessage): HTMLCanvasElement {
  const [nx, ny] = grid.resolution;
  const canvas = document.createElement("canvas");
  canvas.width = nx;
  canvas.height = ny;
  const ctx = canvas.getContext("2d")!;
  const image = ctx.createImageData(nx, ny);
  const dmax = Math.max(...grid.distance) || 1;
  for (let iy = 0; iy < ny; iy++) {
    for (let ix = 0; ix < nx; ix++) {
      const d = grid.distance[iy * nx + ix] / dmax;
      const t = Math.sqrt(Math.min(1, d)); // lift contrast near the curve
      const offset = ((ny - 1 - iy) * nx + ix) * 4; // world y up, canvas y down
      for (let c = 0; c < 3; c++) {
        image.data[offset + c] = NEAR_COLOR[c] + (FAR_COLOR[c] - NEAR_COLOR[c]) * t;
      }
      image.data[offset + 3] = 255;
    }
  }
  ctx.putImageData(image, 0, 0);
  return canvas;
}

export function draw(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  heatmap: HTMLCanvasElement | null
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (!view.grid) {
    ctx.fillStyle = "#555";
    ctx.font = "14px sans-serif";
    ctx.fillText("waiting for field data...", 16, 28);
    return;
  }
  const tf = makeTransform(view.grid, width, height);
  if (heatmap) {
    ctx.imageSmoothingEnabled = true;
    ctx.drawImage(heatmap, 0, 0, width, height);
  }

  for (const curve of view.grid.curves) {
    ctx.beginPath();
    curve.forEach((p, i) => {
      const [cx, cy] = tf.toCanvas([p[0], p[1]]);
      if (i === 0) ctx.moveTo(cx, cy);
      else ctx.lineTo(cx, cy);
    });
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 2.5;
    ctx.stroke();
  }

  if (view.trail.length > 1) {
    ctx.beginPath();
    view.trail.forEach((p, i) => {
      const [cx, cy] = tf.toCanvas(p);
      if (i === 0) ctx.moveTo(cx, cy);
      else ctx.lineTo(cx, cy);
    });
    ctx.strokeStyle = "rgba(255, 150, 40, 0.9)";
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }

  if (view.drag && view.lastState) {
    const from = tf.toCanvas(view.drag.from);
    const to = tf.toCanvas(view.drag.to);
    ctx.beginPath();
    ctx.setLineDash([6, 4]);
    ctx.moveTo(from[0], from[1]);
    ctx.lineTo(to[0], to[1]);
    ctx.strokeStyle = "#ff3b6b";
    ctx.lineWidth = 1.5;
    ctx.stroke();
    ctx.setLineDash([]);
  }

  if (view.lastState) {
    const [cx, cy] = tf.toCanvas([view.lastState.x[0], view.lastState.x[1]]);
    ctx.beginPath();
    ctx.arc(cx, cy, 7, 0, 2 * Math.PI);
    ctx.fillStyle = view.running ? "#e23a3a" : "#b06060";
    ctx.fill();
    ctx.strokeStyle = "#fff";
    ctx.lineWidth = 2;
    ctx.stroke();
  }
}
