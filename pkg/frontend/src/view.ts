// Top-down canvas projection: scene x maps to screen x, scene z to
// screen y. Height (scene y) only offsets each brick's drop shadow, so
// gravity scenarios read at a glance. Pure function of the last
// snapshot plus HUD fields; no scene state lives here.

import { BrickView, SnapshotMsg } from "./protocol.js";

export const PIXELS_PER_UNIT = 40;

const HOLDER_COLORS = ["#e4572e", "#17bebb", "#ffc914", "#76b041", "#b07bac"];

export interface Hud {
  selfId: string;
  peers: string[];
  status: string;
  rttMs: number | null;
  strategy: string;
  selected: string | null;
}

export function worldToScreen(
  canvas: HTMLCanvasElement, x: number, z: number,
): [number, number] {
  return [canvas.width / 2 + x * PIXELS_PER_UNIT, canvas.height / 2 + z * PIXELS_PER_UNIT];
}

export function screenToWorld(
  canvas: HTMLCanvasElement, px: number, py: number,
): [number, number] {
  return [
    (px - canvas.width / 2) / PIXELS_PER_UNIT,
    (py - canvas.height / 2) / PIXELS_PER_UNIT,
  ];
}

export function brickAt(
  canvas: HTMLCanvasElement, snap: SnapshotMsg | null, px: number, py: number,
): string | null {
  if (!snap) return null;
  const ids = Object.keys(snap.bricks);
  for (let i = ids.length - 1; i >= 0; i--) {
    const brick = snap.bricks[ids[i]];
    const [bx, by] = worldToScreen(canvas, brick.pos[0], brick.pos[2]);
    const w = brick.scl[0] * PIXELS_PER_UNIT * 0.9;
    const h = brick.scl[2] * PIXELS_PER_UNIT * 0.6;
    if (Math.abs(px - bx) <= w / 2 && Math.abs(py - by) <= h / 2) return ids[i];
  }
  return null;
}

export function render(canvas: HTMLCanvasElement, snap: SnapshotMsg | null, hud: Hud): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#20242b";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  drawGrid(ctx, canvas);

  let totalConflicts = 0;
  if (snap) {
    for (const [id, brick] of Object.entries(snap.bricks)) {
      drawBrick(ctx, canvas, id, brick, id === hud.selected);
      totalConflicts += brick.conflicts;
    }
  }
  drawHud(ctx, hud, totalConflicts);
}

function drawGrid(ctx: CanvasRenderingContext2D, canvas: HTMLCanvasElement): void {
  ctx.strokeStyle = "#2c323c";
  ctx.lineWidth = 1;
  for (let x = canvas.width / 2 % PIXELS_PER_UNIT; x < canvas.width; x += PIXELS_PER_UNIT) {
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, canvas.height);
    ctx.stroke();
  }
  for (let y = canvas.height / 2 % PIXELS_PER_UNIT; y < canvas.height; y += PIXELS_PER_UNIT) {
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(canvas.width, y);
    ctx.stroke();
  }
}

function drawBrick(
  ctx: CanvasRenderingContext2D,
  canvas: HTMLCanvasElement,
  id: string,
  brick: BrickView,
  selected: boolean,
): void {
  const [bx, by] = worldToScreen(canvas, brick.pos[0], brick.pos[2]);
  const w = brick.scl[0] * PIXELS_PER_UNIT * 0.9;
  const h = brick.scl[2] * PIXELS_PER_UNIT * 0.6;
  const yaw = yawOf(brick.rot);

  // shadow: offset grows as the brick falls (height below spawn plane)
  const drop = Math.max(0, -brick.pos[1]);
  ctx.save();
  ctx.translate(bx + 3 + drop * 2, by + 5 + drop * 2);
  ctx.rotate(yaw);
  ctx.fillStyle = "rgba(0,0,0,0.35)";
  ctx.fillRect(-w / 2, -h / 2, w, h);
  ctx.restore();

  ctx.save();
  ctx.translate(bx, by);
  ctx.rotate(yaw);
  ctx.fillStyle = brick.mode === "world" ? "#4f7cac" : "#c0994b";
  ctx.fillRect(-w / 2, -h / 2, w, h);
  ctx.lineWidth = selected ? 3 : 1.5;
  ctx.strokeStyle = selected ? "#ffffff" : "#11141a";
  ctx.strokeRect(-w / 2, -h / 2, w, h);
  ctx.restore();

  ctx.fillStyle = "#dde3ec";
  ctx.font = "11px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(id, bx, by - h / 2 - 16);

  brick.holders.forEach((holder, i) => {
    ctx.fillStyle = HOLDER_COLORS[hashIdx(holder, HOLDER_COLORS.length)];
    ctx.beginPath();
    ctx.arc(bx - (brick.holders.length - 1) * 6 + i * 12, by - h / 2 - 7, 5, 0, Math.PI * 2);
    ctx.fill();
  });

  if (brick.conflicts > 0) {
    ctx.fillStyle = "#e4572e";
    ctx.beginPath();
    ctx.arc(bx + w / 2 + 6, by - h / 2 - 6, 8, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#fff";
    ctx.fillText(String(brick.conflicts), bx + w / 2 + 6, by - h / 2 - 2);
  }
}

function drawHud(ctx: CanvasRenderingContext2D, hud: Hud, conflicts: number): void {
  ctx.fillStyle = "#dde3ec";
  ctx.font = "13px system-ui, sans-serif";
  ctx.textAlign = "left";
  const rtt = hud.rttMs === null ? "-" : `${hud.rttMs.toFixed(0)} ms`;
  const lines = [
    `you: ${hud.selfId}   peers: ${hud.peers.join(", ") || "(none)"}`,
    `status: ${hud.status}   rtt: ${rtt}   strategy: ${hud.strategy}`,
    `conflicts in view: ${conflicts}`,
  ];
  lines.forEach((line, i) => ctx.fillText(line, 12, 20 + i * 18));
}

function yawOf(rot: [number, number, number, number]): number {
  const [w, x, y, z] = rot;
  return Math.atan2(2 * (w * y + x * z), 1 - 2 * (y * y + z * z));
}

function hashIdx(s: string, mod: number): number {
  let acc = 0;
  for (const ch of s) acc = (acc * 31 + ch.charCodeAt(0)) >>> 0;
  return acc % mod;
}
