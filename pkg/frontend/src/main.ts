// Browser wiring: connect, render snapshots, translate pointer gestures
// into commands. Dragging sends grab on pointer-down, throttled moves
// with the target pose, and release on pointer-up.

import { PlaygroundClient } from "./client.js";
import { StrategyName } from "./protocol.js";
import { brickAt, Hud, render, screenToWorld } from "./view.js";

const MOVE_THROTTLE_MS = 50; // matches the server snapshot tick

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const spawnButton = document.getElementById("spawn") as HTMLButtonElement;
const modeButton = document.getElementById("mode") as HTMLButtonElement;
const strategySelect = document.getElementById("strategy") as HTMLSelectElement;
const banner = document.getElementById("banner") as HTMLDivElement;

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;

const hud: Hud = {
  selfId: "-",
  peers: [],
  status: "connecting",
  rttMs: null,
  strategy: "lww",
  selected: null,
};

let dragging: string | null = null;
let lastMoveAt = 0;

const client = new PlaygroundClient(wsUrl, {
  status: (status) => {
    hud.status = status;
    banner.textContent = status === "connected" ? "" : `connection: ${status}…`;
    banner.style.display = status === "connected" ? "none" : "block";
    repaint();
  },
  welcome: (selfId) => {
    hud.selfId = selfId;
    repaint();
  },
  peers: (peerIds) => {
    hud.peers = [...peerIds];
    repaint();
  },
  snapshot: (snap) => {
    hud.strategy = snap.strategy;
    repaint();
  },
  rtt: (instant) => {
    hud.rttMs = instant;
    repaint();
  },
});

function repaint(): void {
  render(canvas, client.lastSnapshot, hud);
}

canvas.addEventListener("pointerdown", (ev) => {
  const hit = brickAt(canvas, client.lastSnapshot, ev.offsetX, ev.offsetY);
  hud.selected = hit;
  if (hit) {
    dragging = hit;
    canvas.setPointerCapture(ev.pointerId);
    client.grab(hit);
  }
  repaint();
});

canvas.addEventListener("pointermove", (ev) => {
  if (!dragging || !client.lastSnapshot) return;
  const now = performance.now();
  if (now - lastMoveAt < MOVE_THROTTLE_MS) return;
  lastMoveAt = now;
  const brick = client.lastSnapshot.bricks[dragging];
  if (!brick) return; // stale sprite: the server dropped this id
  const [x, z] = screenToWorld(canvas, ev.offsetX, ev.offsetY);
  client.move(dragging, [x, brick.pos[1], z]);
});

canvas.addEventListener("pointerup", () => {
  if (dragging) client.release(dragging);
  dragging = null;
});

spawnButton.addEventListener("click", () => {
  client.spawn([Math.random() * 4 - 2, 0, Math.random() * 4 - 2]);
});

modeButton.addEventListener("click", () => {
  if (!hud.selected || !client.lastSnapshot) return;
  const brick = client.lastSnapshot.bricks[hud.selected];
  if (brick) client.setMode(hud.selected, brick.mode === "world");
});

strategySelect.addEventListener("change", () => {
  client.setStrategy(strategySelect.value as StrategyName);
});

client.connect();
repaint();
