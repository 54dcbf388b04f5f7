// Scripted client for automated acceptance of serve mode: the same wire
// protocol as the browser UI, driven from node with awaitable helpers.

import { PlaygroundClient, SocketFactory } from "./client.js";
import { SnapshotMsg, Vec3 } from "./protocol.js";

export class HeadlessClient {
  readonly client: PlaygroundClient;
  readonly snapshots: SnapshotMsg[] = [];

  private waiters: Array<{
    pred: (snap: SnapshotMsg) => boolean;
    resolve: (snap: SnapshotMsg) => void;
  }> = [];
  private welcomeWaiters: Array<() => void> = [];

  constructor(url: string, factory: SocketFactory) {
    this.client = new PlaygroundClient(
      url,
      {
        welcome: () => {
          this.welcomeWaiters.splice(0).forEach((resolve) => resolve());
        },
        snapshot: (snap) => {
          this.snapshots.push(snap);
          this.waiters = this.waiters.filter((w) => {
            if (!w.pred(snap)) return true;
            w.resolve(snap);
            return false;
          });
        },
      },
      { factory, retryMs: 300 },
    );
  }

  connect(): void {
    this.client.connect();
  }

  close(): void {
    this.client.close();
  }

  get selfId(): string {
    if (!this.client.selfId) throw new Error("not welcomed yet");
    return this.client.selfId;
  }

  welcomed(timeoutMs = 10_000): Promise<void> {
    if (this.client.selfId) return Promise.resolve();
    return withTimeout(
      new Promise<void>((resolve) => this.welcomeWaiters.push(resolve)),
      timeoutMs,
      "welcome",
    );
  }

  nextSnapshot(
    pred: (snap: SnapshotMsg) => boolean,
    label: string,
    timeoutMs = 10_000,
  ): Promise<SnapshotMsg> {
    return withTimeout(
      new Promise<SnapshotMsg>((resolve) => this.waiters.push({ pred, resolve })),
      timeoutMs,
      label,
    );
  }

  brickAt(brick: string, pos: Vec3, timeoutMs = 10_000): Promise<SnapshotMsg> {
    return this.nextSnapshot(
      (snap) => {
        const view = snap.bricks[brick];
        return !!view && view.pos.every((c, i) => Math.abs(c - pos[i]) < 1e-9);
      },
      `${brick} at (${pos.join(", ")})`,
      timeoutMs,
    );
  }

  brickKnown(brick: string, timeoutMs = 10_000): Promise<SnapshotMsg> {
    return this.nextSnapshot((snap) => brick in snap.bricks, `${brick} known`, timeoutMs);
  }
}

function withTimeout<T>(p: Promise<T>, ms: number, label: string): Promise<T> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error(`timed out waiting for ${label}`)), ms);
    p.then((v) => {
      clearTimeout(timer);
      resolve(v);
    }, reject);
  });
}

/** Count transitions between two x positions in a snapshot stream. */
export function alternations(snapshots: SnapshotMsg[], brick: string, a: number, b: number): number {
  const xs: number[] = [];
  for (const snap of snapshots) {
    const view = snap.bricks[brick];
    if (!view) continue;
    const x = view.pos[0];
    if (xs.length === 0 || xs[xs.length - 1] !== x) xs.push(x);
  }
  let count = 0;
  for (let i = 1; i < xs.length; i++) {
    const pair = new Set([xs[i - 1], xs[i]]);
    if (pair.has(a) && pair.has(b) && pair.size === 2) count++;
  }
  return count;
}
