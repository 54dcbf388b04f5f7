// Connection handling and command senders. The client owns no scene
// state beyond the last snapshot: replaying a recorded snapshot stream
// through the same callbacks reproduces identical renders.

import {
  Command,
  parseServerMessage,
  ServerMessage,
  SnapshotMsg,
  StrategyName,
  Vec3,
} from "./protocol.js";

// structural subset of the browser/ws WebSocket we rely on
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open", cb: () => void): void;
  addEventListener(type: "close", cb: () => void): void;
  addEventListener(type: "error", cb: () => void): void;
  addEventListener(type: "message", cb: (ev: { data: unknown }) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionStatus = "connecting" | "connected" | "retrying" | "closed";

export interface ClientEvents {
  status?: (status: ConnectionStatus) => void;
  welcome?: (selfId: string, peers: string[]) => void;
  peers?: (peerIds: string[]) => void;
  snapshot?: (snap: SnapshotMsg) => void;
  rtt?: (instantMs: number | null, windowMeanMs: number | null) => void;
}

const defaultFactory: SocketFactory = (url) => {
  const ctor = (globalThis as { WebSocket?: new (url: string) => SocketLike }).WebSocket;
  if (!ctor) throw new Error("no WebSocket implementation available; pass a factory");
  return new ctor(url);
};

export class PlaygroundClient {
  selfId: string | null = null;
  peerIds: string[] = [];
  status: ConnectionStatus = "closed";
  lastSnapshot: SnapshotMsg | null = null;

  private socket: SocketLike | null = null;
  private events: ClientEvents;
  private factory: SocketFactory;
  private retryMs: number;
  private stopped = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly url: string,
    events: ClientEvents = {},
    opts: { factory?: SocketFactory; retryMs?: number } = {},
  ) {
    this.events = events;
    this.factory = opts.factory ?? defaultFactory;
    this.retryMs = opts.retryMs ?? 1500;
  }

  connect(): void {
    this.stopped = false;
    this.open();
  }

  close(): void {
    this.stopped = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.socket?.close();
    this.setStatus("closed");
  }

  private open(): void {
    this.setStatus("connecting");
    let socket: SocketLike;
    try {
      socket = this.factory(this.url);
    } catch {
      this.scheduleRetry();
      return;
    }
    this.socket = socket;
    socket.addEventListener("open", () => this.setStatus("connected"));
    socket.addEventListener("message", (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg) this.dispatch(msg);
    });
    const onGone = () => {
      if (this.status !== "closed") this.scheduleRetry();
    };
    socket.addEventListener("close", onGone);
    socket.addEventListener("error", onGone);
  }

  private scheduleRetry(): void {
    if (this.stopped) return;
    this.setStatus("retrying");
    this.retryTimer = setTimeout(() => this.open(), this.retryMs);
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.status === status) return;
    this.status = status;
    this.events.status?.(status);
  }

  private dispatch(msg: ServerMessage): void {
    switch (msg.t) {
      case "welcome":
        this.selfId = msg.id;
        this.peerIds = [...msg.peers];
        this.events.welcome?.(msg.id, msg.peers);
        this.events.peers?.(this.peerIds);
        break;
      case "joined":
        if (!this.peerIds.includes(msg.id)) this.peerIds.push(msg.id);
        this.events.peers?.(this.peerIds);
        break;
      case "left":
        this.peerIds = this.peerIds.filter((p) => p !== msg.id);
        this.events.peers?.(this.peerIds);
        break;
      case "snapshot":
        this.lastSnapshot = msg;
        this.events.snapshot?.(msg);
        break;
      case "rtt":
        this.events.rtt?.(msg.instant_ms, msg.window_mean_ms);
        break;
    }
  }

  // --- gestures: each maps to exactly one command kind ---

  private send(cmd: Command): void {
    this.socket?.send(JSON.stringify(cmd));
  }

  spawn(pos?: Vec3): void {
    this.send(pos ? { t: "cmd", kind: "spawn", pos } : { t: "cmd", kind: "spawn" });
  }

  grab(brick: string): void {
    this.send({ t: "cmd", kind: "grab", brick });
  }

  move(brick: string, to: Vec3): void {
    this.send({ t: "cmd", kind: "move", brick, to });
  }

  release(brick: string): void {
    this.send({ t: "cmd", kind: "release", brick });
  }

  setMode(brick: string, local: boolean): void {
    this.send({ t: "cmd", kind: "mode", brick, local });
  }

  setStrategy(name: StrategyName): void {
    this.send({ t: "cmd", kind: "strategy", name });
  }
}
