// Wire protocol spoken by the playground host. The client renders what
// arrives and sends gestures; every conflict is resolved server-side.

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];

export interface BrickView {
  pos: Vec3;
  rot: Quat;
  scl: Vec3;
  holders: string[];
  conflicts: number;
  mode: "local" | "world";
}

export interface WelcomeMsg {
  t: "welcome";
  id: string;
  peers: string[];
}

export interface JoinedMsg {
  t: "joined";
  id: string;
}

export interface LeftMsg {
  t: "left";
  id: string;
}

export interface SnapshotMsg {
  t: "snapshot";
  tick: number;
  strategy: string;
  bricks: Record<string, BrickView>;
}

export interface RttMsg {
  t: "rtt";
  instant_ms: number | null;
  window_mean_ms: number | null;
}

export type ServerMessage = WelcomeMsg | JoinedMsg | LeftMsg | SnapshotMsg | RttMsg;

export type StrategyName = "lww" | "average" | "constraint" | "dead-reckoning" | "dynamic";

export type Command =
  | { t: "cmd"; kind: "spawn"; pos?: Vec3 }
  | { t: "cmd"; kind: "grab"; brick: string }
  | { t: "cmd"; kind: "move"; brick: string; to: Vec3 }
  | { t: "cmd"; kind: "release"; brick: string }
  | { t: "cmd"; kind: "mode"; brick: string; local: boolean }
  | { t: "cmd"; kind: "strategy"; name: StrategyName };

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const t = (data as { t?: unknown }).t;
  if (t === "welcome" || t === "joined" || t === "left" || t === "snapshot" || t === "rtt") {
    return data as ServerMessage;
  }
  return null;
}
