"""Playground server: one hosted replica per connected client.

Clients speak the signaling wire plus two extra kinds: they send
``{"t":"cmd","kind":spawn|grab|move|release|mode|strategy,...}`` and
receive ``{"t":"snapshot",...}`` at the tick rate and ``{"t":"rtt",...}``
once a second. All CRDT logic stays server-side; the browser only
renders snapshots and emits gestures.

Hosted replicas discover each other through the same handshake state
machines standalone peers use; once a pair is connected its states flow
through a delay pipe (the simulated link), so a second client sees a
grab-and-move after the configured one-way delay, exactly like the
scripted scenarios.

Concurrency model: one receive task per websocket and one tick task;
they communicate only through queues.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from brickmesh.core import Vector3
from brickmesh.mvtransform import Strategy
from brickmesh.replica import Replica
from brickmesh.scene import BrickId
from brickmesh.signaling import (
    ChannelOpen,
    ClientSession,
    Connect,
    Disconnect,
    Inbound,
    Offer,
    Answer,
    Ice,
    PeerJoined,
    PeerLeft,
    ServerState,
    SignalIn,
    Welcome,
    Welcomed,
    client_step,
    encode,
    server_handle,
)

log = logging.getLogger(__name__)

DEFAULT_LINK_DELAY_MS = 25.0
RTT_EVERY_TICKS = 20

FALLBACK_PAGE = """<!doctype html>
<html><head><title>brickmesh playground</title></head>
<body><h1>brickmesh serve mode</h1>
<p>The websocket endpoint is at <code>/ws</code>. Build the playground
frontend and pass <code>--ui frontend/dist</code> to serve it here.</p>
</body></html>"""


@dataclass
class Session:
    client_id: str
    replica: Replica
    signal: ClientSession
    outbound: asyncio.Queue = field(default_factory=asyncio.Queue)
    conflicts_seen: int = 0

    def push(self, payload: dict | str) -> None:
        text = payload if isinstance(payload, str) else json.dumps(payload, separators=(",", ":"))
        self.outbound.put_nowait(text)


class Hub:
    """The simulation actor: owns every session, pipe, and the clock."""

    def __init__(self, link_delay_ms: float = DEFAULT_LINK_DELAY_MS, tick_hz: float = 20.0):
        self.link_delay_ms = link_delay_ms
        self.tick_hz = tick_hz
        self.server = ServerState()
        self.sessions: dict[str, Session] = {}
        self.pipes: dict[tuple[str, str], list] = {}  # (src, dst) -> [(due_ms, state)]
        self.commands: asyncio.Queue = asyncio.Queue()
        self.tick = 0
        self.clock_ms = 0.0
        self.rtt_samples: list[float] = []

    # --- membership ------------------------------------------------------

    def connect(self) -> Session:
        self.server, sends = server_handle(self.server, Connect(handle=None))
        client_id = sends[0][0]
        session = Session(client_id, Replica(client_id), ClientSession())
        self.sessions[client_id] = session
        self._route(sends)
        return session

    def disconnect(self, client_id: str) -> None:
        if client_id not in self.sessions:
            return
        self.server, sends = server_handle(self.server, Disconnect(client_id))
        del self.sessions[client_id]
        self.pipes = {pair: q for pair, q in self.pipes.items() if client_id not in pair}
        self._route(sends)

    def _route(self, sends) -> None:
        for target, msg in sends:
            session = self.sessions.get(target)
            if session is None:
                continue
            session.push(encode(msg))  # playground clients see the raw wire
            if isinstance(msg, Welcome):
                event = Welcomed(msg)
            elif isinstance(msg, (PeerJoined, PeerLeft)):
                event = msg
            elif isinstance(msg, (Offer, Answer, Ice)):
                event = SignalIn(msg)
            else:
                continue
            self._step_machine(target, event)

    def _step_machine(self, client_id: str, event) -> None:
        session = self.sessions.get(client_id)
        if session is None:
            return
        sess, sends, actions = client_step(session.signal, event)
        session.signal = sess
        for msg in sends:
            self.server, routed = server_handle(self.server, Inbound(client_id, msg))
            self._route(routed)
        for action in actions:
            self._open_pipe(client_id, action.peer)

    def _open_pipe(self, a: str, b: str) -> None:
        self.pipes.setdefault((a, b), [])
        self.pipes.setdefault((b, a), [])
        self._step_machine(b, ChannelOpen(a))

    # --- commands -------------------------------------------------------------

    def apply_command(self, client_id: str, cmd: dict) -> None:
        session = self.sessions.get(client_id)
        if session is None:
            return
        rep = session.replica
        kind = cmd.get("kind")
        try:
            if kind == "spawn":
                pose_xyz = cmd.get("pos", (0.0, 0.0, 0.0))
                from brickmesh.core import TransformSnapshot

                rep.spawn(TransformSnapshot(position=Vector3(*pose_xyz)))
            elif kind in ("grab", "release", "move", "mode"):
                brick = BrickId.parse(cmd["brick"])
                if brick not in rep.doc.bricks:
                    log.info("%s: command for unknown brick %s ignored", client_id, brick)
                    return
                if kind == "grab":
                    rep.grab(brick)
                elif kind == "release":
                    rep.release(brick)
                elif kind == "move":
                    rep.move(brick, to=Vector3(*cmd["to"]))
                elif kind == "mode":
                    rep.set_mode(brick, bool(cmd["local"]))
            elif kind == "strategy":
                name = cmd.get("name", "lww")
                rep.set_strategy(None if name == "dynamic" else Strategy(name))
            else:
                log.info("%s: unknown command kind %r", client_id, kind)
        except (KeyError, ValueError, TypeError) as exc:
            log.info("%s: bad command %r (%s)", client_id, cmd, exc)

    # --- tick ---------------------------------------------------------------------

    def advance(self, dt_ms: float) -> None:
        """One simulation beat: deliver due states, rebroadcast, snapshot."""
        self.clock_ms += dt_ms
        self.tick += 1

        for (src, dst), queue in self.pipes.items():
            due = [s for t, s in queue if t <= self.clock_ms]
            self.pipes[(src, dst)] = [(t, s) for t, s in queue if t > self.clock_ms]
            target = self.sessions.get(dst)
            for state in due:
                if target is not None:
                    target.replica.merge_state(state)
                self.rtt_samples.append(2.0 * self.link_delay_ms)

        for (src, dst), queue in self.pipes.items():
            session = self.sessions.get(src)
            if session is not None:
                queue.append((self.clock_ms + self.link_delay_ms, session.replica.state_json()))

        for session in self.sessions.values():
            session.push(self._snapshot(session))
        if self.tick % RTT_EVERY_TICKS == 0:
            rtt = {
                "t": "rtt",
                "instant_ms": self.rtt_samples[-1] if self.rtt_samples else None,
                "window_mean_ms": (
                    sum(self.rtt_samples[-100:]) / len(self.rtt_samples[-100:])
                    if self.rtt_samples else None),
            }
            for session in self.sessions.values():
                session.push(rtt)

    def _snapshot(self, session: Session) -> dict:
        rep = session.replica
        bricks = {}
        total_conflicts = 0
        for brick in sorted(rep.doc.bricks):
            mv = rep.doc.bricks[brick]
            rep.step_controller(brick)
            resolved = rep.resolve(brick)
            conflicts = max(0, len(mv.world) - 1)
            total_conflicts += conflicts
            bricks[str(brick)] = {
                "pos": resolved.position.to_json(),
                "rot": resolved.rotation.to_json(),
                "scl": resolved.scale.to_json(),
                "holders": mv.holders(),
                "conflicts": conflicts,
                "mode": "local" if mv.mode_local else "world",
            }
        session.conflicts_seen += total_conflicts
        return {
            "t": "snapshot",
            "tick": self.tick,
            "strategy": rep.strategy.variant,
            "bricks": bricks,
        }


def build_app(
    scenario_path: Path | None = None,
    ui_dir: Path | None = None,
    tick_hz: float = 20.0,
    link_delay_ms: float | None = None,
) -> FastAPI:
    link_delay = DEFAULT_LINK_DELAY_MS
    if scenario_path is not None:
        from brickmesh.scenario import load_scenario

        link_delay = load_scenario(scenario_path).link.one_way_delay_ms
    if link_delay_ms is not None:
        link_delay = link_delay_ms

    hub = Hub(link_delay_ms=link_delay, tick_hz=tick_hz)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(_tick_loop(hub))
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(title="brickmesh playground host", lifespan=lifespan)
    app.state.hub = hub

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session = hub.connect()
        sender = asyncio.create_task(_pump_outbound(ws, session))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError:
                    log.info("%s: undecodable frame ignored", session.client_id)
                    continue
                if msg.get("t") == "cmd":
                    # commands go through the queue: the tick task is the
                    # only actor that touches replica state
                    hub.commands.put_nowait((session.client_id, msg))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            hub.disconnect(session.client_id)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:
        @app.get("/")
        async def index() -> HTMLResponse:
            return HTMLResponse(FALLBACK_PAGE)

    return app


async def _tick_loop(hub: Hub) -> None:
    dt = 1.0 / hub.tick_hz
    while True:
        while not hub.commands.empty():
            client_id, cmd = hub.commands.get_nowait()
            hub.apply_command(client_id, cmd)
        hub.advance(dt * 1000.0)
        await asyncio.sleep(dt)


async def _pump_outbound(ws: WebSocket, session: Session) -> None:
    while True:
        text = await session.outbound.get()
        await ws.send_text(text)
