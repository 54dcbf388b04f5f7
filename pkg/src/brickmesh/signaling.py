"""Peer-discovery protocol: directory server and handshake clients.

Both sides are pure state machines: ``(state, event) -> (state, outputs)``.
Transport adapters own all I/O and feed events in one at a time. The
server only routes — it never looks inside offer/answer/candidate
payloads. Duplicate channels are impossible because exactly one side of
every pair initiates: the lexicographically smaller id sends the offer.

Wire format: one JSON object per message, UTF-8, newline-delimited on
stream transports. The "t" field selects the message kind; envelope
fields are exactly "from", "to", "id", "peers", "sdp", "candidate",
"reason".
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

from brickmesh.core import ReplicaId

log = logging.getLogger(__name__)

# handshake states
IDLE = "idle"
OFFER_SENT = "offer-sent"
ANSWER_SENT = "answer-sent"
CONNECTED = "connected"


# --- messages ----------------------------------------------------------------

@dataclass(frozen=True)
class Welcome:
    self_id: ReplicaId
    peers: tuple[ReplicaId, ...]


@dataclass(frozen=True)
class PeerJoined:
    id: ReplicaId


@dataclass(frozen=True)
class PeerLeft:
    id: ReplicaId


@dataclass(frozen=True)
class Offer:
    from_id: ReplicaId
    to_id: ReplicaId
    sdp: str


@dataclass(frozen=True)
class Answer:
    from_id: ReplicaId
    to_id: ReplicaId
    sdp: str


@dataclass(frozen=True)
class Ice:
    from_id: ReplicaId
    to_id: ReplicaId
    candidate: str


@dataclass(frozen=True)
class RouteError:
    to_id: ReplicaId
    reason: str


SignalMessage = Welcome | PeerJoined | PeerLeft | Offer | Answer | Ice | RouteError


def encode(msg: SignalMessage) -> str:
    if isinstance(msg, Welcome):
        body = {"t": "welcome", "id": msg.self_id, "peers": list(msg.peers)}
    elif isinstance(msg, PeerJoined):
        body = {"t": "joined", "id": msg.id}
    elif isinstance(msg, PeerLeft):
        body = {"t": "left", "id": msg.id}
    elif isinstance(msg, Offer):
        body = {"t": "offer", "from": msg.from_id, "to": msg.to_id, "sdp": msg.sdp}
    elif isinstance(msg, Answer):
        body = {"t": "answer", "from": msg.from_id, "to": msg.to_id, "sdp": msg.sdp}
    elif isinstance(msg, Ice):
        body = {"t": "ice", "from": msg.from_id, "to": msg.to_id,
                "candidate": msg.candidate}
    elif isinstance(msg, RouteError):
        body = {"t": "route-error", "to": msg.to_id, "reason": msg.reason}
    else:
        raise TypeError(f"not a signal message: {msg!r}")
    return json.dumps(body, separators=(",", ":"))


def decode(text: str) -> SignalMessage:
    data = json.loads(text)
    kind = data.get("t")
    if kind == "welcome":
        return Welcome(data["id"], tuple(data["peers"]))
    if kind == "joined":
        return PeerJoined(data["id"])
    if kind == "left":
        return PeerLeft(data["id"])
    if kind == "offer":
        return Offer(data["from"], data["to"], data["sdp"])
    if kind == "answer":
        return Answer(data["from"], data["to"], data["sdp"])
    if kind == "ice":
        return Ice(data["from"], data["to"], data["candidate"])
    if kind == "route-error":
        return RouteError(data["to"], data["reason"])
    raise ValueError(f"unknown signal kind {kind!r}")


# --- server ------------------------------------------------------------------

@dataclass(frozen=True)
class Connect:
    handle: object  # opaque connection handle owned by the transport


@dataclass(frozen=True)
class Disconnect:
    id: ReplicaId


@dataclass(frozen=True)
class Inbound:
    id: ReplicaId
    msg: SignalMessage


ServerEvent = Connect | Disconnect | Inbound


@dataclass
class ServerState:
    """Directory of live peers; ids are server-assigned and never reused."""

    directory: dict[ReplicaId, object] = field(default_factory=dict)
    id_counter: int = 0


def server_handle(
    state: ServerState, event: ServerEvent
) -> tuple[ServerState, list[tuple[ReplicaId, SignalMessage]]]:
    """Route one event; returns the new state and (target, message) sends."""
    if isinstance(event, Connect):
        counter = state.id_counter + 1
        new_id = f"p{counter}"
        directory = dict(state.directory)
        others = sorted(directory)
        directory[new_id] = event.handle
        out: list[tuple[ReplicaId, SignalMessage]] = [
            (new_id, Welcome(new_id, tuple(others)))
        ]
        out += [(peer, PeerJoined(new_id)) for peer in others]
        return ServerState(directory, counter), out

    if isinstance(event, Disconnect):
        if event.id not in state.directory:
            return state, []
        directory = {r: h for r, h in state.directory.items() if r != event.id}
        return (
            ServerState(directory, state.id_counter),
            [(peer, PeerLeft(event.id)) for peer in sorted(directory)],
        )

    if isinstance(event, Inbound):
        if event.id not in state.directory:
            return state, [(event.id, RouteError(event.id, "unknown-sender"))]
        msg = event.msg
        if not isinstance(msg, (Offer, Answer, Ice)):
            log.debug("server ignoring non-routable %r from %s", msg, event.id)
            return state, []
        if msg.to_id in state.directory:
            return state, [(msg.to_id, msg)]  # forwarded verbatim
        return state, [(event.id, RouteError(msg.to_id, "unknown-peer"))]

    raise TypeError(f"unknown server event {event!r}")


# --- client ------------------------------------------------------------------

@dataclass(frozen=True)
class Welcomed:
    msg: Welcome


@dataclass(frozen=True)
class SignalIn:
    msg: SignalMessage


@dataclass(frozen=True)
class ChannelClosed:
    peer: ReplicaId


@dataclass(frozen=True)
class ChannelOpen:
    # fed by the transport when the initiator's OpenChannel takes effect,
    # so the answering side can leave ANSWER_SENT
    peer: ReplicaId


ClientEvent = Welcomed | PeerJoined | PeerLeft | SignalIn | ChannelClosed | ChannelOpen


@dataclass(frozen=True)
class OpenChannel:
    """Local action: open the data channel toward peer."""

    peer: ReplicaId


@dataclass(frozen=True)
class ClientSession:
    self_id: ReplicaId = ""
    known_peers: frozenset[ReplicaId] = frozenset()
    handshakes: dict = field(default_factory=dict)  # peer -> state string

    def is_initiator(self, peer: ReplicaId) -> bool:
        return self.self_id < peer

    def state_of(self, peer: ReplicaId) -> str:
        return self.handshakes.get(peer, IDLE)


def _with_handshake(sess: ClientSession, peer: ReplicaId, state: str) -> ClientSession:
    handshakes = dict(sess.handshakes)
    handshakes[peer] = state
    return replace(sess, handshakes=handshakes)


def client_step(
    sess: ClientSession, event: ClientEvent
) -> tuple[ClientSession, list[SignalMessage], list[OpenChannel]]:
    """Advance the handshake machine by one event."""
    sends: list[SignalMessage] = []
    actions: list[OpenChannel] = []

    if isinstance(event, Welcomed):
        sess = replace(
            sess,
            self_id=event.msg.self_id,
            known_peers=frozenset(event.msg.peers),
        )
        for peer in sorted(event.msg.peers):
            if sess.is_initiator(peer):
                sess = _with_handshake(sess, peer, OFFER_SENT)
                sends.append(Offer(sess.self_id, peer, _sdp_stub(sess.self_id)))
        return sess, sends, actions

    if isinstance(event, PeerJoined):
        peer = event.id
        sess = replace(sess, known_peers=sess.known_peers | {peer})
        if sess.is_initiator(peer) and sess.state_of(peer) == IDLE:
            sess = _with_handshake(sess, peer, OFFER_SENT)
            sends.append(Offer(sess.self_id, peer, _sdp_stub(sess.self_id)))
        return sess, sends, actions

    if isinstance(event, PeerLeft):
        peer = event.id
        handshakes = {p: s for p, s in sess.handshakes.items() if p != peer}
        sess = replace(
            sess, known_peers=sess.known_peers - {peer}, handshakes=handshakes
        )
        return sess, sends, actions

    if isinstance(event, SignalIn):
        return _on_signal(sess, event.msg)

    if isinstance(event, ChannelOpen):
        peer = event.peer
        if sess.state_of(peer) in (ANSWER_SENT, OFFER_SENT):
            sess = _with_handshake(sess, peer, CONNECTED)
        return sess, sends, actions

    if isinstance(event, ChannelClosed):
        peer = event.peer
        if peer not in sess.known_peers:
            return sess, sends, actions
        if sess.is_initiator(peer):
            sess = _with_handshake(sess, peer, OFFER_SENT)
            sends.append(Offer(sess.self_id, peer, _sdp_stub(sess.self_id)))
        else:
            sess = _with_handshake(sess, peer, IDLE)
        return sess, sends, actions

    raise TypeError(f"unknown client event {event!r}")


def _on_signal(
    sess: ClientSession, msg: SignalMessage
) -> tuple[ClientSession, list[SignalMessage], list[OpenChannel]]:
    sends: list[SignalMessage] = []
    actions: list[OpenChannel] = []

    if isinstance(msg, Offer):
        peer = msg.from_id
        if sess.state_of(peer) == IDLE:
            sess = replace(sess, known_peers=sess.known_peers | {peer})
            sess = _with_handshake(sess, peer, ANSWER_SENT)
            sends.append(Answer(sess.self_id, peer, _sdp_stub(sess.self_id)))
        else:
            log.debug("%s ignoring offer from %s in state %s",
                      sess.self_id, peer, sess.state_of(peer))
        return sess, sends, actions

    if isinstance(msg, Answer):
        peer = msg.from_id
        if sess.state_of(peer) == OFFER_SENT:
            sess = _with_handshake(sess, peer, CONNECTED)
            actions.append(OpenChannel(peer))
        else:
            log.debug("%s ignoring answer from %s in state %s",
                      sess.self_id, peer, sess.state_of(peer))
        return sess, sends, actions

    if isinstance(msg, Ice):
        # candidates are opaque; a real transport backend would feed them
        # to its connection object
        return sess, sends, actions

    if isinstance(msg, RouteError):
        log.debug("%s route error toward %s: %s", sess.self_id, msg.to_id, msg.reason)
        return sess, sends, actions

    log.debug("%s ignoring unexpected signal %r", sess.self_id, msg)
    return sess, sends, actions


def _sdp_stub(self_id: ReplicaId) -> str:
    # payloads are opaque end to end; this stub just identifies the sender
    return f"sdp:{self_id}"
