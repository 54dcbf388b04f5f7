import json

import pytest

from brickmesh.signaling import (
    ANSWER_SENT,
    CONNECTED,
    IDLE,
    OFFER_SENT,
    Answer,
    ClientSession,
    Connect,
    Disconnect,
    Ice,
    Inbound,
    Offer,
    PeerJoined,
    PeerLeft,
    RouteError,
    ServerState,
    SignalIn,
    Welcome,
    Welcomed,
    client_step,
    decode,
    encode,
    server_handle,
)
from mesh_harness import MeshHarness


# --- wire format -------------------------------------------------------------

def test_wire_field_names_exact():
    assert json.loads(encode(Welcome("p1", ("p2",)))) == {"t": "welcome", "id": "p1", "peers": ["p2"]}
    assert json.loads(encode(PeerJoined("p3"))) == {"t": "joined", "id": "p3"}
    assert json.loads(encode(Offer("a", "b", "s"))) == {"t": "offer", "from": "a", "to": "b", "sdp": "s"}
    assert json.loads(encode(Ice("a", "b", "c"))) == {"t": "ice", "from": "a", "to": "b", "candidate": "c"}
    assert json.loads(encode(RouteError("x", "unknown-peer"))) == {
        "t": "route-error", "to": "x", "reason": "unknown-peer"}


def test_wire_roundtrip_all_kinds():
    msgs = [
        Welcome("p1", ("p2", "p3")),
        PeerJoined("p4"),
        Offer("p1", "p2", "sdp-data"),
        Answer("p2", "p1", "sdp-back"),
        Ice("p1", "p2", "cand"),
        RouteError("p9", "unknown-peer"),
    ]
    for msg in msgs:
        assert decode(encode(msg)) == msg
    with pytest.raises(ValueError):
        decode('{"t":"bogus"}')


# --- server ------------------------------------------------------------------

def test_connect_assigns_id_and_announces():
    state, sends = server_handle(ServerState(), Connect(object()))
    assert sends == [("p1", Welcome("p1", ()))]
    state, sends = server_handle(state, Connect(object()))
    targets = dict(sends)
    assert targets["p2"] == Welcome("p2", ("p1",))
    assert targets["p1"] == PeerJoined("p2")


def test_disconnect_announces_left_and_stops_routing():
    state, _ = server_handle(ServerState(), Connect(object()))
    state, _ = server_handle(state, Connect(object()))
    state, sends = server_handle(state, Disconnect("p1"))
    assert sends == [("p2", PeerLeft("p1"))]
    state, sends = server_handle(state, Inbound("p2", Offer("p2", "p1", "x")))
    assert sends == [("p2", RouteError("p1", "unknown-peer"))]


def test_forward_verbatim():
    state, _ = server_handle(ServerState(), Connect(object()))
    state, _ = server_handle(state, Connect(object()))
    offer = Offer("p1", "p2", "opaque-sdp-payload")
    state, sends = server_handle(state, Inbound("p1", offer))
    assert sends == [("p2", offer)]
    assert sends[0][1] is offer  # content-transparent: the same message object


def test_unknown_sender_dropped_with_route_error():
    state, sends = server_handle(ServerState(), Inbound("ghost", Offer("ghost", "p1", "x")))
    assert sends == [("ghost", RouteError("ghost", "unknown-sender"))]


def test_route_error_for_absent_target():
    state, _ = server_handle(ServerState(), Connect(object()))
    state, sends = server_handle(state, Inbound("p1", Offer("p1", "pX", "x")))
    assert sends == [("p1", RouteError("pX", "unknown-peer"))]


# --- client handshake --------------------------------------------------------

def test_smaller_id_initiates():
    sess = ClientSession()
    sess, sends, _ = client_step(sess, Welcomed(Welcome("a", ("b",))))
    assert [type(m) for m in sends] == [Offer]
    assert sends[0].to_id == "b"
    assert sess.state_of("b") == OFFER_SENT


def test_larger_id_waits():
    sess, sends, _ = client_step(ClientSession(), Welcomed(Welcome("b", ("a",))))
    assert sends == []
    assert sess.state_of("a") == IDLE


def test_offer_answer_connect_sequence():
    a, a_out, _ = client_step(ClientSession(), Welcomed(Welcome("a", ("b",))))
    b, _, _ = client_step(ClientSession(), Welcomed(Welcome("b", ("a",))))
    b, b_out, _ = client_step(b, SignalIn(a_out[0]))
    assert [type(m) for m in b_out] == [Answer]
    assert b.state_of("a") == ANSWER_SENT
    a, _, actions = client_step(a, SignalIn(b_out[0]))
    assert a.state_of("b") == CONNECTED
    assert [act.peer for act in actions] == ["b"]


def test_out_of_order_answer_ignored():
    sess, sends, actions = client_step(
        ClientSession(self_id="b", known_peers=frozenset({"a"})),
        SignalIn(Answer("a", "b", "x")),
    )
    assert sends == [] and actions == []
    assert sess.state_of("a") == IDLE


def test_channel_closed_triggers_renegotiation():
    harness = MeshHarness()
    a, b = harness.join(), harness.join()
    assert harness.fully_meshed()
    harness.close_channel(a, b)
    assert harness.fully_meshed()
    # one original open plus one renegotiated open
    assert harness.pair_open_counts()[frozenset((a, b))] == 2


# --- mesh enumeration --------------------------------------------------------

def test_every_join_order_meshes_exactly_once():
    for n in (2, 3, 4):
        harness = MeshHarness()
        for _ in range(n):
            harness.join()
        assert harness.fully_meshed()
        counts = harness.pair_open_counts()
        assert len(counts) == n * (n - 1) // 2
        assert all(c == 1 for c in counts.values())


def test_join_leave_interleavings_exhaustive():
    # every sequence of join/leave actions up to depth 6, at most 4 live
    def explore(harness: MeshHarness, depth: int):
        assert harness.fully_meshed()
        for pair, count in harness.pair_open_counts().items():
            if pair <= set(harness.live_ids()):
                assert count == 1, f"duplicate channel for {pair}"
        if depth == 0:
            return
        live = harness.live_ids()
        moves = []
        if len(live) < 4:
            moves.append(("join", None))
        moves += [("leave", peer) for peer in live]
        for kind, peer in moves:
            snapshot = _clone(harness)
            if kind == "join":
                snapshot.join()
            else:
                snapshot.leave(peer)
            explore(snapshot, depth - 1)

    def _clone(h: MeshHarness) -> MeshHarness:
        import copy

        return copy.deepcopy(h)

    root = MeshHarness()
    explore(root, 4)


def test_no_messages_after_disconnect():
    harness = MeshHarness()
    a = harness.join()
    b = harness.join()
    harness.leave(b)
    # a renegotiates toward nobody: send an offer to the departed peer
    state, sends = server_handle(harness.server, Inbound(a, Offer(a, b, "x")))
    assert all(target != b for target, _ in sends)


def test_forwarding_is_content_transparent():
    harness = MeshHarness()
    harness.join()
    harness.join()
    harness.join()
    assert harness.forwarded  # offers and answers crossed the server
    for inbound, delivered in harness.forwarded:
        assert inbound == delivered
