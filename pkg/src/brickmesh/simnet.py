"""Deterministic discrete-event network simulation.

Channels are unidirectional links with configurable one-way delay,
uniform jitter, loss, source-FIFO ordering, partition windows, and
scheduled closures (reopening after a renegotiation penalty). Payloads
above the 16 KB cap are rejected outright — chunking does not exist at
this layer. Everything randomized draws from one seeded generator and
event ties break by insertion order, so a (seed, scenario) pair always
produces the identical trace.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import random

MAX_PAYLOAD_BYTES = 16384
REOPEN_DELAY_MS = 250.0  # renegotiation penalty after an unexpected closure

SENT_SCHEDULED = "scheduled"
SENT_LOST = "lost"


class PayloadTooLargeError(ValueError):
    def __init__(self, size: int):
        super().__init__(f"payload of {size} bytes exceeds the {MAX_PAYLOAD_BYTES} byte cap")
        self.size = size


class UnknownChannelError(KeyError):
    pass


class NothingScheduledError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinkConfig:
    one_way_delay_ms: float = 0.0
    jitter_ms: float = 0.0
    loss_rate: float = 0.0
    ordered: bool = True
    partitions: tuple[tuple[float, float], ...] = ()  # [start, end) windows
    closures: tuple[float, ...] = ()
    max_payload_bytes: int = MAX_PAYLOAD_BYTES  # fixed; kept for introspection

    def __post_init__(self):
        if self.one_way_delay_ms < 0 or self.jitter_ms < 0:
            raise ValueError("delay and jitter must be nonnegative")
        if not 0.0 <= self.loss_rate <= 1.0:
            raise ValueError("loss rate must be within [0, 1]")
        spans = sorted(self.partitions)
        for (s1, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ValueError("partition intervals must be disjoint")
        for s, e in spans:
            if e <= s:
                raise ValueError("partition intervals must be nonempty")

    def partitioned_at(self, t_ms: float) -> bool:
        return any(s <= t_ms < e for s, e in self.partitions)

    @classmethod
    def from_json(cls, data: dict) -> "LinkConfig":
        return cls(
            one_way_delay_ms=float(data.get("one_way_delay_ms", 0.0)),
            jitter_ms=float(data.get("jitter_ms", 0.0)),
            loss_rate=float(data.get("loss_rate", 0.0)),
            ordered=bool(data.get("ordered", True)),
            partitions=tuple((float(s), float(e)) for s, e in data.get("partitions", [])),
            closures=tuple(float(t) for t in data.get("closures", [])),
        )


@dataclass
class ChannelStats:
    sent: int = 0
    delivered: int = 0
    lost: int = 0
    rejected: int = 0


@dataclass
class Channel:
    src: str
    dst: str
    config: LinkConfig
    open: bool = True
    in_flight: int = 0
    last_delivery_ms: float = 0.0
    stats: ChannelStats = field(default_factory=ChannelStats)


# events emitted by sim_step
@dataclass(frozen=True)
class Delivery:
    channel: str
    payload: bytes
    at_ms: float
    src: str
    dst: str
    sent_ms: float


@dataclass(frozen=True)
class ChannelClosedEvt:
    channel: str
    at_ms: float


@dataclass(frozen=True)
class ChannelReopenedEvt:
    channel: str
    at_ms: float


@dataclass(frozen=True)
class TimerFired:
    tag: str
    at_ms: float


SimEvent = Delivery | ChannelClosedEvt | ChannelReopenedEvt | TimerFired


class SimWorld:
    """Single-threaded event loop over nodes, channels, and timers."""

    def __init__(self, seed: int = 0, reopen_delay_ms: float = REOPEN_DELAY_MS):
        self.clock_ms = 0.0
        self.rng = random.Random(seed)
        self.seed = seed
        self.nodes: set[str] = set()
        self.channels: dict[str, Channel] = {}
        self.reopen_delay_ms = reopen_delay_ms
        self._queue: list = []  # (due_ms, seq, kind, data)
        self._seq = 0
        self._dead: set[int] = set()  # deliveries purged by a closure

    # --- construction -----------------------------------------------------

    def add_node(self, name: str) -> None:
        self.nodes.add(name)

    def add_channel(self, channel_id: str, src: str, dst: str, config: LinkConfig) -> None:
        if channel_id in self.channels:
            raise ValueError(f"duplicate channel {channel_id!r}")
        self.nodes.update((src, dst))
        self.channels[channel_id] = Channel(src, dst, config)
        for t in config.closures:
            self._push(t, "close", channel_id)

    def add_link(self, a: str, b: str, config: LinkConfig) -> tuple[str, str]:
        """Bidirectional link = two channels sharing one config."""
        fwd, back = f"{a}->{b}", f"{b}->{a}"
        self.add_channel(fwd, a, b, config)
        self.add_channel(back, b, a, config)
        return fwd, back

    # --- scheduling ---------------------------------------------------------

    def _push(self, due_ms: float, kind: str, data) -> None:
        # (due, seq) heap order: ties break by insertion sequence
        heapq.heappush(self._queue, (due_ms, self._seq, kind, data))
        self._seq += 1

    def schedule_timer(self, due_ms: float, tag: str) -> None:
        self._push(due_ms, "timer", tag)

    def schedule_close(self, channel_id: str, at_ms: float) -> None:
        if channel_id not in self.channels:
            raise UnknownChannelError(channel_id)
        self._push(at_ms, "close", channel_id)

    def pending(self) -> int:
        return len(self._queue)

    # --- sending --------------------------------------------------------------

    def send(self, channel_id: str, payload: bytes) -> str:
        """Queue a payload; returns "scheduled" or "lost".

        Raises PayloadTooLargeError above the 16 KB cap (the rejection is
        also recorded in the channel stats) and UnknownChannelError for
        unknown channels.
        """
        ch = self.channels.get(channel_id)
        if ch is None:
            raise UnknownChannelError(channel_id)
        ch.stats.sent += 1
        if len(payload) > MAX_PAYLOAD_BYTES:
            ch.stats.rejected += 1
            raise PayloadTooLargeError(len(payload))
        if not ch.open or ch.config.partitioned_at(self.clock_ms):
            ch.stats.lost += 1
            return SENT_LOST
        if ch.config.loss_rate > 0 and self.rng.random() < ch.config.loss_rate:
            ch.stats.lost += 1
            return SENT_LOST
        due = self.clock_ms + ch.config.one_way_delay_ms
        if ch.config.jitter_ms > 0:
            due += self.rng.uniform(-ch.config.jitter_ms, ch.config.jitter_ms)
        due = max(due, self.clock_ms)
        if ch.config.ordered and due < ch.last_delivery_ms:
            due = ch.last_delivery_ms  # FIFO clamp: never overtake
        ch.last_delivery_ms = due
        ch.in_flight += 1
        self._push(due, "deliver", (channel_id, payload, self.clock_ms))
        return SENT_SCHEDULED

    # --- stepping --------------------------------------------------------------

    def step(self) -> list[SimEvent]:
        """Pop the earliest event, advance the clock, emit what happened."""
        if not self._queue:
            raise NothingScheduledError("event queue is empty")
        due, seq, kind, data = heapq.heappop(self._queue)
        self.clock_ms = max(self.clock_ms, due)
        if kind == "deliver":
            if seq in self._dead:
                self._dead.discard(seq)
                return []
            channel_id, payload, sent_ms = data
            ch = self.channels[channel_id]
            ch.in_flight -= 1
            ch.stats.delivered += 1
            return [Delivery(channel_id, payload, self.clock_ms, ch.src, ch.dst, sent_ms)]
        if kind == "close":
            ch = self.channels[data]
            if not ch.open:
                return []
            ch.open = False
            self._purge_in_flight(data)
            self._push(self.clock_ms + self.reopen_delay_ms, "reopen", data)
            return [ChannelClosedEvt(data, self.clock_ms)]
        if kind == "reopen":
            ch = self.channels[data]
            ch.open = True
            return [ChannelReopenedEvt(data, self.clock_ms)]
        if kind == "timer":
            return [TimerFired(data, self.clock_ms)]
        raise AssertionError(f"unknown event kind {kind!r}")

    def _purge_in_flight(self, channel_id: str) -> None:
        ch = self.channels[channel_id]
        for due, seq, kind, data in self._queue:
            if kind == "deliver" and data[0] == channel_id and seq not in self._dead:
                self._dead.add(seq)
                ch.in_flight -= 1
                ch.stats.lost += 1

    def step_until(self, t_ms: float) -> list[SimEvent]:
        """Run every event due at or before t_ms, in order."""
        out: list[SimEvent] = []
        while self._queue and self._queue[0][0] <= t_ms:
            out.extend(self.step())
        self.clock_ms = max(self.clock_ms, t_ms)
        return out

    def conservation_ok(self) -> bool:
        return all(
            ch.stats.sent == ch.stats.delivered + ch.stats.lost + ch.stats.rejected + ch.in_flight
            for ch in self.channels.values()
        )


# --- RTT probing ----------------------------------------------------------------

@dataclass
class RttStats:
    """Ping samples over a path; instantaneous and trailing-window mean."""

    window_ms: float = 60_000.0
    samples: list[tuple[float, float]] = field(default_factory=list)  # (at_ms, rtt_ms)

    def add(self, at_ms: float, rtt_ms: float) -> None:
        self.samples.append((at_ms, rtt_ms))

    @property
    def instant_ms(self) -> float | None:
        return self.samples[-1][1] if self.samples else None

    def window_mean_ms(self, now_ms: float | None = None) -> float | None:
        if not self.samples:
            return None
        now = self.samples[-1][0] if now_ms is None else now_ms
        recent = [rtt for at, rtt in self.samples if at > now - self.window_ms]
        if not recent:
            return None
        return sum(recent) / len(recent)

    def mean_ms(self) -> float | None:
        if not self.samples:
            return None
        return sum(rtt for _, rtt in self.samples) / len(self.samples)

    def percentile_ms(self, q: float) -> float | None:
        if not self.samples:
            return None
        ordered = sorted(rtt for _, rtt in self.samples)
        idx = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
        return ordered[idx]


def run_rtt_probe(
    world: SimWorld,
    forward_path: list[str],
    return_path: list[str],
    period_ms: float,
    duration_ms: float,
    payload_bytes: int = 32,
    window_ms: float = 60_000.0,
    start_ms: float = 0.0,
) -> RttStats:
    """Ping over a channel path, pong back, collect RTT samples.

    Probes run on their own dedicated channels; each hop of a relay path
    is an independent link and intermediate nodes forward immediately.
    Lost probes simply yield no sample.
    """
    stats = RttStats(window_ms=window_ms)
    body = b"p" * max(1, payload_bytes)
    sends: dict[int, float] = {}
    hop_of = {cid: i for i, cid in enumerate(forward_path)}
    back_hop_of = {cid: i for i, cid in enumerate(return_path)}

    k = 0
    t = start_ms
    while t < start_ms + duration_ms:
        world.schedule_timer(t, f"rtt-ping:{k}")
        k += 1
        t += period_ms

    while world.pending():
        for ev in world.step():
            if isinstance(ev, TimerFired) and ev.tag.startswith("rtt-ping:"):
                seq = int(ev.tag.split(":", 1)[1])
                sends[seq] = world.clock_ms
                world.send(forward_path[0], _probe_frame(seq, body))
            elif isinstance(ev, Delivery):
                seq = _probe_seq(ev.payload)
                if seq is None:
                    continue
                if ev.channel in hop_of:
                    nxt = hop_of[ev.channel] + 1
                    if nxt < len(forward_path):
                        world.send(forward_path[nxt], ev.payload)
                    else:
                        world.send(return_path[0], ev.payload)  # pong turns around
                elif ev.channel in back_hop_of:
                    nxt = back_hop_of[ev.channel] + 1
                    if nxt < len(return_path):
                        world.send(return_path[nxt], ev.payload)
                    elif seq in sends:
                        stats.add(world.clock_ms, world.clock_ms - sends.pop(seq))
    return stats


def _probe_frame(seq: int, body: bytes) -> bytes:
    header = f"rtt:{seq}:".encode()
    return (header + body)[: max(len(header), len(body))]


def _probe_seq(payload: bytes) -> int | None:
    if not payload.startswith(b"rtt:"):
        return None
    try:
        return int(payload.split(b":", 2)[1])
    except (IndexError, ValueError):
        return None
