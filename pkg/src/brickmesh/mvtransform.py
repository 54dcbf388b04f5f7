"""State-merged transform replication with read-time conflict strategies.

An MVTransformer wraps one object's pose in four replicated registers:

* per-replica offset accumulators (local-space mode): each author folds
  its net translation/rotation/scale into its own slot; readers combine
  all slots, so concurrent edits add up instead of clobbering;
* a multi-value set of absolute poses (world-space mode): writes are
  tagged with a Lamport stamp and a causal context; a write removes the
  versions it causally observed and concurrent writes survive side by
  side until a read strategy arbitrates;
* a grab register recording who is holding the object and since when;
* a mode register (last-writer-wins boolean) that flips the object
  between local-space and world-space synchronization at runtime.

Merging two states is a join: pick the higher sequence per offset slot,
the higher grab sequence per replica, the later mode write, and the
union-minus-dominated set of world versions. The result is commutative,
associative, and idempotent, so replicas converge no matter how states
are exchanged. The dead-reckoning history ring is replica-local scratch:
it never merges and never affects equality.

World-mode multi-values are not garbage collected beyond causal
overwrite; the antichain can grow with sustained concurrency.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from brickmesh.core import (
    IDENTITY_QUAT,
    ZERO_STAMP,
    LamportStamp,
    Ordering,
    ReplicaId,
    TransformSnapshot,
    UnitQuaternion,
    Vector3,
    VectorClock,
    quat_blend,
    quat_compose,
    vc_compare,
    vc_from_json,
    vc_to_json,
)

HISTORY_CAPACITY = 8
DEFAULT_TOLERANCE = 1e-4


class ModeError(RuntimeError):
    """Update does not match the register's current synchronization mode."""


class StampError(ValueError):
    """A replica reused or rewound its Lamport stamp."""


class IdentityError(ValueError):
    """Attempt to merge states of two different objects."""


def canon_float(x: float) -> str:
    """Exact float identity for digests: the IEEE-754 bit pattern."""
    return struct.pack("!d", x).hex()


def _canon_vec(v: Vector3) -> list[str]:
    return [canon_float(v.x), canon_float(v.y), canon_float(v.z)]


def _canon_quat(q: UnitQuaternion) -> list[str]:
    return [canon_float(q.w), canon_float(q.x), canon_float(q.y), canon_float(q.z)]


def _canon_snap(s: TransformSnapshot) -> list:
    # snapshots are frozen and widely shared (origins, tagged values), so
    # the canonical form is computed once per object
    cached = s.__dict__.get("_canon")
    if cached is None:
        cached = [_canon_vec(s.position), _canon_quat(s.rotation), _canon_vec(s.scale)]
        object.__setattr__(s, "_canon", cached)
    return cached


def _canon_clock(vc: VectorClock) -> list:
    return sorted(vc.items())


@dataclass(frozen=True)
class OffsetEntry:
    """One replica's accumulated local-space contribution."""

    seq: int
    pos_offset: Vector3
    rot_delta: UnitQuaternion
    scl_factor: Vector3

    def canonical(self) -> list:
        cached = self.__dict__.get("_canon")
        if cached is None:
            cached = [self.seq, _canon_vec(self.pos_offset), _canon_quat(self.rot_delta),
                      _canon_vec(self.scl_factor)]
            object.__setattr__(self, "_canon", cached)
        return cached

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "pos": self.pos_offset.to_json(),
            "rot": self.rot_delta.to_json(),
            "scl": self.scl_factor.to_json(),
        }

    @classmethod
    def from_json(cls, data) -> "OffsetEntry":
        return cls(int(data["seq"]), Vector3.from_json(data["pos"]),
                   UnitQuaternion.from_json(data["rot"]), Vector3.from_json(data["scl"]))


EMPTY_OFFSET = OffsetEntry(0, Vector3(), IDENTITY_QUAT, Vector3(1, 1, 1))


@dataclass(frozen=True)
class TaggedValue:
    """An absolute pose write: value, total-order stamp, causal context."""

    value: TransformSnapshot
    stamp: LamportStamp
    clock: dict

    def canonical(self) -> list:
        cached = self.__dict__.get("_canon")
        if cached is None:
            cached = [_canon_snap(self.value), self.stamp.to_json(), _canon_clock(self.clock)]
            object.__setattr__(self, "_canon", cached)
        return cached

    def to_json(self) -> dict:
        return {"val": self.value.to_json(), "stamp": self.stamp.to_json(),
                "clock": vc_to_json(self.clock)}

    @classmethod
    def from_json(cls, data) -> "TaggedValue":
        return cls(TransformSnapshot.from_json(data["val"]),
                   LamportStamp.from_json(data["stamp"]), vc_from_json(data["clock"]))


@dataclass(frozen=True)
class GrabEntry:
    holding: bool
    grab_seq: int
    since: LamportStamp

    def canonical(self) -> list:
        return [self.holding, self.grab_seq, self.since.to_json()]

    def to_json(self) -> dict:
        return {"h": self.holding, "seq": self.grab_seq, "since": self.since.to_json()}

    @classmethod
    def from_json(cls, data) -> "GrabEntry":
        return cls(bool(data["h"]), int(data["seq"]), LamportStamp.from_json(data["since"]))


@dataclass(frozen=True)
class Strategy:
    """Read-time arbitration for concurrent world-space versions."""

    variant: str  # lww | average | constraint | dead-reckoning
    horizon: int = 4  # dead reckoning: stamp ticks to extrapolate

    VARIANTS = ("lww", "average", "constraint", "dead-reckoning")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise ValueError(f"unknown strategy {self.variant!r}")


LWW = Strategy("lww")
AVERAGE = Strategy("average")
CONSTRAINT = Strategy("constraint")
DEAD_RECKONING = Strategy("dead-reckoning")


class MVTransformer:
    """Replicated transform state for one object.

    Values behave functionally: every update returns a new instance and
    never mutates its input, so states can be copied, compared, and
    shipped between threads freely.
    """

    __slots__ = ("origin", "offsets", "world", "grabs", "mode_local",
                 "mode_stamp", "history", "_canon")

    def __init__(
        self,
        origin: TransformSnapshot,
        offsets: dict[ReplicaId, OffsetEntry] | None = None,
        world: tuple[TaggedValue, ...] = (),
        grabs: dict[ReplicaId, GrabEntry] | None = None,
        mode_local: bool = True,
        mode_stamp: LamportStamp = ZERO_STAMP,
        history: tuple[tuple[LamportStamp, Vector3], ...] = (),
    ):
        self.origin = origin
        self.offsets = offsets or {}
        self.world = world
        self.grabs = grabs or {}
        self.mode_local = mode_local
        self.mode_stamp = mode_stamp
        self.history = history
        self._canon = None

    def _replace(self, **kw) -> "MVTransformer":
        base = dict(
            origin=self.origin, offsets=self.offsets, world=self.world,
            grabs=self.grabs, mode_local=self.mode_local,
            mode_stamp=self.mode_stamp, history=self.history,
        )
        base.update(kw)
        return MVTransformer(**base)

    def canonical(self) -> list:
        """Merge-relevant state in canonical order; history excluded.

        Instances are never mutated after construction (every update goes
        through _replace), so the form is computed once.
        """
        if self._canon is None:
            self._canon = [
                _canon_snap(self.origin),
                [[r, e.canonical()] for r, e in sorted(self.offsets.items())],
                [tv.canonical() for tv in sorted(self.world, key=_world_sort_key)],
                [[r, g.canonical()] for r, g in sorted(self.grabs.items())],
                [self.mode_local, self.mode_stamp.to_json()],
            ]
        return self._canon

    def __eq__(self, other) -> bool:
        if not isinstance(other, MVTransformer):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(repr(self.canonical()))

    def holders(self) -> list[ReplicaId]:
        return sorted(r for r, g in self.grabs.items() if g.holding)

    def concurrent_versions(self) -> int:
        return len(self.world)

    def to_json(self, brick: str = "") -> dict:
        return {
            "t": "mv",
            "brick": brick,
            "origin": self.origin.to_json(),
            "offsets": {r: e.to_json() for r, e in sorted(self.offsets.items())},
            "world": [tv.to_json() for tv in sorted(self.world, key=_world_sort_key)],
            "grabs": {r: g.to_json() for r, g in sorted(self.grabs.items())},
            "mode": {"local": self.mode_local, "stamp": self.mode_stamp.to_json()},
        }

    @classmethod
    def from_json(cls, data) -> "MVTransformer":
        return cls(
            origin=TransformSnapshot.from_json(data["origin"]),
            offsets={r: OffsetEntry.from_json(e) for r, e in data["offsets"].items()},
            world=tuple(TaggedValue.from_json(tv) for tv in data["world"]),
            grabs={r: GrabEntry.from_json(g) for r, g in data["grabs"].items()},
            mode_local=bool(data["mode"]["local"]),
            mode_stamp=LamportStamp.from_json(data["mode"]["stamp"]),
        )


def _world_sort_key(tv: TaggedValue):
    canon = tv.canonical()  # [snap, stamp, clock]
    return (tv.stamp, canon[2], canon[0])


def mv_fresh(origin: TransformSnapshot) -> MVTransformer:
    return MVTransformer(origin=origin)


# --- updates ----------------------------------------------------------------

def mv_local_update(
    mv: MVTransformer,
    r: ReplicaId,
    target: TransformSnapshot,
    tolerance: float = DEFAULT_TOLERANCE,
) -> MVTransformer:
    """Fold the move from the currently resolved pose to `target` into r's slot.

    Movement below `tolerance` (componentwise) is dropped to keep
    floating-point jitter from generating update traffic.
    """
    if not mv.mode_local:
        raise ModeError("local update on a world-space register")
    current = mv_resolve(mv, LWW)
    dpos = target.position - current.position
    pos_still = max(abs(dpos.x), abs(dpos.y), abs(dpos.z)) <= tolerance
    rot_still = all(
        abs(a - b) <= tolerance
        for a, b in zip(target.rotation.components(), current.rotation.components())
    )
    dscl = target.scale - current.scale
    scl_still = max(abs(dscl.x), abs(dscl.y), abs(dscl.z)) <= tolerance
    if pos_still and rot_still and scl_still:
        return mv

    old = mv.offsets.get(r, EMPTY_OFFSET)
    rot_delta = quat_compose(current.rotation.conjugate(), target.rotation)
    scl_factor = Vector3(
        target.scale.x / current.scale.x,
        target.scale.y / current.scale.y,
        target.scale.z / current.scale.z,
    )
    entry = OffsetEntry(
        seq=old.seq + 1,
        pos_offset=old.pos_offset + dpos,
        rot_delta=quat_compose(old.rot_delta, rot_delta),
        scl_factor=old.scl_factor.hadamard(scl_factor),
    )
    offsets = dict(mv.offsets)
    offsets[r] = entry
    return mv._replace(offsets=offsets)


def mv_world_update(
    mv: MVTransformer,
    r: ReplicaId,
    value: TransformSnapshot,
    stamp: LamportStamp,
    ctx: VectorClock,
) -> MVTransformer:
    """Write an absolute pose, removing the versions this write observed."""
    if mv.mode_local:
        raise ModeError("world update on a local-space register")
    if stamp.replica != r:
        raise StampError("stamp must be authored by the writing replica")
    # monotonicity is checked against locally observable evidence only;
    # the owning replica always calls this on its own state
    prior = [tv.stamp for tv in mv.world if tv.stamp.replica == r]
    prior += [s for s, _ in mv.history if s.replica == r]
    if prior and stamp <= max(prior):
        raise StampError(f"non-monotone stamp {stamp} for {r!r}")

    new_version = TaggedValue(value, stamp, dict(ctx))
    survivors = [tv for tv in mv.world
                 if vc_compare(tv.clock, ctx) is not Ordering.BEFORE]
    survivors.append(new_version)
    history = (mv.history + ((stamp, value.position),))[-HISTORY_CAPACITY:]
    return mv._replace(world=_antichain(survivors), history=history)


def mv_set_grab(
    mv: MVTransformer, r: ReplicaId, holding: bool, stamp: LamportStamp
) -> MVTransformer:
    old = mv.grabs.get(r)
    since = stamp if holding else (old.since if old else ZERO_STAMP)
    grabs = dict(mv.grabs)
    grabs[r] = GrabEntry(holding, (old.grab_seq if old else 0) + 1, since)
    return mv._replace(grabs=grabs)


def mv_set_mode(
    mv: MVTransformer, r: ReplicaId, local_space: bool, stamp: LamportStamp
) -> MVTransformer:
    if stamp.replica != r:
        raise StampError("stamp must be authored by the writing replica")
    if stamp <= mv.mode_stamp:
        return mv
    return mv._replace(mode_local=local_space, mode_stamp=stamp)


# --- merge ------------------------------------------------------------------

def mv_merge(a: MVTransformer, b: MVTransformer) -> MVTransformer:
    """Join of two states; argument order never affects the result."""
    if a.origin != b.origin:
        raise IdentityError("merge of two different objects")

    offsets = dict(a.offsets)
    for r, entry in b.offsets.items():
        mine = offsets.get(r)
        if mine is None or _offset_wins(entry, mine):
            offsets[r] = entry

    grabs = dict(a.grabs)
    for r, g in b.grabs.items():
        mine = grabs.get(r)
        if mine is None or _grab_wins(g, mine):
            grabs[r] = g

    # value as final tie-break keeps the register a total-order max even
    # if a stamp is (incorrectly) reused with two different values
    if (b.mode_stamp, b.mode_local) > (a.mode_stamp, a.mode_local):
        mode_local, mode_stamp = b.mode_local, b.mode_stamp
    else:
        mode_local, mode_stamp = a.mode_local, a.mode_stamp

    world = _antichain(list(a.world) + list(b.world))

    return MVTransformer(
        origin=a.origin,
        offsets=offsets,
        world=world,
        grabs=grabs,
        mode_local=mode_local,
        mode_stamp=mode_stamp,
        history=a.history,  # replica-local scratch, never merged
    )


def _offset_wins(new: OffsetEntry, old: OffsetEntry) -> bool:
    # higher seq supersedes; the canonical tie-break keeps the join a
    # total-order max even if an id is (incorrectly) authored twice
    if new.seq != old.seq:
        return new.seq > old.seq
    return new.canonical() > old.canonical()


def _grab_wins(new: GrabEntry, old: GrabEntry) -> bool:
    if new.grab_seq != old.grab_seq:
        return new.grab_seq > old.grab_seq
    return new.canonical() > old.canonical()


def _antichain(versions: list[TaggedValue]) -> tuple[TaggedValue, ...]:
    """Drop duplicates and causally dominated versions; canonical order."""
    unique: list[TaggedValue] = []
    seen = set()
    for tv in versions:
        key = repr(tv.canonical())
        if key not in seen:
            seen.add(key)
            unique.append(tv)
    kept = [
        tv for tv in unique
        if not any(
            vc_compare(tv.clock, other.clock) is Ordering.BEFORE
            for other in unique
        )
    ]
    kept.sort(key=_world_sort_key)
    return tuple(kept)


# --- resolve ----------------------------------------------------------------

def mv_resolve(mv: MVTransformer, strategy: Strategy = LWW) -> TransformSnapshot:
    """Pure read: equal states and strategy give a bit-identical snapshot."""
    if mv.mode_local:
        return _resolve_local(mv)
    if not mv.world:
        return mv.origin
    if len(mv.world) == 1:
        return mv.world[0].value
    versions = sorted(mv.world, key=lambda tv: tv.stamp)
    if strategy.variant == "average":
        return _resolve_average(versions)
    if strategy.variant == "constraint":
        return _resolve_constraint(mv, versions)
    if strategy.variant == "dead-reckoning":
        return _resolve_dead_reckoning(mv, versions, strategy.horizon)
    return versions[-1].value  # lww: greatest stamp


def _resolve_local(mv: MVTransformer) -> TransformSnapshot:
    # ascending replica order fixes the rotation fold and makes the
    # float accumulation order identical on every replica
    pos = mv.origin.position
    rot = mv.origin.rotation
    scl = mv.origin.scale
    for _, entry in sorted(mv.offsets.items()):
        pos = pos + entry.pos_offset
        rot = quat_compose(rot, entry.rot_delta)
        scl = scl.hadamard(entry.scl_factor)
    return TransformSnapshot(pos, rot, scl)


def _resolve_average(versions: list[TaggedValue]) -> TransformSnapshot:
    n = float(len(versions))
    px = py = pz = sx = sy = sz = 0.0
    for tv in versions:
        px += tv.value.position.x
        py += tv.value.position.y
        pz += tv.value.position.z
        sx += tv.value.scale.x
        sy += tv.value.scale.y
        sz += tv.value.scale.z
    rotation = quat_blend([tv.value.rotation for tv in versions], [1.0] * len(versions))
    return TransformSnapshot(
        Vector3(px / n, py / n, pz / n), rotation, Vector3(sx / n, sy / n, sz / n)
    )


def _resolve_constraint(mv: MVTransformer, versions: list[TaggedValue]) -> TransformSnapshot:
    holding = {r: g.since for r, g in mv.grabs.items() if g.holding}
    best = None
    best_since = None
    for tv in versions:  # ascending stamp: at equal since the later write wins
        since = holding.get(tv.stamp.replica)
        if since is None:
            continue
        if best is None or since <= best_since:
            best, best_since = tv, since
    if best is None:
        return versions[-1].value  # no holder authored a version: fall back to lww
    return best.value


def _resolve_dead_reckoning(
    mv: MVTransformer, versions: list[TaggedValue], horizon: int
) -> TransformSnapshot:
    if len(mv.history) < 2:
        return versions[-1].value
    (s1, p1), (s2, p2) = mv.history[-2], mv.history[-1]
    dt = s2.counter - s1.counter
    if dt <= 0:
        return versions[-1].value
    velocity = (p2 - p1).scaled(1.0 / dt)
    predicted = p2 + velocity.scaled(float(horizon))
    best = None
    best_d = None
    for tv in versions:  # ascending stamp: later stamp wins exact ties
        d = (tv.value.position - predicted).norm()
        if best is None or d <= best_d:
            best, best_d = tv, d
    return best.value


# --- dynamic strategy switching ---------------------------------------------

@dataclass
class SwitchController:
    """Escalates LWW to Constraint under sustained conflict, with hysteresis.

    Conflict observations (>= 2 concurrent versions seen at a read) are
    counted over a sliding window of `window` stamp ticks. Reaching
    `t_high` escalates; a full window at or below `t_low` de-escalates.
    At most one switch can happen per window, so oscillating counts
    between the thresholds cannot cause flapping.
    """

    window: int = 20
    t_high: int = 5
    t_low: int = 1
    calm: Strategy = LWW
    contested: Strategy = CONSTRAINT
    current: Strategy = field(init=False)
    _events: list[int] = field(default_factory=list)
    _last_switch: int | None = field(default=None)

    def __post_init__(self):
        if not self.t_low < self.t_high:
            raise ValueError("hysteresis requires t_low < t_high")
        self.current = self.calm

    def conflict_count(self) -> int:
        return len(self._events)


def strategy_step(
    ctl: SwitchController, observed_concurrent_versions: int, now: LamportStamp
) -> Strategy:
    tick = now.counter
    ctl._events = [t for t in ctl._events if t > tick - ctl.window]
    if observed_concurrent_versions >= 2:
        ctl._events.append(tick)
    count = len(ctl._events)
    settled = ctl._last_switch is None or tick - ctl._last_switch >= ctl.window
    if settled:
        if ctl.current == ctl.calm and count >= ctl.t_high:
            ctl.current = ctl.contested
            ctl._last_switch = tick
        elif ctl.current == ctl.contested and count <= ctl.t_low:
            ctl.current = ctl.calm
            ctl._last_switch = tick
    return ctl.current
