"""Operation-based transform replication.

Each local edit becomes an immutable offset operation tagged with the
author's vector clock. Receivers apply an operation once its causal
dependencies are met, buffer it otherwise, and drain the buffer after
every successful apply. Offsets to position and scale commute; rotation
deltas do not, which is the documented limitation of this core.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from brickmesh.core import (
    IDENTITY_SNAPSHOT,
    ReplicaId,
    TransformSnapshot,
    UnitQuaternion,
    Vector3,
    VectorClock,
    quat_blend,
    quat_compose,
    validate_replica_id,
    vc_from_json,
    vc_increment,
    vc_join,
    vc_to_json,
)

# How an incoming rotation delta folds into the local rotation.
EFFECT_COMPOSE = "compose"  # rotation = rotation * delta (object-local)
EFFECT_BLEND = "blend"      # rotation = equal-weight blend of rotation and delta


class MalformedOperation(ValueError):
    pass


@dataclass(frozen=True)
class Operation:
    """One broadcast edit: offsets plus the author's post-increment clock."""

    replica: ReplicaId
    op_seq: int
    pos_offset: Vector3
    rot_delta: UnitQuaternion
    scale_factor: Vector3
    dep_clock: VectorClock

    def validate(self) -> "Operation":
        validate_replica_id(self.replica)
        if self.op_seq < 1:
            raise MalformedOperation(f"op_seq must be >= 1, got {self.op_seq}")
        if self.dep_clock.get(self.replica) != self.op_seq:
            raise MalformedOperation("dep_clock must carry the author's own op_seq")
        s = self.scale_factor
        if s.x <= 0 or s.y <= 0 or s.z <= 0:
            raise MalformedOperation("scale factor components must be positive")
        return self

    def key(self) -> tuple[ReplicaId, int]:
        return (self.replica, self.op_seq)

    def to_json(self) -> dict:
        return {
            "t": "op",
            "replica": self.replica,
            "seq": self.op_seq,
            "pos": self.pos_offset.to_json(),
            "rot": self.rot_delta.to_json(),
            "scl": self.scale_factor.to_json(),
            "clock": vc_to_json(self.dep_clock),
        }

    @classmethod
    def from_json(cls, data) -> "Operation":
        return cls(
            replica=str(data["replica"]),
            op_seq=int(data["seq"]),
            pos_offset=Vector3.from_json(data["pos"]),
            rot_delta=UnitQuaternion.from_json(data["rot"]),
            scale_factor=Vector3.from_json(data["scl"]),
            dep_clock=vc_from_json(data["clock"]),
        ).validate()


@dataclass
class OpReplicaState:
    """One replica's view: clock, snapshot, and the causal buffer.

    The applied set is the clock itself: an op is applied only when it is
    exactly next-in-sequence for its source, so r's applied ops are always
    1..clock[r] and a separate exception set would stay empty.
    """

    replica: ReplicaId
    clock: VectorClock = field(default_factory=dict)
    snapshot: TransformSnapshot = IDENTITY_SNAPSHOT
    pending: list[Operation] = field(default_factory=list)
    rotation_effect: str = EFFECT_COMPOSE

    def has_applied(self, op: Operation) -> bool:
        return op.op_seq <= self.clock.get(op.replica, 0)

    def deps_met(self, op: Operation) -> bool:
        if self.clock.get(op.replica, 0) + 1 != op.op_seq:
            return False
        return all(
            c <= self.clock.get(r, 0)
            for r, c in op.dep_clock.items()
            if r != op.replica
        )


def op_create(
    state: OpReplicaState,
    pos_offset: Vector3,
    rot_delta: UnitQuaternion,
    scale_factor: Vector3,
) -> tuple[OpReplicaState, Operation]:
    """Author an operation and apply it locally before any broadcast."""
    clock = vc_increment(state.clock, state.replica)
    op = Operation(
        replica=state.replica,
        op_seq=clock[state.replica],
        pos_offset=pos_offset,
        rot_delta=rot_delta,
        scale_factor=scale_factor,
        dep_clock=clock,
    ).validate()
    return op_apply(state, op), op


def op_apply(state: OpReplicaState, op: Operation) -> OpReplicaState:
    """Apply, buffer, or ignore an incoming operation.

    Idempotent: redelivery of an applied op is a no-op. Ops whose
    dependencies are unmet go to the pending buffer; the buffer is
    drained to a fixpoint after every effective apply.
    """
    op.validate()
    if state.has_applied(op):
        return state
    new = OpReplicaState(
        replica=state.replica,
        clock=state.clock,
        snapshot=state.snapshot,
        pending=list(state.pending),
        rotation_effect=state.rotation_effect,
    )
    if not new.deps_met(op):
        if all(p.key() != op.key() for p in new.pending):
            new.pending.append(op)
        return new
    _apply_effect(new, op)
    _drain(new)
    return new


def op_resolve(state: OpReplicaState) -> TransformSnapshot:
    return state.snapshot


def _apply_effect(state: OpReplicaState, op: Operation) -> None:
    snap = state.snapshot
    if state.rotation_effect == EFFECT_BLEND:
        rotation = quat_blend([snap.rotation, op.rot_delta], [1.0, 1.0])
    else:
        rotation = quat_compose(snap.rotation, op.rot_delta)
    state.snapshot = TransformSnapshot(
        position=snap.position + op.pos_offset,
        rotation=rotation,
        scale=snap.scale.hadamard(op.scale_factor),
    )
    state.clock = vc_join(state.clock, op.dep_clock)


def _drain(state: OpReplicaState) -> None:
    progressed = True
    while progressed:
        progressed = False
        still = []
        for op in state.pending:
            if state.has_applied(op):
                continue
            if state.deps_met(op):
                _apply_effect(state, op)
                progressed = True
            else:
                still.append(op)
        state.pending = still
