"""The shared scene: an add-only registry of bricks and global rules.

Bricks are keyed by (spawner, sequence) and never removed; merging two
scenes unions the registries and joins shared bricks. Global rules are
updates with no human author (gravity here): they write through a
reserved replica id and merge exactly like user edits, which is the
point — the CRDT layer has no special path for them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from brickmesh.core import ReplicaId, TransformSnapshot, Vector3, is_rule_id
from brickmesh.mvtransform import (
    IdentityError,
    MVTransformer,
    mv_fresh,
    mv_local_update,
    mv_merge,
    mv_resolve,
)


@dataclass(frozen=True, order=True)
class BrickId:
    spawner: ReplicaId
    spawn_seq: int

    def __str__(self) -> str:
        return f"{self.spawner}:{self.spawn_seq}"

    @classmethod
    def parse(cls, text: str) -> "BrickId":
        spawner, _, seq = text.rpartition(":")
        if not spawner or not seq.isdigit():
            raise ValueError(f"malformed brick id {text!r}")
        return cls(spawner, int(seq))


@dataclass
class SceneDoc:
    """Add-only map of brick id to its replicated transform."""

    bricks: dict[BrickId, MVTransformer] = field(default_factory=dict)
    spawn_counters: dict[ReplicaId, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "t": "scene",
            "bricks": {str(b): mv.to_json(str(b)) for b, mv in sorted(self.bricks.items())},
            "spawn": dict(sorted(self.spawn_counters.items())),
        }

    @classmethod
    def from_json(cls, data) -> "SceneDoc":
        return cls(
            bricks={BrickId.parse(b): MVTransformer.from_json(mv)
                    for b, mv in data["bricks"].items()},
            spawn_counters={r: int(c) for r, c in data["spawn"].items()},
        )


@dataclass(frozen=True)
class GlobalRule:
    """A state transformation without a human author."""

    rule_id: ReplicaId
    kind: str = "gravity"
    fall_speed: float = 1.0  # scene units per second
    gate_on_grab: bool = True

    def __post_init__(self):
        if not is_rule_id(self.rule_id):
            raise ValueError("rule ids must use the reserved RULE: prefix")
        if self.kind != "gravity":
            raise ValueError(f"unknown rule kind {self.kind!r}")


@dataclass(frozen=True)
class RuleTickStats:
    moved: int = 0
    gated: int = 0
    skipped_world: int = 0


def scene_spawn(
    doc: SceneDoc, r: ReplicaId, pose: TransformSnapshot
) -> tuple[SceneDoc, BrickId]:
    """Register a new brick spawned by r at the given pose."""
    seq = doc.spawn_counters.get(r, 0) + 1
    brick = BrickId(r, seq)
    bricks = dict(doc.bricks)
    bricks[brick] = mv_fresh(pose)
    counters = dict(doc.spawn_counters)
    counters[r] = seq
    return SceneDoc(bricks, counters), brick


def scene_merge(a: SceneDoc, b: SceneDoc) -> SceneDoc:
    """Union of bricks; shared bricks joined; spawn counters joined."""
    bricks = dict(a.bricks)
    for brick, mv in b.bricks.items():
        mine = bricks.get(brick)
        if mine is None:
            bricks[brick] = mv
        else:
            try:
                bricks[brick] = mv_merge(mine, mv)
            except IdentityError as exc:
                raise IdentityError(f"brick {brick}: {exc}") from exc
    counters = dict(a.spawn_counters)
    for r, c in b.spawn_counters.items():
        if c > counters.get(r, 0):
            counters[r] = c
    return SceneDoc(bricks, counters)


def scene_rule_tick(
    doc: SceneDoc, rule: GlobalRule, dt: float
) -> tuple[SceneDoc, RuleTickStats]:
    """Advance the rule by dt seconds over every eligible brick.

    Grabbed bricks are skipped when the rule gates on grab; world-mode
    bricks are always skipped (offset authorship is local-space) and
    counted in the stats.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    drop = Vector3(0.0, -rule.fall_speed * dt, 0.0)
    moved = gated = skipped = 0
    bricks = dict(doc.bricks)
    for brick, mv in doc.bricks.items():
        if not mv.mode_local:
            skipped += 1
            continue
        if rule.gate_on_grab and mv.holders():
            gated += 1
            continue
        current = mv_resolve(mv)
        target = TransformSnapshot(current.position + drop, current.rotation, current.scale)
        bricks[brick] = mv_local_update(mv, rule.rule_id, target, tolerance=0.0)
        moved += 1
    return SceneDoc(bricks, dict(doc.spawn_counters)), RuleTickStats(moved, gated, skipped)


def scene_digest(doc: SceneDoc) -> str:
    """Canonical hash of the CRDT state: equal digests iff equal states.

    Keys are sorted, dead-reckoning history is excluded, and floats are
    hashed as exact bit patterns.
    """
    canon = [
        [[str(b), mv.canonical()] for b, mv in sorted(doc.bricks.items())],
        sorted(doc.spawn_counters.items()),
    ]
    payload = json.dumps(canon, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
