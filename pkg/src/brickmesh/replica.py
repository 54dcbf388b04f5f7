"""One participant's runtime: a scene, a stamp source, and edit entry points.

The CRDT layer is pure; this wrapper owns the mutable loop state a real
peer carries — its Lamport counter (advanced past every stamp it has
observed), its current read strategy, and the optional conflict-driven
strategy switcher. All edits consult the replica's *own* view: a move
targets local or world mode according to what this replica currently
believes the brick's mode is.
"""

from __future__ import annotations

from dataclasses import dataclass

from brickmesh.core import (
    LamportStamp,
    ReplicaId,
    TransformSnapshot,
    Vector3,
    validate_replica_id,
    vc_increment,
    vc_join,
)
from brickmesh.mvtransform import (
    LWW,
    MVTransformer,
    Strategy,
    SwitchController,
    mv_resolve,
    mv_set_grab,
    mv_set_mode,
    mv_world_update,
    mv_local_update,
    strategy_step,
)
from brickmesh.scene import (
    BrickId,
    GlobalRule,
    RuleTickStats,
    SceneDoc,
    scene_digest,
    scene_merge,
    scene_rule_tick,
    scene_spawn,
)


@dataclass
class Replica:
    id: ReplicaId

    def __post_init__(self):
        validate_replica_id(self.id)
        self.doc = SceneDoc()
        self.counter = 0
        self.strategy: Strategy = LWW
        self.controller: SwitchController | None = None

    # --- stamps --------------------------------------------------------------

    def next_stamp(self) -> LamportStamp:
        self.counter += 1
        return LamportStamp(self.counter, self.id)

    def observe_counter(self, counter: int) -> None:
        if counter > self.counter:
            self.counter = counter

    def _observe_doc(self, doc: SceneDoc) -> None:
        for mv in doc.bricks.values():
            self.observe_counter(mv.mode_stamp.counter)
            for tv in mv.world:
                self.observe_counter(tv.stamp.counter)
            for g in mv.grabs.values():
                self.observe_counter(g.since.counter)

    # --- edits ---------------------------------------------------------------

    def spawn(self, pose: TransformSnapshot = TransformSnapshot()) -> BrickId:
        self.doc, brick = scene_spawn(self.doc, self.id, pose)
        return brick

    def brick(self, brick: BrickId) -> MVTransformer:
        return self.doc.bricks[brick]

    def resolve(self, brick: BrickId) -> TransformSnapshot:
        return mv_resolve(self.doc.bricks[brick], self.strategy)

    def grab(self, brick: BrickId, holding: bool = True) -> None:
        mv = self.doc.bricks[brick]
        self.doc.bricks[brick] = mv_set_grab(mv, self.id, holding, self.next_stamp())

    def release(self, brick: BrickId) -> None:
        self.grab(brick, holding=False)

    def set_mode(self, brick: BrickId, local_space: bool) -> None:
        mv = self.doc.bricks[brick]
        self.doc.bricks[brick] = mv_set_mode(mv, self.id, local_space, self.next_stamp())

    def move(
        self,
        brick: BrickId,
        to: Vector3 | None = None,
        by: Vector3 | None = None,
        tolerance: float = 1e-4,
    ) -> TransformSnapshot:
        """Move toward an absolute target or by a relative offset.

        Local-mode bricks fold the delta into this replica's offset slot;
        world-mode bricks write the absolute target as a tagged version.
        """
        if (to is None) == (by is None):
            raise ValueError("move needs exactly one of to= or by=")
        mv = self.doc.bricks[brick]
        current = mv_resolve(mv, self.strategy)
        position = to if to is not None else current.position + by
        target = TransformSnapshot(position, current.rotation, current.scale)
        if mv.mode_local:
            self.doc.bricks[brick] = mv_local_update(mv, self.id, target, tolerance)
        else:
            ctx = {}
            for tv in mv.world:
                ctx = vc_join(ctx, tv.clock)
            ctx = vc_increment(ctx, self.id)
            self.doc.bricks[brick] = mv_world_update(
                mv, self.id, target, self.next_stamp(), ctx
            )
        return target

    def rule_tick(self, rule: GlobalRule, dt: float) -> RuleTickStats:
        self.doc, stats = scene_rule_tick(self.doc, rule, dt)
        return stats

    # --- strategy ------------------------------------------------------------

    def set_strategy(self, strategy: Strategy | None) -> None:
        """Fixed strategy, or None to arbitrate via the switch controller."""
        if strategy is None:
            self.controller = SwitchController()
            self.strategy = self.controller.current
        else:
            self.controller = None
            self.strategy = strategy

    def step_controller(self, brick: BrickId) -> Strategy:
        if self.controller is not None:
            observed = self.doc.bricks[brick].concurrent_versions()
            now = LamportStamp(self.counter, self.id)
            self.strategy = strategy_step(self.controller, observed, now)
        return self.strategy

    # --- sync ------------------------------------------------------------------

    def state_json(self) -> dict:
        return self.doc.to_json()

    def merge_state(self, state: SceneDoc | dict) -> None:
        doc = state if isinstance(state, SceneDoc) else SceneDoc.from_json(state)
        self.doc = scene_merge(self.doc, doc)
        self._observe_doc(doc)

    def digest(self) -> str:
        return scene_digest(self.doc)
