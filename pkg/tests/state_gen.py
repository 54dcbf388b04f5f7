"""Random CRDT states for the merge-law and convergence harnesses.

Generated states satisfy the representation invariants (world versions
are normalized to an antichain, offsets/grab sequences positive), so
the semilattice laws are checked on reachable states.
"""

import random

from brickmesh.core import (
    LamportStamp,
    TransformSnapshot,
    UnitQuaternion,
    Vector3,
)
from brickmesh.mvtransform import (
    GrabEntry,
    MVTransformer,
    OffsetEntry,
    TaggedValue,
    _antichain,
)
from brickmesh.scene import BrickId, SceneDoc

REPLICAS = ["A", "B", "C"]

# component pools: built once with a fixed seed, drawn combinatorially.
# The merge laws exercise structure (sequence comparisons, clock and stamp
# relations), not float variety, and pooled parts keep generation cheap
# enough for the 10^4-triple acceptance sweep.
_pool_rng = random.Random(0xBEEF)
_VECS = [
    Vector3(round(_pool_rng.uniform(-4, 4), 3), round(_pool_rng.uniform(-4, 4), 3),
            round(_pool_rng.uniform(-4, 4), 3))
    for _ in range(64)
]
_QUATS = [UnitQuaternion()] + [
    UnitQuaternion(_pool_rng.uniform(-1, 1), _pool_rng.uniform(-1, 1),
                   _pool_rng.uniform(-1, 1), _pool_rng.uniform(-1, 1))
    for _ in range(63)
]
_SCALES = [
    Vector3(_pool_rng.uniform(0.5, 2.0), _pool_rng.uniform(0.5, 2.0),
            _pool_rng.uniform(0.5, 2.0))
    for _ in range(64)
]
_SNAPSHOTS = [
    TransformSnapshot(_pool_rng.choice(_VECS), _pool_rng.choice(_QUATS),
                      _pool_rng.choice(_SCALES))
    for _ in range(64)
]


def rand_vec(rng: random.Random, span: float = 4.0) -> Vector3:
    return rng.choice(_VECS)


def rand_quat(rng: random.Random) -> UnitQuaternion:
    return rng.choice(_QUATS)


def rand_scale(rng: random.Random) -> Vector3:
    return rng.choice(_SCALES)


def rand_snapshot(rng: random.Random) -> TransformSnapshot:
    return rng.choice(_SNAPSHOTS)


def rand_clock(rng: random.Random) -> dict:
    return {r: rng.randint(1, 6) for r in REPLICAS if rng.random() < 0.6}


def rand_stamp(rng: random.Random, replica: str) -> LamportStamp:
    return LamportStamp(rng.randint(1, 50), replica)


def rand_mv(rng: random.Random, origin: TransformSnapshot) -> MVTransformer:
    offsets = {}
    for r in REPLICAS:
        if rng.random() < 0.6:
            offsets[r] = OffsetEntry(
                seq=rng.randint(1, 5),
                pos_offset=rand_vec(rng),
                rot_delta=rand_quat(rng),
                scl_factor=rand_scale(rng),
            )
    versions = [
        TaggedValue(rand_snapshot(rng), rand_stamp(rng, r), rand_clock(rng))
        for r in REPLICAS
        if rng.random() < 0.5
    ]
    grabs = {
        r: GrabEntry(rng.random() < 0.5, rng.randint(1, 4), rand_stamp(rng, r))
        for r in REPLICAS
        if rng.random() < 0.5
    }
    return MVTransformer(
        origin=origin,
        offsets=offsets,
        world=_antichain(versions),
        grabs=grabs,
        mode_local=rng.random() < 0.5,
        mode_stamp=rand_stamp(rng, rng.choice(REPLICAS)),
    )


def rand_mv_triple(rng: random.Random):
    origin = rand_snapshot(rng)
    return tuple(rand_mv(rng, origin) for _ in range(3))


def rand_scene(rng: random.Random, origins: dict) -> SceneDoc:
    bricks = {}
    counters = {}
    for bid, origin in origins.items():
        if rng.random() < 0.8:
            bricks[bid] = rand_mv(rng, origin)
            counters[bid.spawner] = max(counters.get(bid.spawner, 0), bid.spawn_seq)
    return SceneDoc(bricks=bricks, spawn_counters=counters)


def rand_scene_triple(rng: random.Random):
    origins = {
        BrickId("A", 1): rand_snapshot(rng),
        BrickId("B", 1): rand_snapshot(rng),
        BrickId("A", 2): rand_snapshot(rng),
    }
    return tuple(rand_scene(rng, origins) for _ in range(3))
