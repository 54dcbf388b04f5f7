"""brickmesh: replicated 3D-transform synchronization over a peer mesh.

Two replication cores (an operation log with causal buffering, and a
state-merged multi-value transform), an add-only scene of bricks, a
peer-signaling state machine, a deterministic network simulator, and a
CLI harness that binds them into reproducible experiments.
"""

from brickmesh.core import (
    IDENTITY_QUAT,
    IDENTITY_SNAPSHOT,
    LamportStamp,
    Ordering,
    ReplicaId,
    TransformSnapshot,
    UnitQuaternion,
    Vector3,
    quat_blend,
    quat_compose,
    vc_compare,
    vc_increment,
    vc_join,
)

__all__ = [
    "IDENTITY_QUAT",
    "IDENTITY_SNAPSHOT",
    "LamportStamp",
    "Ordering",
    "ReplicaId",
    "TransformSnapshot",
    "UnitQuaternion",
    "Vector3",
    "quat_blend",
    "quat_compose",
    "vc_compare",
    "vc_increment",
    "vc_join",
]

__version__ = "0.1.0"
