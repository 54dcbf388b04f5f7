"""Value types shared by both replication cores.

Everything here is an immutable value: vectors, unit quaternions,
Lamport stamps, vector clocks, and transform snapshots. Clock
operations are pure functions over plain dicts (absent key == 0,
zero entries never stored).

JSON conventions used by the higher layers: a vector is ``[x, y, z]``,
a quaternion is ``[w, x, y, z]``, a vector clock is ``{replica: counter}``,
a Lamport stamp is ``[counter, replica]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

# Replica identifiers are opaque strings: nonempty, at most 64 bytes,
# totally ordered by lexicographic byte order. Ids starting with
# RULE_ID_PREFIX are reserved for rule authors.
ReplicaId = str

RULE_ID_PREFIX = "RULE:"

MAX_COUNTER = 2**64 - 1


class Ordering(Enum):
    EQUAL = "equal"
    BEFORE = "before"
    AFTER = "after"
    CONCURRENT = "concurrent"


def validate_replica_id(r: ReplicaId) -> ReplicaId:
    if not r:
        raise ValueError("replica id must be nonempty")
    if len(r.encode("utf-8")) > 64:
        raise ValueError("replica id exceeds 64 bytes")
    return r


def is_rule_id(r: ReplicaId) -> bool:
    return r.startswith(RULE_ID_PREFIX)


@dataclass(frozen=True, order=True)
class LamportStamp:
    """Total-order timestamp: counter first, then replica id.

    Equal counters fall back to the replica id, so the lexicographically
    larger replica wins any last-writer comparison at the same count.
    """

    counter: int
    replica: ReplicaId

    def bump(self, observed: "LamportStamp | None" = None) -> "LamportStamp":
        base = self.counter if observed is None else max(self.counter, observed.counter)
        if base >= MAX_COUNTER:
            raise OverflowError("lamport counter exhausted")
        return LamportStamp(base + 1, self.replica)

    def to_json(self) -> list:
        return [self.counter, self.replica]

    @classmethod
    def from_json(cls, data) -> "LamportStamp":
        counter, replica = data
        return cls(int(counter), str(replica))


# A stamp that loses to any stamp issued by a real replica.
ZERO_STAMP = LamportStamp(0, "")


@dataclass(frozen=True)
class Vector3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            c = float(getattr(self, name))
            if not math.isfinite(c):
                raise ValueError(f"vector component not finite: {c!r}")
            object.__setattr__(self, name, c)

    def __add__(self, other: "Vector3") -> "Vector3":
        return Vector3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vector3") -> "Vector3":
        return Vector3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> "Vector3":
        return Vector3(self.x * k, self.y * k, self.z * k)

    def hadamard(self, other: "Vector3") -> "Vector3":
        """Componentwise product (scale factors compose this way)."""
        return Vector3(self.x * other.x, self.y * other.y, self.z * other.z)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def components(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def to_json(self) -> list[float]:
        return [self.x, self.y, self.z]

    @classmethod
    def from_json(cls, data) -> "Vector3":
        x, y, z = data
        return cls(float(x), float(y), float(z))


ZERO_VEC = Vector3(0.0, 0.0, 0.0)
ONE_VEC = Vector3(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class UnitQuaternion:
    """Rotation as a unit quaternion, canonicalized on construction.

    Canonical form: unit norm, w >= 0; if w == 0 the first nonzero of
    (x, y, z) is >= 0. q and -q describe the same rotation and map to
    the same canonical value.
    """

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        n = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if not math.isfinite(n) or n < 1e-12:
            raise ValueError("quaternion norm must be finite and nonzero")
        w, x, y, z = self.w / n, self.x / n, self.y / n, self.z / n
        if w < 0 or (w == 0 and _first_nonzero_negative(x, y, z)):
            w, x, y, z = -w, -x, -y, -z
        object.__setattr__(self, "w", w + 0.0)  # +0.0 folds -0.0 into +0.0
        object.__setattr__(self, "x", x + 0.0)
        object.__setattr__(self, "y", y + 0.0)
        object.__setattr__(self, "z", z + 0.0)

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v: Vector3) -> Vector3:
        """Apply the rotation to a vector (q v q*)."""
        w, x, y, z = self.w, self.x, self.y, self.z
        # quaternion sandwich expanded to avoid constructing intermediates
        tx = 2.0 * (y * v.z - z * v.y)
        ty = 2.0 * (z * v.x - x * v.z)
        tz = 2.0 * (x * v.y - y * v.x)
        return Vector3(
            v.x + w * tx + (y * tz - z * ty),
            v.y + w * ty + (z * tx - x * tz),
            v.z + w * tz + (x * ty - y * tx),
        )

    def dot(self, other: "UnitQuaternion") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def components(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    def to_json(self) -> list[float]:
        return [self.w, self.x, self.y, self.z]

    @classmethod
    def from_json(cls, data) -> "UnitQuaternion":
        w, x, y, z = data
        return cls(float(w), float(x), float(y), float(z))

    @classmethod
    def from_axis_angle(cls, axis: Vector3, angle_rad: float) -> "UnitQuaternion":
        n = axis.norm()
        if n < 1e-12:
            raise ValueError("rotation axis must be nonzero")
        half = angle_rad / 2.0
        s = math.sin(half) / n
        return cls(math.cos(half), axis.x * s, axis.y * s, axis.z * s)


def _first_nonzero_negative(*cs: float) -> bool:
    for c in cs:
        if c != 0.0:
            return c < 0.0
    return False


IDENTITY_QUAT = UnitQuaternion(1.0, 0.0, 0.0, 0.0)


def quat_compose(a: UnitQuaternion, b: UnitQuaternion) -> UnitQuaternion:
    """Hamilton product a*b (apply b, then a), renormalized and canonical.

    Not commutative in general: the order of rotations matters.
    """
    return UnitQuaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_blend(qs: list[UnitQuaternion], weights: list[float]) -> UnitQuaternion:
    """Sign-aligned weighted linear blend, renormalized.

    Each quaternion is flipped to the hemisphere of the first before
    summing, so q and -q blend identically. Deterministic for a given
    input order; callers wanting replica-independent results pass inputs
    in stamp order. This is the cheap approximation: accurate for small
    angular spreads, not an intrinsic mean.
    """
    if not qs:
        raise ValueError("need at least one quaternion")
    if len(qs) != len(weights) or any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative and match quaternions")
    if sum(weights) <= 0:
        raise ValueError("weights must not all be zero")
    first = qs[0]
    w_acc = x_acc = y_acc = z_acc = 0.0
    for q, wt in zip(qs, weights):
        sign = 1.0 if q.dot(first) >= 0 else -1.0
        k = sign * wt
        w_acc += k * q.w
        x_acc += k * q.x
        y_acc += k * q.y
        z_acc += k * q.z
    return UnitQuaternion(w_acc, x_acc, y_acc, z_acc)


@dataclass(frozen=True)
class TransformSnapshot:
    """One object's pose: position, rotation, positive scale."""

    position: Vector3 = ZERO_VEC
    rotation: UnitQuaternion = IDENTITY_QUAT
    scale: Vector3 = ONE_VEC

    def __post_init__(self):
        if self.scale.x <= 0 or self.scale.y <= 0 or self.scale.z <= 0:
            raise ValueError("scale components must be positive")

    def to_json(self) -> dict:
        return {
            "pos": self.position.to_json(),
            "rot": self.rotation.to_json(),
            "scl": self.scale.to_json(),
        }

    @classmethod
    def from_json(cls, data) -> "TransformSnapshot":
        return cls(
            Vector3.from_json(data["pos"]),
            UnitQuaternion.from_json(data["rot"]),
            Vector3.from_json(data["scl"]),
        )


IDENTITY_SNAPSHOT = TransformSnapshot()


# --- vector clocks ---------------------------------------------------------
#
# A clock is a plain dict {replica: counter}. All functions are pure and
# never store zero entries, so two clocks are equal iff the dicts are.

VectorClock = dict


def vc_increment(vc: VectorClock, r: ReplicaId) -> VectorClock:
    """Return vc with r's counter advanced by one; vc itself untouched."""
    current = vc.get(r, 0)
    if current >= MAX_COUNTER:
        raise OverflowError(f"vector clock counter exhausted for {r!r}")
    out = dict(vc)
    out[r] = current + 1
    return out


def vc_join(a: VectorClock, b: VectorClock) -> VectorClock:
    """Pointwise maximum. Commutative, associative, idempotent."""
    if not a:
        return dict(b)
    out = dict(a)
    for r, c in b.items():
        if c > out.get(r, 0):
            out[r] = c
    return out


def vc_compare(a: VectorClock, b: VectorClock) -> Ordering:
    a_ahead = b_ahead = False
    for r in a.keys() | b.keys():
        ca, cb = a.get(r, 0), b.get(r, 0)
        if ca > cb:
            a_ahead = True
        elif cb > ca:
            b_ahead = True
    if a_ahead and b_ahead:
        return Ordering.CONCURRENT
    if a_ahead:
        return Ordering.AFTER
    if b_ahead:
        return Ordering.BEFORE
    return Ordering.EQUAL


def vc_dominates(a: VectorClock, b: VectorClock) -> bool:
    """True iff a >= b pointwise and a != b (strict domination)."""
    return vc_compare(a, b) is Ordering.AFTER


def vc_to_json(vc: VectorClock) -> dict:
    return {r: c for r, c in vc.items() if c}


def vc_from_json(data) -> VectorClock:
    return {str(r): int(c) for r, c in data.items() if int(c)}
