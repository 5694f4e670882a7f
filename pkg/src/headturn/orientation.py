"""Quaternion algebra, angular distance and head kinematics.

Frame convention (head-local and world alike, right-handed):

    forward = +Y, up = +Z, right = +X  (so "left" is -X)

A yaw of ``+a`` radians rotates counter-clockwise about +Z, turning the
forward axis toward the left.  Bearings follow the same sign: positive
azimuth is to the left of the facing direction, positive elevation is up.
Quaternions are stored in (w, x, y, z) order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import InvalidInputError

Vec3 = Tuple[float, float, float]

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion ``w + xi + yj + zk``.

    The constructor renormalizes, so every instance satisfies the unit-norm
    invariant.  ``q`` and ``-q`` describe the same orientation.
    """

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        try:
            comps = tuple(float(c) for c in (self.w, self.x, self.y, self.z))
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"quaternion components must be numbers: {exc}") from None
        if not all(math.isfinite(c) for c in comps):
            raise InvalidInputError(f"non-finite quaternion component in {comps}")
        # plain floats keep repr-based serialization free of numpy scalar types
        for name, c in zip("wxyz", comps):
            object.__setattr__(self, name, c)
        n2 = sum(c * c for c in comps)
        if n2 == 0.0:
            raise InvalidInputError("zero quaternion has no orientation")
        if abs(n2 - 1.0) > _NORM_TOL:
            n = math.sqrt(n2)
            object.__setattr__(self, "w", self.w / n)
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float) -> "Quaternion":
        ax, ay, az = _normalize(axis)
        s = math.sin(angle / 2.0)
        return cls(math.cos(angle / 2.0), ax * s, ay * s, az * s)

    @classmethod
    def from_yaw_pitch(cls, yaw: float, pitch: float = 0.0) -> "Quaternion":
        """Yaw about world +Z followed by pitch about the head's right axis."""
        cy, sy = math.cos(yaw / 2.0), math.sin(yaw / 2.0)
        cp, sp = math.cos(pitch / 2.0), math.sin(pitch / 2.0)
        # (cy + sy k)(cp + sp i)
        return cls(cy * cp, cy * sp, sy * sp, sy * cp)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.as_tuple()
        w2, x2, y2, z2 = other.as_tuple()
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def dot(self, other: "Quaternion") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def rotate(self, v: Sequence[float]) -> Vec3:
        """Rotate a 3-vector from the local frame into the parent frame."""
        m = self.to_matrix()
        return (
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        )

    def to_matrix(self) -> Tuple[Vec3, Vec3, Vec3]:
        w, x, y, z = self.as_tuple()
        return (
            (1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)),
            (2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)),
            (2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)),
        )

    @classmethod
    def from_matrix(cls, m: Sequence[Sequence[float]]) -> "Quaternion":
        """Shepperd's method; ``m`` must be a proper rotation matrix."""
        trace = m[0][0] + m[1][1] + m[2][2]
        if trace > 0.0:
            s = 2.0 * math.sqrt(trace + 1.0)
            return cls(
                0.25 * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        if m[0][0] > m[1][1] and m[0][0] > m[2][2]:
            s = 2.0 * math.sqrt(1.0 + m[0][0] - m[1][1] - m[2][2])
            return cls(
                (m[2][1] - m[1][2]) / s,
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        if m[1][1] > m[2][2]:
            s = 2.0 * math.sqrt(1.0 + m[1][1] - m[0][0] - m[2][2])
            return cls(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
            )
        s = 2.0 * math.sqrt(1.0 + m[2][2] - m[0][0] - m[1][1])
        return cls(
            (m[1][0] - m[0][1]) / s,
            (m[0][2] + m[2][0]) / s,
            (m[1][2] + m[2][1]) / s,
            0.25 * s,
        )


@dataclass(frozen=True)
class Bearing:
    """Direction in the head-local frame, in radians."""

    azimuth: float
    elevation: float


@dataclass
class HeadState:
    orientation: Quaternion
    max_angular_velocity: float
    current_target: Optional[Vec3] = None

    def __post_init__(self) -> None:
        if not self.max_angular_velocity > 0:
            raise InvalidInputError("max_angular_velocity must be positive")


def _normalize(v: Sequence[float]) -> Vec3:
    n = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if n == 0.0 or not math.isfinite(n):
        raise InvalidInputError(f"cannot normalize vector {tuple(v)}")
    return (v[0] / n, v[1] / n, v[2] / n)


def _cross(a: Sequence[float], b: Sequence[float]) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _check(q: Quaternion) -> None:
    if not isinstance(q, Quaternion):
        raise InvalidInputError(f"expected Quaternion, got {type(q).__name__}")


def angular_distance(q1: Quaternion, q2: Quaternion) -> float:
    """Rotation angle between two orientations, ``2 * arccos(|q1 . q2|)``.

    Sign-invariant and bounded to ``[0, pi]``.  Evaluated through the
    equivalent half-angle form ``4 * atan2(|q1 - s q2|, |q1 + s q2|)`` with
    ``s = sign(q1 . q2)``: arccos loses about 1e-8 rad of accuracy when
    ``|dot|`` is within rounding of 1, the atan2 form does not.
    """
    _check(q1)
    _check(q2)
    s = -1.0 if q1.dot(q2) < 0.0 else 1.0
    dw, dx, dy, dz = q1.w - s * q2.w, q1.x - s * q2.x, q1.y - s * q2.y, q1.z - s * q2.z
    pw, px, py, pz = q1.w + s * q2.w, q1.x + s * q2.x, q1.y + s * q2.y, q1.z + s * q2.z
    return 4.0 * math.atan2(
        math.sqrt(dw * dw + dx * dx + dy * dy + dz * dz),
        math.sqrt(pw * pw + px * px + py * py + pz * pz),
    )


def angular_distance_acos(q1: Quaternion, q2: Quaternion) -> float:
    """Literal ``2 * arccos(clamp(|dot|, 0, 1))``; kept as a cross-check."""
    d = min(1.0, abs(q1.dot(q2)))
    return 2.0 * math.acos(d)


def slerp(q1: Quaternion, q2: Quaternion, frac: float) -> Quaternion:
    """Shortest-arc spherical interpolation; ``frac`` in [0, 1]."""
    d = q1.dot(q2)
    if d < 0.0:
        q2 = -q2
        d = -d
    if d > 1.0:
        d = 1.0
    theta = math.acos(d)
    if theta < 1e-12:
        return q2 if frac >= 1.0 else q1
    s = math.sin(theta)
    a = math.sin((1.0 - frac) * theta) / s
    b = math.sin(frac * theta) / s
    return Quaternion(
        a * q1.w + b * q2.w,
        a * q1.x + b * q2.x,
        a * q1.y + b * q2.y,
        a * q1.z + b * q2.z,
    )


def slerp_step(current: Quaternion, target: Quaternion, max_step: float) -> Quaternion:
    """Rotate ``current`` toward ``target`` by at most ``max_step`` radians."""
    _check(current)
    _check(target)
    if not (math.isfinite(max_step) and max_step >= 0.0):
        raise InvalidInputError(f"max_step must be finite and >= 0, got {max_step}")
    dist = angular_distance(current, target)
    if dist <= max_step:
        return target
    # the quaternion arc is half the rotation angle
    return slerp(current, target, max_step / dist)


def bearing_of(
    head_orientation: Quaternion,
    world_point: Sequence[float],
    head_position: Sequence[float],
) -> Bearing:
    _check(head_orientation)
    d = (
        world_point[0] - head_position[0],
        world_point[1] - head_position[1],
        world_point[2] - head_position[2],
    )
    if not all(math.isfinite(c) for c in d):
        raise InvalidInputError("non-finite point")
    if d == (0.0, 0.0, 0.0):
        raise InvalidInputError("world point coincides with head position")
    # world -> local is the transpose of the orientation matrix
    m = head_orientation.to_matrix()
    lx = m[0][0] * d[0] + m[1][0] * d[1] + m[2][0] * d[2]
    ly = m[0][1] * d[0] + m[1][1] * d[1] + m[2][1] * d[2]
    lz = m[0][2] * d[0] + m[1][2] * d[1] + m[2][2] * d[2]
    return local_bearing((lx, ly, lz))


def local_bearing(v: Sequence[float]) -> Bearing:
    """Bearing of a head-local direction vector."""
    az = math.atan2(-v[0], v[1])
    if az == -math.pi:
        az = math.pi
    el = math.atan2(v[2], math.hypot(v[0], v[1]))
    return Bearing(az, el)


def look_rotation(
    from_point: Sequence[float],
    to_point: Sequence[float],
    world_up: Sequence[float] = (0.0, 0.0, 1.0),
) -> Quaternion:
    """Orientation whose forward (+Y) axis points from ``from_point`` to ``to_point``.

    Roll is chosen so the local up axis stays in the plane of forward and
    ``world_up``.  When forward is parallel to ``world_up`` the right axis is
    fixed to world +X.
    """
    diff = tuple(b - a for a, b in zip(from_point, to_point))
    if not all(math.isfinite(c) for c in diff):
        raise InvalidInputError("non-finite look_rotation input")
    if diff == (0.0, 0.0, 0.0):
        raise InvalidInputError("look_rotation needs distinct points")
    fwd = _normalize(diff)
    up = _normalize(world_up)
    right = _cross(fwd, up)
    if math.sqrt(sum(c * c for c in right)) < 1e-12:
        right = (1.0, 0.0, 0.0)
        if abs(fwd[0]) > 1.0 - 1e-12:
            right = (0.0, -1.0, 0.0)
    right = _normalize(right)
    # re-orthogonalize so (right, fwd, local_up) is exactly orthonormal
    local_up = _normalize(_cross(right, fwd))
    right = _normalize(_cross(fwd, local_up))
    m = (
        (right[0], fwd[0], local_up[0]),
        (right[1], fwd[1], local_up[1]),
        (right[2], fwd[2], local_up[2]),
    )
    return Quaternion.from_matrix(m)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi
