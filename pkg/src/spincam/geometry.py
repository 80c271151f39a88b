"""Rigid-body geometry: quaternions, transforms, timestamped pose tracks.

Conventions: quaternions are Hamilton (w, x, y, z) and rotate body-frame
vectors into the parent frame; all distances are meters, angles radians,
timestamps seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfRange

UNIT_NORM_TOL = 1e-6


def as_vec3(value) -> np.ndarray:
    """Coerce to a finite float (3,) array."""
    v = np.asarray(value, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


@dataclass(frozen=True, eq=False)
class Quaternion:
    """Rotation quaternion; kept unit-norm by construction helpers."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = self.norm()
        if not math.isfinite(n) or n == 0.0:
            raise ValueError("quaternion norm must be finite and nonzero")

    @staticmethod
    def identity() -> "Quaternion":
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "Quaternion":
        a = as_vec3(axis)
        n = np.linalg.norm(a)
        if n == 0.0:
            raise ValueError("rotation axis must be nonzero")
        half = 0.5 * angle
        s = math.sin(half) / n
        return Quaternion(math.cos(half), a[0] * s, a[1] * s, a[2] * s)

    @staticmethod
    def from_rotvec(rotvec) -> "Quaternion":
        r = as_vec3(rotvec)
        angle = float(np.linalg.norm(r))
        if angle < 1e-12:
            # first-order expansion, exact enough below the tolerance
            return Quaternion(1.0, 0.5 * r[0], 0.5 * r[1], 0.5 * r[2]).normalized()
        return Quaternion.from_axis_angle(r / angle, angle)

    @staticmethod
    def from_yaw(yaw: float) -> "Quaternion":
        return Quaternion(math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw))

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def dot(self, other: "Quaternion") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def inverse(self) -> "Quaternion":
        # unit quaternion: inverse == conjugate
        return self.conjugate()

    def rotate(self, v) -> np.ndarray:
        """Rotate a 3-vector (or (N, 3) stack) by this quaternion."""
        vec = np.asarray(v, dtype=float)
        q = np.array([self.x, self.y, self.z])
        t = 2.0 * np.cross(q, vec)
        return vec + self.w * t + np.cross(q, t)

    def to_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def yaw(self) -> float:
        """Heading angle about +z (ZYX convention)."""
        return math.atan2(
            2.0 * (self.w * self.z + self.x * self.y),
            1.0 - 2.0 * (self.y * self.y + self.z * self.z),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])


def slerp(q0: Quaternion, q1: Quaternion, t: float) -> Quaternion:
    """Shortest-arc spherical interpolation between two unit quaternions."""
    dot = q0.dot(q1)
    b = q1
    if dot < 0.0:
        dot = -dot
        b = Quaternion(-q1.w, -q1.x, -q1.y, -q1.z)
    if dot > 1.0 - 1e-12:
        # nearly parallel: linear blend then renormalize
        return Quaternion(
            q0.w + t * (b.w - q0.w),
            q0.x + t * (b.x - q0.x),
            q0.y + t * (b.y - q0.y),
            q0.z + t * (b.z - q0.z),
        ).normalized()
    theta = math.acos(min(1.0, dot))
    s = math.sin(theta)
    c0 = math.sin((1.0 - t) * theta) / s
    c1 = math.sin(t * theta) / s
    return Quaternion(
        c0 * q0.w + c1 * b.w,
        c0 * q0.x + c1 * b.x,
        c0 * q0.y + c1 * b.y,
        c0 * q0.z + c1 * b.z,
    ).normalized()


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation-then-translation map between two frames."""

    rotation: Quaternion
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "translation", as_vec3(self.translation))
        if abs(self.rotation.norm() - 1.0) > UNIT_NORM_TOL:
            raise ValueError("transform rotation must be unit-norm")

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(Quaternion.identity(), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        return self.rotation.rotate(points) + self.translation

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        """Composition: (self @ other)(x) == self(other(x))."""
        return RigidTransform(
            (self.rotation * other.rotation).normalized(),
            self.rotation.rotate(other.translation) + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        inv_rot = self.rotation.inverse()
        return RigidTransform(inv_rot, -inv_rot.rotate(self.translation))

    def to_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.to_matrix()
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True, eq=False)
class Pose:
    """Robot-to-world transform stamped with its sample time."""

    timestamp: float
    transform: RigidTransform

    def __post_init__(self):
        if not math.isfinite(self.timestamp) or self.timestamp < 0.0:
            raise ValueError("timestamp must be finite and non-negative")

    @property
    def position(self) -> np.ndarray:
        return self.transform.translation

    @property
    def orientation(self) -> Quaternion:
        return self.transform.rotation


@dataclass(eq=False)
class PoseTrack:
    """Time-ordered pose samples for one robot."""

    robot_id: str
    samples: list[Pose]
    _times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.array([p.timestamp for p in self.samples], dtype=float)
        if len(times) >= 2 and not np.all(np.diff(times) > 0.0):
            raise ValueError(f"track {self.robot_id!r}: timestamps must be strictly increasing")
        self._times = times

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def start_time(self) -> float:
        return float(self._times[0])

    @property
    def end_time(self) -> float:
        return float(self._times[-1])


def interpolate_pose(track: PoseTrack, t: float) -> Pose:
    """Pose at time t: linear in position, spherical shortest-arc in orientation.

    Raises OutOfRange outside the track span; sample times return the stored
    sample exactly.
    """
    if len(track) < 2:
        raise ValueError("interpolation needs a track with at least 2 samples")
    times = track._times
    if t < times[0] or t > times[-1]:
        raise OutOfRange(
            f"t={t} outside track {track.robot_id!r} span [{times[0]}, {times[-1]}]"
        )
    idx = int(np.searchsorted(times, t, side="right")) - 1
    if idx >= 0 and times[idx] == t:
        return track.samples[idx]
    if idx >= len(times) - 1:
        idx = len(times) - 2
    lo, hi = track.samples[idx], track.samples[idx + 1]
    alpha = (t - lo.timestamp) / (hi.timestamp - lo.timestamp)
    position = (1.0 - alpha) * lo.position + alpha * hi.position
    orientation = slerp(lo.orientation, hi.orientation, alpha)
    return Pose(t, RigidTransform(orientation, position))


@dataclass(frozen=True, eq=False)
class RobotGeometry:
    """Physical robot extent: corner box for annotation, sphere for decoding."""

    half_extents: np.ndarray
    sphere_radius: float

    def __post_init__(self):
        object.__setattr__(self, "half_extents", as_vec3(self.half_extents))
        if np.any(self.half_extents <= 0.0) or self.sphere_radius <= 0.0:
            raise ValueError("robot dimensions must be positive")

    def corners(self) -> np.ndarray:
        """The 8 body-frame corner points, one per sign combination."""
        hx, hy, hz = self.half_extents
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=float,
        )
        return signs * np.array([hx, hy, hz])


# Crazyflie-class footprint: ~13 cm motor-to-motor diagonal, 3 cm body height.
DEFAULT_ROBOT_GEOMETRY = RobotGeometry(
    half_extents=np.array([0.065, 0.065, 0.03]), sphere_radius=0.05
)
