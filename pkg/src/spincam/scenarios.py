"""Kinematic flight-scenario generation and the camera frame schedule.

Tracks are generated as smooth interpolants sampled at a fixed rate, not by
closed-loop simulation; the integrator in `dynamics` exists for physical
validation. Robot "r0" always carries the camera: it is the lower robot in
the swap scenario and the circling robot in the hover-orbit scenario. Flying
robots spin about +z at the configured auto-yaw rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .downwash import EllipsoidSpec, ellipsoid_margin
from .errors import InvalidConfig
from .geometry import Pose, PoseTrack, Quaternion, RigidTransform

SCENARIO_KINDS = ("random_waypoint", "hover_orbit", "swap")
CAMERA_PITCHES = ("forward", "tilt45", "up")

DEFAULT_HOVER_HEIGHTS = (0.6, 1.0, 1.4)
WAYPOINT_REJECTION_LIMIT = 1000


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    num_robots: int
    duration: float
    yaw_rate: float = 4.0
    camera_pitch: str = "up"
    frame_rate: float = 6.0
    sample_rate: float = 100.0
    arena_min: tuple[float, float, float] = (-1.5, -1.5, 0.1)
    arena_max: tuple[float, float, float] = (1.5, 1.5, 2.0)
    rng_seed: int = 0
    ellipsoid: EllipsoidSpec = field(default_factory=EllipsoidSpec)
    # random_waypoint parameters
    waypoint_count: int = 6
    max_speed: float = 0.5
    accel: float = 1.0
    # hover_orbit parameters
    hover_heights: tuple[float, ...] | None = None
    orbit_radius: float = 0.5
    orbit_height: float = 0.9
    orbit_speed: float = 0.3
    # swap parameters
    swap_start_a: tuple[float, float, float] = (-0.7, -0.7, 0.5)
    swap_start_b: tuple[float, float, float] = (0.7, 0.7, 0.9)

    def validate(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise InvalidConfig(f"unknown scenario kind {self.kind!r}")
        if self.camera_pitch not in CAMERA_PITCHES:
            raise InvalidConfig(f"unknown camera pitch {self.camera_pitch!r}")
        if not 1 <= self.num_robots <= 4:
            raise InvalidConfig(f"num_robots must be 1..4, got {self.num_robots}")
        if self.duration <= 0.0 or self.frame_rate <= 0.0 or self.sample_rate < 100.0:
            raise InvalidConfig("duration and rates must be positive (sample_rate >= 100 Hz)")
        if self.yaw_rate < 0.0:
            raise InvalidConfig("yaw_rate must be non-negative")
        lo, hi = np.array(self.arena_min), np.array(self.arena_max)
        if not np.all(lo < hi):
            raise InvalidConfig("arena bounds must satisfy min < max per axis")
        if self.kind == "swap":
            if self.num_robots != 2:
                raise InvalidConfig("swap scenario requires exactly 2 robots")
            if self.swap_start_a[2] == self.swap_start_b[2]:
                raise InvalidConfig("swap robots must start at distinct heights")
        if self.kind == "hover_orbit":
            if self.num_robots < 2:
                raise InvalidConfig("hover_orbit needs at least one hovering neighbor")
            if self.orbit_radius <= 0.0 or self.orbit_speed <= 0.0:
                raise InvalidConfig("orbit radius and speed must be positive")
        if self.kind == "random_waypoint":
            if self.waypoint_count < 2:
                raise InvalidConfig("random_waypoint needs at least 2 waypoints")
            if self.max_speed <= 0.0 or self.accel <= 0.0:
                raise InvalidConfig("speed and acceleration must be positive")


def frame_schedule(cfg: ScenarioConfig) -> np.ndarray:
    """Camera timestamps 0, 1/fps, ... up to and including the duration."""
    count = int(math.floor(cfg.duration * cfg.frame_rate + 1e-9)) + 1
    return np.arange(count) / cfg.frame_rate


def _sample_times(cfg: ScenarioConfig) -> np.ndarray:
    steps = int(round(cfg.duration * cfg.sample_rate))
    return np.linspace(0.0, cfg.duration, steps + 1)


def _spinning_track(robot_id: str, times: np.ndarray, positions: np.ndarray,
                    yaw_rate: float) -> PoseTrack:
    samples = [
        Pose(float(t), RigidTransform(Quaternion.from_yaw(yaw_rate * float(t)), p))
        for t, p in zip(times, positions)
    ]
    return PoseTrack(robot_id=robot_id, samples=samples)


def _static_track(robot_id: str, times: np.ndarray, position) -> PoseTrack:
    transform = RigidTransform(Quaternion.identity(), np.asarray(position, dtype=float))
    return PoseTrack(robot_id=robot_id, samples=[Pose(float(t), transform) for t in times])


def _smoothstep(tau: np.ndarray) -> np.ndarray:
    tau = np.clip(tau, 0.0, 1.0)
    return tau * tau * (3.0 - 2.0 * tau)


def _generate_swap(cfg: ScenarioConfig, times: np.ndarray) -> list[PoseTrack]:
    a = np.array(cfg.swap_start_a, dtype=float)
    b = np.array(cfg.swap_start_b, dtype=float)
    lower, upper = (a, b) if a[2] < b[2] else (b, a)
    s = _smoothstep(times / cfg.duration)[:, None]
    lower_xy = (1.0 - s) * lower[None, :2] + s * upper[None, :2]
    upper_xy = (1.0 - s) * upper[None, :2] + s * lower[None, :2]
    pos0 = np.column_stack([lower_xy, np.full(len(times), lower[2])])
    pos1 = np.column_stack([upper_xy, np.full(len(times), upper[2])])
    return [
        _spinning_track("r0", times, pos0, cfg.yaw_rate),
        _spinning_track("r1", times, pos1, cfg.yaw_rate),
    ]


def _hover_layout(cfg: ScenarioConfig) -> list[np.ndarray]:
    heights = cfg.hover_heights or DEFAULT_HOVER_HEIGHTS
    n_hover = cfg.num_robots - 1
    if len(heights) < n_hover:
        raise InvalidConfig(f"hover_heights provides {len(heights)} heights for {n_hover} robots")
    positions = []
    for k in range(n_hover):
        # first hoverer sits on the orbit path; the rest cluster inside it
        radius = cfg.orbit_radius if k == 0 else 0.5 * cfg.orbit_radius
        angle = 2.0 * math.pi * k / max(1, n_hover)
        positions.append(
            np.array([radius * math.cos(angle), radius * math.sin(angle), heights[k]])
        )
    return positions


def _generate_hover_orbit(cfg: ScenarioConfig, times: np.ndarray) -> list[PoseTrack]:
    omega = cfg.orbit_speed / cfg.orbit_radius
    angles = math.pi + omega * times
    orbit = np.column_stack(
        [
            cfg.orbit_radius * np.cos(angles),
            cfg.orbit_radius * np.sin(angles),
            np.full(len(times), cfg.orbit_height),
        ]
    )
    tracks = [_spinning_track("r0", times, orbit, cfg.yaw_rate)]
    for k, position in enumerate(_hover_layout(cfg)):
        tracks.append(_static_track(f"r{k + 1}", times, position))
    return tracks


def _trapezoid_duration(length: float, vmax: float, accel: float) -> float:
    ramp_dist = vmax * vmax / (2.0 * accel)
    if length <= 2.0 * ramp_dist:
        return 2.0 * math.sqrt(length / accel)
    return 2.0 * vmax / accel + (length - 2.0 * ramp_dist) / vmax


def _trapezoid_position(t: float, length: float, vmax: float, accel: float) -> float:
    """Distance along a leg at time t under the trapezoidal speed profile."""
    ramp_dist = vmax * vmax / (2.0 * accel)
    if length <= 2.0 * ramp_dist:
        peak_t = math.sqrt(length / accel)
        total = 2.0 * peak_t
        if t <= peak_t:
            return 0.5 * accel * t * t
        t = min(t, total)
        return length - 0.5 * accel * (total - t) ** 2
    ramp_t = vmax / accel
    total = 2.0 * ramp_t + (length - 2.0 * ramp_dist) / vmax
    if t <= ramp_t:
        return 0.5 * accel * t * t
    if t <= total - ramp_t:
        return ramp_dist + vmax * (t - ramp_t)
    t = min(t, total)
    return length - 0.5 * accel * (total - t) ** 2


def _draw_waypoints(cfg: ScenarioConfig, rng: np.random.Generator) -> list[np.ndarray]:
    """Per-robot waypoint lists; same-index waypoints of different robots are
    rejection-sampled to keep an ellipsoid margin of at least 2."""
    lo = np.array(cfg.arena_min, dtype=float)
    hi = np.array(cfg.arena_max, dtype=float)
    all_waypoints: list[np.ndarray] = []
    for robot in range(cfg.num_robots):
        points = np.zeros((cfg.waypoint_count, 3))
        for k in range(cfg.waypoint_count):
            for attempt in range(WAYPOINT_REJECTION_LIMIT):
                candidate = rng.uniform(lo, hi)
                if all(
                    ellipsoid_margin(candidate, other[k], cfg.ellipsoid) >= 2.0
                    for other in all_waypoints
                ):
                    points[k] = candidate
                    break
            else:
                raise InvalidConfig(
                    "could not place separated waypoints; arena too small for robot count"
                )
        all_waypoints.append(points)
    return all_waypoints


def _waypoint_positions(times: np.ndarray, waypoints: np.ndarray, vmax: float,
                        accel: float) -> np.ndarray:
    legs = []
    t_start = 0.0
    for k in range(len(waypoints) - 1):
        delta = waypoints[k + 1] - waypoints[k]
        length = float(np.linalg.norm(delta))
        if length < 1e-12:
            continue
        legs.append((t_start, length, waypoints[k], delta / length))
        t_start += _trapezoid_duration(length, vmax, accel)

    positions = np.zeros((len(times), 3))
    for i, t in enumerate(times):
        pos = waypoints[-1]
        for start, length, origin, direction in legs:
            if t < start:
                break
            s = _trapezoid_position(t - start, length, vmax, accel)
            pos = origin + s * direction
        positions[i] = pos
    return positions


def _generate_waypoint(cfg: ScenarioConfig, times: np.ndarray,
                       rng: np.random.Generator) -> list[PoseTrack]:
    waypoint_sets = _draw_waypoints(cfg, rng)
    return [
        _spinning_track(
            f"r{i}",
            times,
            _waypoint_positions(times, points, cfg.max_speed, cfg.accel),
            cfg.yaw_rate,
        )
        for i, points in enumerate(waypoint_sets)
    ]


def generate_scenario(cfg: ScenarioConfig) -> list[PoseTrack]:
    """Deterministic pose tracks for one scenario configuration."""
    cfg.validate()
    times = _sample_times(cfg)
    rng = np.random.default_rng(cfg.rng_seed)
    if cfg.kind == "swap":
        return _generate_swap(cfg, times)
    if cfg.kind == "hover_orbit":
        return _generate_hover_orbit(cfg, times)
    return _generate_waypoint(cfg, times, rng)


def with_settings(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Copy of a config with selected fields replaced (benchmark sweeps)."""
    return replace(cfg, **overrides)
