"""Downwash proximity condition, belief-set tracking, and frame-wise prediction.

A robot pair is in downwash when the ellipsoid-normalized distance between
them drops below 2. The ego robot keeps a set of believed neighbor positions
in the world frame: any belief that reprojects into the current image is
dropped, then this frame's perceived neighbors are added back. Prediction
simply tests the ellipsoid condition against every surviving belief.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .camera import (
    CameraModel,
    annotate_frame,
    camera_to_world,
    projects_into_image,
    world_to_camera,
)
from .geometry import (
    DEFAULT_ROBOT_GEOMETRY,
    Pose,
    PoseTrack,
    RobotGeometry,
    as_vec3,
    interpolate_pose,
)
from .perception import (
    DEFAULT_GRID_COLS,
    DEFAULT_GRID_ROWS,
    DEFAULT_GRID_THRESHOLD,
    NoiseModel,
    PositionEstimate,
    decode_detections,
    oracle_estimates,
    simulate_detector,
)

DOWNWASH_MARGIN = 2.0
DEFAULT_MERGE_RADIUS = 0.1

EVAL_MODES = ("oracle", "omni", "box", "grid")


@dataclass(frozen=True)
class EllipsoidSpec:
    """Axis-aligned safety ellipsoid radii (meters)."""

    rx: float = 0.15
    ry: float = 0.15
    rz: float = 0.3

    def __post_init__(self):
        if self.rx <= 0.0 or self.ry <= 0.0 or self.rz <= 0.0:
            raise ValueError("ellipsoid radii must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.rx, self.ry, self.rz])


def ellipsoid_margin(p_i, p_j, ellipsoid: EllipsoidSpec) -> float:
    """Ellipsoid-normalized separation; values below 2 mean downwash danger."""
    delta = as_vec3(p_i) - as_vec3(p_j)
    return float(np.linalg.norm(delta / ellipsoid.as_array()))


def is_downwash(p_i, p_j, ellipsoid: EllipsoidSpec) -> bool:
    return ellipsoid_margin(p_i, p_j, ellipsoid) < DOWNWASH_MARGIN


@dataclass(frozen=True, eq=False)
class Belief:
    position: np.ndarray  # world frame
    born_at: float


@dataclass(frozen=True, eq=False)
class BeliefSet:
    beliefs: tuple[Belief, ...] = ()

    @staticmethod
    def empty() -> "BeliefSet":
        return BeliefSet(())

    def __len__(self) -> int:
        return len(self.beliefs)

    def __iter__(self):
        return iter(self.beliefs)

    def positions(self) -> np.ndarray:
        if not self.beliefs:
            return np.zeros((0, 3))
        return np.array([b.position for b in self.beliefs])


def _update_with_world_positions(
    beliefs: BeliefSet,
    world_positions: Sequence[np.ndarray],
    timestamp: float,
    visible: Callable[[np.ndarray], bool],
    merge_radius: float,
) -> BeliefSet:
    kept = [b for b in beliefs if not visible(b.position)]
    for position in world_positions:
        kept = [b for b in kept if np.linalg.norm(b.position - position) >= merge_radius]
        kept.append(Belief(position=np.array(position, dtype=float), born_at=timestamp))
    return BeliefSet(tuple(kept))


def update_belief(
    beliefs: BeliefSet,
    ego_pose: Pose,
    camera: CameraModel,
    predictions: Sequence[PositionEstimate],
    merge_radius: float = DEFAULT_MERGE_RADIUS,
    visibility: Callable[[np.ndarray], bool] | None = None,
) -> BeliefSet:
    """One frame of the belief rule: drop what reprojects, add what was seen.

    Predictions arrive in the camera frame and are stored in the world frame.
    `visibility` overrides the reprojection test (the omnidirectional oracle
    passes an always-true one); new beliefs absorb older ones within
    merge_radius.
    """
    if visibility is None:
        to_camera = world_to_camera(ego_pose, camera)

        def visibility(world_point: np.ndarray) -> bool:
            return projects_into_image(to_camera.apply(world_point), camera.intrinsics)

    to_world = camera_to_world(ego_pose, camera)
    world_positions = [to_world.apply(p.position) for p in predictions]
    return _update_with_world_positions(
        beliefs, world_positions, ego_pose.timestamp, visibility, merge_radius
    )


def predict_downwash(beliefs: BeliefSet, ego_position, ellipsoid: EllipsoidSpec) -> bool:
    """True when any believed neighbor violates the ellipsoid condition."""
    ego = as_vec3(ego_position)
    return any(is_downwash(b.position, ego, ellipsoid) for b in beliefs)


@dataclass(frozen=True)
class DownwashFrameResult:
    frame_id: int
    gt_downwash: bool
    pred_downwash: bool


def _frame_estimates(
    annotation,
    neighbor_world: dict[str, np.ndarray],
    ego_pose: Pose,
    camera: CameraModel,
    mode: str,
    noise: NoiseModel | None,
    geom: RobotGeometry,
    grid_threshold: float,
    grid_dims: tuple[int, int],
):
    """Perceived neighbor positions for one frame, per evaluation mode.

    Returns (world_positions, visibility or None); None keeps the default
    reprojection visibility.
    """
    if mode == "omni":
        return list(neighbor_world.values()), (lambda _p: True)
    if mode == "oracle":
        estimates = oracle_estimates(annotation)
    else:
        if noise is None:
            raise ValueError(f"mode {mode!r} needs a NoiseModel")
        output = simulate_detector(
            annotation,
            noise,
            camera.intrinsics,
            mode,
            radius=geom.sphere_radius,
            rows=grid_dims[0],
            cols=grid_dims[1],
        )
        estimates = decode_detections(
            output, camera.intrinsics, radius=geom.sphere_radius, threshold=grid_threshold
        )
    to_world = camera_to_world(ego_pose, camera)
    return [to_world.apply(e.position) for e in estimates], None


def evaluate_downwash_frames(
    frame_data: Iterable[tuple[int, Pose, dict[str, Pose], "FrameAnnotation"]],
    camera: CameraModel,
    ellipsoid: EllipsoidSpec,
    mode: str = "oracle",
    noise: NoiseModel | None = None,
    geom: RobotGeometry = DEFAULT_ROBOT_GEOMETRY,
    grid_threshold: float = DEFAULT_GRID_THRESHOLD,
    grid_dims: tuple[int, int] = (DEFAULT_GRID_ROWS, DEFAULT_GRID_COLS),
    merge_radius: float = DEFAULT_MERGE_RADIUS,
) -> list[DownwashFrameResult]:
    """Run the belief protocol over prepared frames, in timestamp order.

    frame_data yields (frame_id, ego pose, neighbor poses, annotation).
    """
    if mode not in EVAL_MODES:
        raise ValueError(f"unknown evaluation mode {mode!r}; expected one of {EVAL_MODES}")
    beliefs = BeliefSet.empty()
    results = []
    for frame_id, ego_pose, neighbor_poses, annotation in frame_data:
        neighbor_world = {rid: p.position for rid, p in neighbor_poses.items()}
        gt = any(
            is_downwash(pos, ego_pose.position, ellipsoid) for pos in neighbor_world.values()
        )
        world_positions, visibility = _frame_estimates(
            annotation, neighbor_world, ego_pose, camera, mode, noise, geom,
            grid_threshold, grid_dims,
        )
        if visibility is None:
            to_camera = world_to_camera(ego_pose, camera)

            def visibility(world_point, _to_camera=to_camera):
                return projects_into_image(_to_camera.apply(world_point), camera.intrinsics)

        beliefs = _update_with_world_positions(
            beliefs, world_positions, ego_pose.timestamp, visibility, merge_radius
        )
        pred = predict_downwash(beliefs, ego_pose.position, ellipsoid)
        results.append(DownwashFrameResult(frame_id=frame_id, gt_downwash=gt, pred_downwash=pred))
    return results


def evaluate_downwash_records(records, camera: CameraModel, ellipsoid: EllipsoidSpec, **kwargs):
    """Evaluate pre-annotated frame records (objects with .annotation/.poses).

    Records are processed in timestamp order regardless of file order; the
    belief update is order-dependent.
    """
    ordered = sorted(records, key=lambda record: record.annotation.timestamp)

    def frame_iter():
        for record in ordered:
            annotation = record.annotation
            poses = dict(record.poses)
            ego_pose = poses.pop(annotation.ego_id)
            yield annotation.frame_id, ego_pose, poses, annotation

    return evaluate_downwash_frames(frame_iter(), camera, ellipsoid, **kwargs)


def run_downwash_eval(
    tracks: Sequence[PoseTrack],
    camera: CameraModel,
    frames: Sequence[float],
    ellipsoid: EllipsoidSpec,
    ego_id: str | None = None,
    geom: RobotGeometry = DEFAULT_ROBOT_GEOMETRY,
    mode: str = "oracle",
    noise: NoiseModel | None = None,
    grid_threshold: float = DEFAULT_GRID_THRESHOLD,
    grid_dims: tuple[int, int] = (DEFAULT_GRID_ROWS, DEFAULT_GRID_COLS),
    merge_radius: float = DEFAULT_MERGE_RADIUS,
) -> list[DownwashFrameResult]:
    """Full per-frame evaluation from pose tracks and a frame schedule."""
    if ego_id is None:
        ego_id = tracks[0].robot_id
    by_id = {t.robot_id: t for t in tracks}
    if ego_id not in by_id:
        raise ValueError(f"ego robot {ego_id!r} not among tracks")

    def frame_iter():
        for frame_id, t in enumerate(sorted(frames)):
            poses = {rid: interpolate_pose(track, t) for rid, track in by_id.items()}
            ego_pose = poses.pop(ego_id)
            annotation = annotate_frame(
                ego_pose, poses, camera, geom, frame_id=frame_id, ego_id=ego_id
            )
            yield frame_id, ego_pose, poses, annotation

    return evaluate_downwash_frames(
        frame_iter(), camera, ellipsoid,
        mode=mode, noise=noise, geom=geom,
        grid_threshold=grid_threshold, grid_dims=grid_dims, merge_radius=merge_radius,
    )
