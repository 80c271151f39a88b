"""Camera model: projection, back-projection, frame annotation, mount refinement.

The camera frame is the usual computer-vision one (+z optical axis, +x right,
+y down); the robot frame is +x forward, +y left, +z up. Pixel coordinates are
continuous with (0, 0) at the top-left image corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveDepth, NoObservations
from .geometry import Pose, Quaternion, RigidTransform, RobotGeometry, as_vec3

# 25 iterations invert k1 ~ +0.1 to below 1e-8 px across the full image
# (barrel coefficients converge slightly looser at the corners); the break
# tolerance keeps the mild cases cheap.
UNDISTORT_ITERATIONS = 25
UNDISTORT_TOL = 1e-13

PITCH_ANGLES = {"forward": 0.0, "tilt45": math.pi / 4.0, "up": math.pi / 2.0}


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters with a single radial distortion term."""

    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    width: int = 320
    height: int = 320

    def __post_init__(self):
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise ValueError("focal lengths must be positive")
        if not (0.0 <= self.cx < self.width and 0.0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


# Plausible defaults for a 320x320 nano-quadrotor camera (~86 deg FOV).
DEFAULT_INTRINSICS = CameraIntrinsics(fx=170.0, fy=170.0, cx=160.0, cy=160.0)


@dataclass(frozen=True)
class ImagePoint:
    u: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v])


@dataclass(frozen=True)
class BoundingBox:
    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if self.u_min > self.u_max or self.v_min > self.v_max:
            raise ValueError("bounding box corners must be ordered")

    @property
    def width(self) -> float:
        return self.u_max - self.u_min

    @property
    def height(self) -> float:
        return self.v_max - self.v_min

    def contains(self, point: ImagePoint) -> bool:
        return self.u_min <= point.u <= self.u_max and self.v_min <= point.v <= self.v_max


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Intrinsics plus the robot-to-camera mounting transform."""

    intrinsics: CameraIntrinsics
    extrinsic: RigidTransform
    pitch_label: str = "forward"


def pitch_rotation(pitch: float) -> Quaternion:
    """Robot-to-camera rotation for a camera pitched up by `pitch` radians.

    pitch 0 looks along robot +x, pi/2 straight up along robot +z; the image
    x-axis stays aligned with robot -y (level horizon at pitch 0).
    """
    c, s = math.cos(pitch), math.sin(pitch)
    rows = np.array(
        [
            [0.0, -1.0, 0.0],  # camera x (right)
            [s, 0.0, -c],  # camera y (down)
            [c, 0.0, s],  # camera z (optical axis)
        ]
    )
    return _quaternion_from_matrix(rows)


def camera_for_pitch(
    label: str,
    intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS,
    translation=(0.0, 0.0, 0.0),
) -> CameraModel:
    """Camera model for one of the supported mount labels."""
    if label not in PITCH_ANGLES:
        raise ValueError(f"unknown camera pitch {label!r}; expected one of {sorted(PITCH_ANGLES)}")
    extrinsic = RigidTransform(pitch_rotation(PITCH_ANGLES[label]), as_vec3(translation))
    return CameraModel(intrinsics=intrinsics, extrinsic=extrinsic, pitch_label=label)


def _quaternion_from_matrix(m: np.ndarray) -> Quaternion:
    """Rotation matrix to quaternion (Shepperd's branch selection)."""
    t = np.trace(m)
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = ((m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = ((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s)
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = ((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s)
    return Quaternion(*q).normalized()


def distort_normalized(xn: float, yn: float, k1: float) -> tuple[float, float]:
    """Apply first-order radial distortion in normalized camera coordinates."""
    r2 = xn * xn + yn * yn
    factor = 1.0 + k1 * r2
    return xn * factor, yn * factor


def undistort_normalized(xd: float, yd: float, k1: float) -> tuple[float, float]:
    """Invert the radial term by fixed-point iteration."""
    if k1 == 0.0:
        return xd, yd
    xn, yn = xd, yd
    for _ in range(UNDISTORT_ITERATIONS):
        r2 = xn * xn + yn * yn
        factor = 1.0 + k1 * r2
        x_new, y_new = xd / factor, yd / factor
        if abs(x_new - xn) < UNDISTORT_TOL and abs(y_new - yn) < UNDISTORT_TOL:
            xn, yn = x_new, y_new
            break
        xn, yn = x_new, y_new
    return xn, yn


def project(point_camera, intr: CameraIntrinsics) -> ImagePoint:
    """Camera-frame point to pixel; raises NonPositiveDepth when z <= 0."""
    p = as_vec3(point_camera)
    if p[2] <= 0.0:
        raise NonPositiveDepth(f"point depth {p[2]} is not positive")
    xd, yd = distort_normalized(p[0] / p[2], p[1] / p[2], intr.k1)
    return ImagePoint(float(intr.fx * xd + intr.cx), float(intr.fy * yd + intr.cy))


def back_project(pixel: ImagePoint, depth_z: float, intr: CameraIntrinsics) -> np.ndarray:
    """Pixel plus camera-frame depth back to a 3D camera-frame point."""
    if depth_z <= 0.0:
        raise NonPositiveDepth(f"depth {depth_z} is not positive")
    xn, yn = undistort_normalized(
        (pixel.u - intr.cx) / intr.fx, (pixel.v - intr.cy) / intr.fy, intr.k1
    )
    return np.array([depth_z * xn, depth_z * yn, depth_z])


def pixel_to_ray(pixel: ImagePoint, intr: CameraIntrinsics) -> np.ndarray:
    """Unit direction through a pixel after undistortion."""
    xn, yn = undistort_normalized(
        (pixel.u - intr.cx) / intr.fx, (pixel.v - intr.cy) / intr.fy, intr.k1
    )
    ray = np.array([xn, yn, 1.0])
    return ray / np.linalg.norm(ray)


def in_image(point: ImagePoint, intr: CameraIntrinsics) -> bool:
    """Strictly inside the pixel bounds (the visibility rule for centers)."""
    return 0.0 < point.u < intr.width and 0.0 < point.v < intr.height


def projects_into_image(point_camera, intr: CameraIntrinsics) -> bool:
    """True when the camera-frame point has positive depth and lands in-frame."""
    p = as_vec3(point_camera)
    if p[2] <= 0.0:
        return False
    return in_image(project(p, intr), intr)


def relative_transform(ego_pose: Pose, neighbor_pose: Pose, camera: CameraModel) -> RigidTransform:
    """Neighbor robot frame into the ego camera frame.

    Chains the camera mount with the inverse ego pose and the neighbor pose,
    so the translation part is the neighbor origin seen from the camera.
    """
    return camera.extrinsic @ ego_pose.transform.inverse() @ neighbor_pose.transform


def world_to_camera(ego_pose: Pose, camera: CameraModel) -> RigidTransform:
    return camera.extrinsic @ ego_pose.transform.inverse()


def camera_to_world(ego_pose: Pose, camera: CameraModel) -> RigidTransform:
    return ego_pose.transform @ camera.extrinsic.inverse()


@dataclass(frozen=True, eq=False)
class NeighborAnnotation:
    robot_id: str
    rel_position: np.ndarray  # camera frame, positive depth
    center: ImagePoint
    bbox: BoundingBox


@dataclass(eq=False)
class FrameAnnotation:
    frame_id: int
    timestamp: float
    ego_id: str
    neighbors: list[NeighborAnnotation]


def annotate_frame(
    ego_pose: Pose,
    neighbor_poses: dict[str, Pose],
    camera: CameraModel,
    geom: RobotGeometry,
    frame_id: int = 0,
    ego_id: str = "r0",
) -> FrameAnnotation:
    """Ground-truth annotation of one frame.

    A neighbor is visible when its center projects strictly inside the image
    with positive depth. Its box is the min/max of the 8 projected body
    corners, clipped to the image; corners share the center's distortion
    model. Neighbors with any corner on or behind the image plane are dropped
    (degenerate close-range case).
    """
    intr = camera.intrinsics
    corners_body = geom.corners()
    annotations = []
    for robot_id in sorted(neighbor_poses):
        rel = relative_transform(ego_pose, neighbor_poses[robot_id], camera)
        center_cam = rel.translation
        if center_cam[2] <= 0.0:
            continue
        center_px = project(center_cam, intr)
        if not in_image(center_px, intr):
            continue
        corners_cam = rel.apply(corners_body)
        if np.any(corners_cam[:, 2] <= 0.0):
            continue
        pixels = np.array([project(c, intr).as_array() for c in corners_cam])
        bbox = BoundingBox(
            u_min=float(np.clip(pixels[:, 0].min(), 0.0, intr.width)),
            v_min=float(np.clip(pixels[:, 1].min(), 0.0, intr.height)),
            u_max=float(np.clip(pixels[:, 0].max(), 0.0, intr.width)),
            v_max=float(np.clip(pixels[:, 1].max(), 0.0, intr.height)),
        )
        annotations.append(
            NeighborAnnotation(
                robot_id=robot_id, rel_position=center_cam, center=center_px, bbox=bbox
            )
        )
    return FrameAnnotation(
        frame_id=frame_id,
        timestamp=ego_pose.timestamp,
        ego_id=ego_id,
        neighbors=annotations,
    )


@dataclass(frozen=True, eq=False)
class CalibrationFrame:
    """One frame of mount-calibration data: ego pose plus observed centers."""

    ego_pose: Pose
    observations: list[tuple[Pose, ImagePoint]]  # (neighbor ground-truth pose, seen center)


@dataclass(frozen=True)
class RotationGrid:
    """Axis-aligned rotation-vector cube searched exhaustively."""

    extent: float = 0.15
    step: float = 0.01

    def axis_values(self) -> np.ndarray:
        n = int(round(self.extent / self.step))
        return np.arange(-n, n + 1) * self.step


def reprojection_mse(frames, camera: CameraModel) -> float:
    """Mean squared pixel error of ground-truth centers vs observed centers."""
    intr = camera.intrinsics
    total = 0.0
    count = 0
    for frame in frames:
        world_to_cam = world_to_camera(frame.ego_pose, camera)
        for neighbor_pose, observed in frame.observations:
            p_cam = world_to_cam.apply(neighbor_pose.position)
            if p_cam[2] <= 0.0:
                return math.inf
            px = project(p_cam, intr)
            total += (px.u - observed.u) ** 2 + (px.v - observed.v) ** 2
            count += 1
    if count == 0:
        raise NoObservations("no center correspondences available")
    return total / count


def refine_extrinsic_rotation(
    frames, camera: CameraModel, search: RotationGrid = RotationGrid()
) -> RigidTransform:
    """Exhaustive grid search over mount-rotation perturbations.

    Every rotation vector on the grid perturbs the current mount rotation (in
    camera coordinates); the candidate minimizing the mean squared
    reprojection error of the observed robot centers wins. Translation is
    kept as-is.
    """
    if not any(frame.observations for frame in frames):
        raise NoObservations("no center correspondences available")
    # Neighbor centers in the ego robot frame do not depend on the candidate
    # mount rotation, so hoist that part of the chain out of the search loop.
    robot_frame_points = []
    observed_pixels = []
    for frame in frames:
        to_robot = frame.ego_pose.transform.inverse()
        for neighbor_pose, observed in frame.observations:
            robot_frame_points.append(to_robot.apply(neighbor_pose.position))
            observed_pixels.append(observed.as_array())
    points = np.array(robot_frame_points)
    observed = np.array(observed_pixels)
    intr = camera.intrinsics
    base_rotation = camera.extrinsic.rotation
    translation = camera.extrinsic.translation

    values = search.axis_values()
    best_error = math.inf
    best_rotation = base_rotation
    for rx in values:
        for ry in values:
            for rz in values:
                rotation = (Quaternion.from_rotvec((rx, ry, rz)) * base_rotation).normalized()
                cam_pts = rotation.rotate(points) + translation
                if np.any(cam_pts[:, 2] <= 0.0):
                    continue
                xn = cam_pts[:, 0] / cam_pts[:, 2]
                yn = cam_pts[:, 1] / cam_pts[:, 2]
                r2 = xn * xn + yn * yn
                factor = 1.0 + intr.k1 * r2
                u = intr.fx * xn * factor + intr.cx
                v = intr.fy * yn * factor + intr.cy
                err = float(np.mean((u - observed[:, 0]) ** 2 + (v - observed[:, 1]) ** 2))
                if err < best_error:
                    best_error = err
                    best_rotation = rotation
    return RigidTransform(best_rotation, translation)
