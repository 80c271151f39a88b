"""Detection decoding and simulated detectors.

Two decoding routes are supported: bounding boxes decoded through the
sphere-subtense distance model, and confidence/depth grids decoded by
inverting the pinhole projection. A configurable noise model stands in for
the neural detectors so the evaluation protocol can run without images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import (
    BoundingBox,
    CameraIntrinsics,
    FrameAnnotation,
    ImagePoint,
    back_project,
    pixel_to_ray,
)
from .errors import DegenerateBox

DEFAULT_GRID_ROWS = 28
DEFAULT_GRID_COLS = 40
DEFAULT_GRID_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class BoxDetection:
    bbox: BoundingBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass(eq=False)
class GridDetectionMap:
    """Confidence and depth channels over a coarse detection grid."""

    rows: int
    cols: int
    confidence: np.ndarray
    depth: np.ndarray

    def __post_init__(self):
        self.confidence = np.asarray(self.confidence, dtype=float)
        self.depth = np.asarray(self.depth, dtype=float)
        expected = (self.rows, self.cols)
        if self.confidence.shape != expected or self.depth.shape != expected:
            raise ValueError(f"channel shapes must be {expected}")

    @staticmethod
    def zeros(rows: int = DEFAULT_GRID_ROWS, cols: int = DEFAULT_GRID_COLS) -> "GridDetectionMap":
        return GridDetectionMap(rows, cols, np.zeros((rows, cols)), np.zeros((rows, cols)))


@dataclass(frozen=True)
class NoiseModel:
    """Detector error model; all draws derive from rng_seed and frame id."""

    pixel_sigma: float = 1.0
    depth_rel_sigma: float = 0.1
    miss_rate: float = 0.1
    false_positive_rate: float = 0.05
    true_confidence: tuple[float, float] = (0.6, 1.0)
    false_confidence: tuple[float, float] = (0.3, 0.7)
    rng_seed: int = 0

    def __post_init__(self):
        if self.pixel_sigma < 0.0 or self.depth_rel_sigma < 0.0:
            raise ValueError("noise sigmas must be non-negative")
        if not 0.0 <= self.miss_rate <= 1.0:
            raise ValueError("miss_rate must be in [0, 1]")
        if self.false_positive_rate < 0.0:
            raise ValueError("false_positive_rate must be non-negative")


@dataclass(frozen=True, eq=False)
class PositionEstimate:
    position: np.ndarray  # camera frame
    source: str  # box_decoder | grid_decoder | oracle

    def __post_init__(self):
        if self.position[2] <= 0.0:
            raise ValueError("estimate depth must be positive")


def sphere_distance_from_angle(alpha: float, radius: float) -> float:
    """Distance to a sphere of known radius subtending the angle alpha."""
    if alpha <= 0.0:
        raise DegenerateBox("subtended angle must be positive")
    return radius / math.sin(0.5 * alpha)


def decode_rays(a1: np.ndarray, a2: np.ndarray, radius: float) -> PositionEstimate:
    """Position of a sphere from its two horizontal tangent rays."""
    cos_alpha = float(np.clip(np.dot(a1, a2), -1.0, 1.0))
    alpha = math.acos(cos_alpha)
    if alpha <= 0.0:
        raise DegenerateBox("tangent rays coincide; distance is unbounded")
    d = sphere_distance_from_angle(alpha, radius)
    a_c = 0.5 * (a1 + a2)
    norm = np.linalg.norm(a_c)
    if norm == 0.0:
        raise DegenerateBox("tangent rays are antipodal; direction is undefined")
    return PositionEstimate(position=d * a_c / norm, source="box_decoder")


def decode_box(det: BoxDetection, intr: CameraIntrinsics, radius: float) -> PositionEstimate:
    """Relative position from a bounding box and the known robot radius.

    The rays pass through the midpoints of the left and right box edges
    (undistorted); the angle between them fixes the range, their bisector the
    direction.
    """
    bbox = det.bbox
    v_mid = 0.5 * (bbox.v_min + bbox.v_max)
    a1 = pixel_to_ray(ImagePoint(bbox.u_min, v_mid), intr)
    a2 = pixel_to_ray(ImagePoint(bbox.u_max, v_mid), intr)
    return decode_rays(a1, a2, radius)


def grid_cell_center(row: int, col: int, intr: CameraIntrinsics, rows: int, cols: int) -> ImagePoint:
    """Image point at the center of a grid cell (anisotropic stride)."""
    return ImagePoint((col + 0.5) * intr.width / cols, (row + 0.5) * intr.height / rows)


def grid_cell_of(pixel: ImagePoint, intr: CameraIntrinsics, rows: int, cols: int) -> tuple[int, int]:
    row = min(rows - 1, max(0, int(pixel.v * rows / intr.height)))
    col = min(cols - 1, max(0, int(pixel.u * cols / intr.width)))
    return row, col


def encode_grid(
    annotation: FrameAnnotation,
    intr: CameraIntrinsics,
    rows: int = DEFAULT_GRID_ROWS,
    cols: int = DEFAULT_GRID_COLS,
) -> GridDetectionMap:
    """Training-target grid for a frame: confidence 1 plus depth per neighbor.

    Two neighbors falling in one cell keep only the nearer depth, mirroring
    the single-slot-per-cell limitation of the grid detector.
    """
    gmap = GridDetectionMap.zeros(rows, cols)
    for neighbor in annotation.neighbors:
        row, col = grid_cell_of(neighbor.center, intr, rows, cols)
        depth = float(neighbor.rel_position[2])
        if gmap.confidence[row, col] > 0.0 and gmap.depth[row, col] <= depth:
            continue
        gmap.confidence[row, col] = 1.0
        gmap.depth[row, col] = depth
    return gmap


def decode_grid(
    gmap: GridDetectionMap,
    intr: CameraIntrinsics,
    threshold: float = DEFAULT_GRID_THRESHOLD,
) -> list[PositionEstimate]:
    """Back-project every thresholded 8-connected confidence peak."""
    conf = gmap.confidence
    estimates = []
    for row in range(gmap.rows):
        for col in range(gmap.cols):
            value = conf[row, col]
            if value < threshold:
                continue
            window = conf[
                max(0, row - 1) : min(gmap.rows, row + 2),
                max(0, col - 1) : min(gmap.cols, col + 2),
            ]
            if value < window.max():
                continue
            center = grid_cell_center(row, col, intr, gmap.rows, gmap.cols)
            position = back_project(center, float(gmap.depth[row, col]), intr)
            estimates.append(PositionEstimate(position=position, source="grid_decoder"))
    return estimates


def oracle_estimates(annotation: FrameAnnotation) -> list[PositionEstimate]:
    """Perfect perception: the annotated relative positions, unchanged."""
    return [
        PositionEstimate(position=n.rel_position.copy(), source="oracle")
        for n in annotation.neighbors
    ]


def _frame_rng(noise: NoiseModel, frame_id: int) -> np.random.Generator:
    return np.random.default_rng([noise.rng_seed, frame_id])


def simulate_detector(
    annotation: FrameAnnotation,
    noise: NoiseModel,
    intr: CameraIntrinsics,
    mode: str,
    radius: float = 0.05,
    rows: int = DEFAULT_GRID_ROWS,
    cols: int = DEFAULT_GRID_COLS,
):
    """Noisy detector output for one annotated frame.

    Returns a list of BoxDetection in box mode or a GridDetectionMap in grid
    mode. All randomness is derived from (rng_seed, frame_id), so repeated
    calls are bit-identical. `radius` sizes the fabricated false-positive
    boxes.
    """
    if mode not in ("box", "grid"):
        raise ValueError(f"unknown detector mode {mode!r}")
    rng = _frame_rng(noise, annotation.frame_id)

    kept = [n for n in annotation.neighbors if rng.random() >= noise.miss_rate]
    n_false = int(rng.poisson(noise.false_positive_rate))

    if mode == "box":
        detections = []
        for neighbor in kept:
            b = neighbor.bbox
            du = rng.normal(0.0, noise.pixel_sigma, size=4)
            u_lo, u_hi = sorted((b.u_min + du[0], b.u_max + du[1]))
            v_lo, v_hi = sorted((b.v_min + du[2], b.v_max + du[3]))
            detections.append(
                BoxDetection(
                    bbox=BoundingBox(u_lo, v_lo, u_hi, v_hi),
                    confidence=float(rng.uniform(*noise.true_confidence)),
                )
            )
        for _ in range(n_false):
            depth = rng.uniform(0.5, 3.0)
            half_w = intr.fx * radius / depth
            half_h = intr.fy * radius / depth
            cu = rng.uniform(half_w, intr.width - half_w)
            cv = rng.uniform(half_h, intr.height - half_h)
            detections.append(
                BoxDetection(
                    bbox=BoundingBox(cu - half_w, cv - half_h, cu + half_w, cv + half_h),
                    confidence=float(rng.uniform(*noise.false_confidence)),
                )
            )
        return detections

    gmap = GridDetectionMap.zeros(rows, cols)
    for neighbor in kept:
        center = neighbor.center.as_array() + rng.normal(0.0, noise.pixel_sigma, size=2)
        center = ImagePoint(
            float(np.clip(center[0], 0.0, intr.width - 1e-9)),
            float(np.clip(center[1], 0.0, intr.height - 1e-9)),
        )
        depth = float(neighbor.rel_position[2]) * (1.0 + rng.normal(0.0, noise.depth_rel_sigma))
        depth = max(depth, 1e-3)
        row, col = grid_cell_of(center, intr, rows, cols)
        if gmap.confidence[row, col] > 0.0 and gmap.depth[row, col] <= depth:
            continue
        gmap.confidence[row, col] = float(rng.uniform(*noise.true_confidence))
        gmap.depth[row, col] = depth
    for _ in range(n_false):
        row = int(rng.integers(0, rows))
        col = int(rng.integers(0, cols))
        if gmap.confidence[row, col] > 0.0:
            continue
        gmap.confidence[row, col] = float(rng.uniform(*noise.false_confidence))
        gmap.depth[row, col] = float(rng.uniform(0.5, 3.0))
    return gmap


def decode_detections(
    output,
    intr: CameraIntrinsics,
    radius: float = 0.05,
    threshold: float = DEFAULT_GRID_THRESHOLD,
) -> list[PositionEstimate]:
    """Decode either detector output form into position estimates."""
    if isinstance(output, GridDetectionMap):
        return decode_grid(output, intr, threshold)
    estimates = []
    for det in output:
        try:
            estimates.append(decode_box(det, intr, radius))
        except DegenerateBox:
            continue
    return estimates
