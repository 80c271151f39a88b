"""File formats and log ingestion.

Datasets and label files are newline-delimited JSON with an explicit schema
version in the leading header record; pose and gyro logs are plain CSV;
reports are CSV rows between '#' metadata lines. Floats serialize with
shortest round-trip decimal form, so read(write(x)) is exact.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .camera import (
    BoundingBox,
    CameraIntrinsics,
    CameraModel,
    FrameAnnotation,
    ImagePoint,
    NeighborAnnotation,
    camera_for_pitch,
)
from .downwash import DownwashFrameResult, EllipsoidSpec
from .errors import (
    InsufficientOverlap,
    InvalidConfig,
    NonFiniteValue,
    ParseError,
    VersionMismatch,
)
from .geometry import (
    DEFAULT_ROBOT_GEOMETRY,
    Pose,
    PoseTrack,
    Quaternion,
    RigidTransform,
    RobotGeometry,
)
from .metrics import ConfusionCounts, classification_metrics
from .perception import NoiseModel, encode_grid
from .scenarios import ScenarioConfig

SCHEMA_VERSION = 1

POSE_LOG_COLUMNS = ["robot_id", "t", "x", "y", "z", "qw", "qx", "qy", "qz"]
GYRO_LOG_COLUMNS = ["t", "gx", "gy", "gz"]


# ---------------------------------------------------------------------------
# JSON encoding helpers

def _quaternion_obj(q: Quaternion) -> list[float]:
    return [float(q.w), float(q.x), float(q.y), float(q.z)]


def _transform_obj(t: RigidTransform) -> dict:
    return {"q": _quaternion_obj(t.rotation), "t": [float(v) for v in t.translation]}


def _transform_from(obj: dict) -> RigidTransform:
    return RigidTransform(Quaternion(*obj["q"]), np.array(obj["t"], dtype=float))


def _pose_obj(pose: Pose) -> dict:
    return {"time": float(pose.timestamp), **_transform_obj(pose.transform)}


def _pose_from(obj: dict) -> Pose:
    return Pose(float(obj["time"]), _transform_from(obj))


def _camera_obj(camera: CameraModel) -> dict:
    intr = camera.intrinsics
    return {
        "intrinsics": {
            "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
            "k1": intr.k1, "width": intr.width, "height": intr.height,
        },
        "extrinsic": _transform_obj(camera.extrinsic),
        "pitch_label": camera.pitch_label,
    }


def _camera_from(obj: dict) -> CameraModel:
    return CameraModel(
        intrinsics=CameraIntrinsics(**obj["intrinsics"]),
        extrinsic=_transform_from(obj["extrinsic"]),
        pitch_label=obj["pitch_label"],
    )


def _geometry_obj(geom: RobotGeometry) -> dict:
    return {
        "half_extents": [float(v) for v in geom.half_extents],
        "sphere_radius": float(geom.sphere_radius),
    }


def _geometry_from(obj: dict) -> RobotGeometry:
    return RobotGeometry(np.array(obj["half_extents"], dtype=float), obj["sphere_radius"])


def _neighbor_obj(n: NeighborAnnotation) -> dict:
    return {
        "robot_id": n.robot_id,
        "rel_position": [float(v) for v in n.rel_position],
        "center": [float(n.center.u), float(n.center.v)],
        "bbox": [float(n.bbox.u_min), float(n.bbox.v_min), float(n.bbox.u_max), float(n.bbox.v_max)],
    }


def _neighbor_from(obj: dict) -> NeighborAnnotation:
    return NeighborAnnotation(
        robot_id=obj["robot_id"],
        rel_position=np.array(obj["rel_position"], dtype=float),
        center=ImagePoint(*obj["center"]),
        bbox=BoundingBox(*obj["bbox"]),
    )


def _annotation_obj(ann: FrameAnnotation) -> dict:
    return {
        "frame_id": ann.frame_id,
        "timestamp": float(ann.timestamp),
        "ego_id": ann.ego_id,
        "neighbors": [_neighbor_obj(n) for n in ann.neighbors],
    }


def _annotation_from(obj: dict) -> FrameAnnotation:
    return FrameAnnotation(
        frame_id=int(obj["frame_id"]),
        timestamp=float(obj["timestamp"]),
        ego_id=obj["ego_id"],
        neighbors=[_neighbor_from(n) for n in obj["neighbors"]],
    )


# ---------------------------------------------------------------------------
# Dataset files

@dataclass(eq=False)
class FrameRecord:
    """One frame: its annotation plus the world poses of every robot."""

    annotation: FrameAnnotation
    poses: dict[str, Pose]


@dataclass(eq=False)
class Dataset:
    camera: CameraModel
    geometry: RobotGeometry
    ellipsoid: EllipsoidSpec
    frames: list[FrameRecord]


def write_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = {
            "record": "header",
            "schema_version": SCHEMA_VERSION,
            "camera": _camera_obj(dataset.camera),
            "geometry": _geometry_obj(dataset.geometry),
            "ellipsoid": [dataset.ellipsoid.rx, dataset.ellipsoid.ry, dataset.ellipsoid.rz],
            "frame_count": len(dataset.frames),
        }
        fh.write(json.dumps(header) + "\n")
        for record in dataset.frames:
            obj = {
                "record": "frame",
                **_annotation_obj(record.annotation),
                "poses": {rid: _pose_obj(p) for rid, p in sorted(record.poses.items())},
            }
            fh.write(json.dumps(obj) + "\n")


def _parse_json_line(line: str, line_no: int, path) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{line_no}: invalid record: {exc}") from exc
    if not isinstance(obj, dict) or "record" not in obj:
        raise ParseError(f"{path}:{line_no}: expected an object with a 'record' field")
    return obj


def read_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}:1: empty dataset file (missing header record)")
    header = _parse_json_line(lines[0], 1, path)
    if header.get("record") != "header":
        raise ParseError(f"{path}:1: first record must be the dataset header")
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise VersionMismatch(f"{path}: schema_version {version!r}, supported {SCHEMA_VERSION}")
    frames = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        obj = _parse_json_line(line, line_no, path)
        if obj["record"] != "frame":
            raise ParseError(f"{path}:{line_no}: unexpected record type {obj['record']!r}")
        try:
            annotation = _annotation_from(obj)
            poses = {rid: _pose_from(p) for rid, p in obj["poses"].items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{line_no}: malformed frame record: {exc}") from exc
        frames.append(FrameRecord(annotation=annotation, poses=poses))
    expected = header.get("frame_count")
    if expected is not None and expected != len(frames):
        raise ParseError(
            f"{path}: header announces {expected} frames but file holds {len(frames)}"
        )
    return Dataset(
        camera=_camera_from(header["camera"]),
        geometry=_geometry_from(header["geometry"]),
        ellipsoid=EllipsoidSpec(*header["ellipsoid"]),
        frames=frames,
    )


# ---------------------------------------------------------------------------
# Label export

def export_labels(
    annotations: Sequence[FrameAnnotation],
    mode: str,
    path,
    intr: CameraIntrinsics | None = None,
    rows: int = 28,
    cols: int = 40,
) -> None:
    """Per-frame training labels: box centers or sparse grid targets."""
    if mode not in ("bbox", "grid"):
        raise ValueError(f"unknown label mode {mode!r}")
    if mode == "grid" and intr is None:
        raise ValueError("grid labels need camera intrinsics for the stride mapping")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = {"record": "header", "schema_version": SCHEMA_VERSION, "mode": mode}
        if mode == "grid":
            header["rows"] = rows
            header["cols"] = cols
        fh.write(json.dumps(header) + "\n")
        for ann in annotations:
            if mode == "bbox":
                obj = {
                    "record": "labels",
                    "frame_id": ann.frame_id,
                    "labels": [_neighbor_obj(n) for n in ann.neighbors],
                }
            else:
                gmap = encode_grid(ann, intr, rows, cols)
                occupied = np.argwhere(gmap.confidence > 0.0)
                obj = {
                    "record": "labels",
                    "frame_id": ann.frame_id,
                    "cells": [
                        [int(r), int(c), float(gmap.confidence[r, c]), float(gmap.depth[r, c])]
                        for r, c in occupied
                    ],
                }
            fh.write(json.dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# Pose logs (CSV)

def ingest_pose_log(path) -> list[PoseTrack]:
    """Read a motion-capture style CSV into per-robot pose tracks."""
    rows_by_robot: dict[str, list[tuple[float, np.ndarray, Quaternion]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != POSE_LOG_COLUMNS:
            raise ParseError(
                f"{path}: header row must be '{','.join(POSE_LOG_COLUMNS)}'"
            )
        for line_no, row in enumerate(reader, start=2):
            try:
                values = [float(row[c]) for c in POSE_LOG_COLUMNS[1:]]
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{line_no}: non-numeric field: {exc}") from exc
            if not all(math.isfinite(v) for v in values):
                raise NonFiniteValue(f"{path}:{line_no}: non-finite value")
            t, x, y, z, qw, qx, qy, qz = values
            norm = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
            if norm < 1e-6:
                raise NonFiniteValue(f"{path}:{line_no}: quaternion norm is zero")
            if abs(norm - 1.0) > 1e-3:
                warnings.warn(
                    f"{path}:{line_no}: quaternion norm {norm:.6f} deviates from 1; normalizing",
                    stacklevel=2,
                )
            q = Quaternion(qw, qx, qy, qz).normalized()
            rows_by_robot.setdefault(row["robot_id"], []).append((t, np.array([x, y, z]), q))
    tracks = []
    for robot_id in sorted(rows_by_robot):
        entries = sorted(rows_by_robot[robot_id], key=lambda e: e[0])
        times = [e[0] for e in entries]
        if len(set(times)) != len(times):
            raise ParseError(f"{path}: robot {robot_id!r} has duplicate timestamps")
        samples = [Pose(t, RigidTransform(q, p)) for t, p, q in entries]
        tracks.append(PoseTrack(robot_id=robot_id, samples=samples))
    return tracks


def write_pose_log(tracks: Sequence[PoseTrack], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(POSE_LOG_COLUMNS) + "\n")
        for track in tracks:
            for pose in track.samples:
                q = pose.orientation
                p = pose.position
                fields = [track.robot_id] + [
                    repr(float(v)) for v in (pose.timestamp, p[0], p[1], p[2], q.w, q.x, q.y, q.z)
                ]
                fh.write(",".join(fields) + "\n")


# ---------------------------------------------------------------------------
# Gyro sequences and time-offset estimation

@dataclass(eq=False)
class GyroSequence:
    """Timestamped body angular-rate samples from one robot."""

    timestamps: np.ndarray
    rates: np.ndarray  # (N, 3) rad/s

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.rates = np.asarray(self.rates, dtype=float)
        if self.timestamps.ndim != 1 or self.rates.shape != (len(self.timestamps), 3):
            raise ValueError("rates must be (N, 3) matching N timestamps")
        if len(self.timestamps) < 2 or not np.all(np.diff(self.timestamps) > 0.0):
            raise ValueError("timestamps must be strictly increasing with >= 2 samples")

    @property
    def span(self) -> float:
        return float(self.timestamps[-1] - self.timestamps[0])


def read_gyro_log(path) -> GyroSequence:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != GYRO_LOG_COLUMNS:
            raise ParseError(f"{path}: header row must be '{','.join(GYRO_LOG_COLUMNS)}'")
        times, rates = [], []
        for line_no, row in enumerate(reader, start=2):
            try:
                values = [float(row[c]) for c in GYRO_LOG_COLUMNS]
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{line_no}: non-numeric field: {exc}") from exc
            if not all(math.isfinite(v) for v in values):
                raise NonFiniteValue(f"{path}:{line_no}: non-finite value")
            times.append(values[0])
            rates.append(values[1:])
    try:
        return GyroSequence(np.array(times), np.array(rates))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_gyro_log(seq: GyroSequence, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(GYRO_LOG_COLUMNS) + "\n")
        for t, (gx, gy, gz) in zip(seq.timestamps, seq.rates):
            fh.write(",".join(repr(float(v)) for v in (t, gx, gy, gz)) + "\n")


def _offset_error(a: GyroSequence, b: GyroSequence, delta: float, min_overlap: float) -> float:
    """Mean squared rate difference of a(t) vs b(t + delta) over the overlap."""
    lo = max(a.timestamps[0], b.timestamps[0] - delta)
    hi = min(a.timestamps[-1], b.timestamps[-1] - delta)
    if hi - lo < min_overlap:
        return math.inf
    mask = (a.timestamps >= lo) & (a.timestamps <= hi)
    if mask.sum() < 2:
        return math.inf
    query = a.timestamps[mask] + delta
    total = 0.0
    for axis in range(3):
        resampled = np.interp(query, b.timestamps, b.rates[:, axis])
        total += float(np.mean((a.rates[mask, axis] - resampled) ** 2))
    return total


def estimate_time_offset(a: GyroSequence, b: GyroSequence, search_window: float) -> float:
    """Offset delta minimizing the squared error between a(t) and b(t + delta).

    The discrete minimum over a sample-period grid is refined by parabolic
    interpolation, giving sub-sample resolution on smooth signals.
    """
    step = min(
        float(np.median(np.diff(a.timestamps))),
        float(np.median(np.diff(b.timestamps))),
    )
    min_overlap = 0.5 * min(a.span, b.span)
    count = int(math.floor(search_window / step + 1e-9))
    deltas = np.arange(-count, count + 1) * step
    errors = np.array([_offset_error(a, b, float(d), min_overlap) for d in deltas])
    if not np.any(np.isfinite(errors)):
        raise InsufficientOverlap(
            f"sequences overlap less than half their span within +/-{search_window} s"
        )
    best = int(np.nanargmin(np.where(np.isfinite(errors), errors, np.nan)))
    delta = float(deltas[best])
    if 0 < best < len(deltas) - 1:
        e_lo, e_mid, e_hi = errors[best - 1], errors[best], errors[best + 1]
        denom = e_lo - 2.0 * e_mid + e_hi
        if math.isfinite(e_lo) and math.isfinite(e_hi) and denom > 0.0:
            delta += 0.5 * step * (e_lo - e_hi) / denom
    return delta


# ---------------------------------------------------------------------------
# Reports

def write_report(path, results: Sequence[DownwashFrameResult]) -> ConfusionCounts:
    """Write per-frame rows plus a precision/recall/F1 footer; returns counts."""
    counts = ConfusionCounts.from_pairs((r.gt_downwash, r.pred_downwash) for r in results)
    precision, recall, f1 = classification_metrics(counts)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# spincam downwash report schema_version={SCHEMA_VERSION}\n")
        fh.write("frame_id,gt_downwash,pred_downwash\n")
        for r in results:
            fh.write(f"{r.frame_id},{int(r.gt_downwash)},{int(r.pred_downwash)}\n")
        fh.write(
            f"# precision={precision:.4f} recall={recall:.4f} f1={f1:.4f}"
            f" tp={counts.tp} fp={counts.fp} fn={counts.fn} tn={counts.tn}\n"
        )
    return counts


def read_report(path) -> tuple[list[DownwashFrameResult], dict[str, float]]:
    results = []
    summary: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    key, value = token.split("=", 1)
                    try:
                        summary[key] = float(value)
                    except ValueError:
                        pass
            continue
        if line.startswith("frame_id"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}:{line_no}: expected 'frame_id,gt,pred' row")
        try:
            results.append(
                DownwashFrameResult(int(parts[0]), bool(int(parts[1])), bool(int(parts[2])))
            )
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: {exc}") from exc
    return results, summary


# ---------------------------------------------------------------------------
# Run configuration files

@dataclass(eq=False)
class SimulationSpec:
    """Everything a simulate run needs: scenario, camera, robot geometry."""

    scenario: ScenarioConfig
    camera: CameraModel
    geometry: RobotGeometry


_SCENARIO_KEYS = {
    "kind", "num_robots", "duration", "yaw_rate", "camera_pitch", "frame_rate",
    "sample_rate", "arena_min", "arena_max", "rng_seed", "waypoint_count",
    "max_speed", "accel", "hover_heights", "orbit_radius", "orbit_height",
    "orbit_speed", "swap_start_a", "swap_start_b",
}
_CAMERA_KEYS = {"fx", "fy", "cx", "cy", "k1", "width", "height", "camera_translation"}
_TUPLE_KEYS = {"arena_min", "arena_max", "hover_heights", "swap_start_a", "swap_start_b"}


def load_simulation_config(path) -> SimulationSpec:
    """Parse the flat key-value run configuration (JSON object)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidConfig(f"{path}: top level must be an object")
    known = _SCENARIO_KEYS | _CAMERA_KEYS | {"ellipsoid", "half_extents", "sphere_radius"}
    unknown = set(raw) - known
    if unknown:
        raise InvalidConfig(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("kind", "num_robots", "duration"):
        if key not in raw:
            raise InvalidConfig(f"{path}: missing required key {key!r}")

    scenario_kwargs = {}
    for key in _SCENARIO_KEYS & set(raw):
        value = raw[key]
        scenario_kwargs[key] = tuple(value) if key in _TUPLE_KEYS else value
    if "ellipsoid" in raw:
        scenario_kwargs["ellipsoid"] = EllipsoidSpec(*raw["ellipsoid"])
    try:
        scenario = ScenarioConfig(**scenario_kwargs)
        scenario.validate()

        intr_kwargs = {k: raw[k] for k in _CAMERA_KEYS & set(raw) if k != "camera_translation"}
        base = DEFAULT_INTRINSICS_DICT | intr_kwargs
        intrinsics = CameraIntrinsics(**base)
        camera = camera_for_pitch(
            scenario.camera_pitch, intrinsics, raw.get("camera_translation", (0.0, 0.0, 0.0))
        )

        geometry = DEFAULT_ROBOT_GEOMETRY
        if "half_extents" in raw or "sphere_radius" in raw:
            geometry = RobotGeometry(
                half_extents=np.array(
                    raw.get("half_extents", DEFAULT_ROBOT_GEOMETRY.half_extents), dtype=float
                ),
                sphere_radius=raw.get("sphere_radius", DEFAULT_ROBOT_GEOMETRY.sphere_radius),
            )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidConfig):
            raise
        raise InvalidConfig(f"{path}: {exc}") from exc
    return SimulationSpec(scenario=scenario, camera=camera, geometry=geometry)


DEFAULT_INTRINSICS_DICT = {
    "fx": 170.0, "fy": 170.0, "cx": 160.0, "cy": 160.0,
    "k1": 0.0, "width": 320, "height": 320,
}

_NOISE_KEYS = {
    "pixel_sigma", "depth_rel_sigma", "miss_rate", "false_positive_rate",
    "true_confidence", "false_confidence", "rng_seed",
}


def load_noise_model(path) -> NoiseModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: not valid JSON: {exc}") from exc
    unknown = set(raw) - _NOISE_KEYS
    if unknown:
        raise InvalidConfig(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("true_confidence", "false_confidence"):
        if key in raw:
            raw[key] = tuple(raw[key])
    try:
        return NoiseModel(**raw)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"{path}: {exc}") from exc
