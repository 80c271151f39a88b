"""Detection decoding and the simulated detector."""

import math

import numpy as np
import pytest

from spincam.camera import (
    BoundingBox,
    CameraIntrinsics,
    CameraModel,
    FrameAnnotation,
    ImagePoint,
    NeighborAnnotation,
    annotate_frame,
    project,
)
from spincam.errors import DegenerateBox
from spincam.geometry import Pose, Quaternion, RigidTransform, RobotGeometry
from spincam.perception import (
    BoxDetection,
    GridDetectionMap,
    NoiseModel,
    decode_box,
    decode_detections,
    decode_grid,
    decode_rays,
    encode_grid,
    simulate_detector,
    sphere_distance_from_angle,
)


def sphere_silhouette_bbox(center, radius: float, intr: CameraIntrinsics) -> BoundingBox:
    """Exact pixel bbox of a sphere whose center lies in the y=0 camera plane.

    Horizontal extremes come from rotating the center direction by the tangent
    half-angle inside that plane; vertical extremes from maximizing |y/z| over
    the tangent cone.
    """
    c = np.asarray(center, dtype=float)
    assert c[1] == 0.0, "helper assumes the sphere center lies in the y=0 plane"
    distance = float(np.linalg.norm(c))
    beta = math.asin(radius / distance)
    theta = math.atan2(c[0], c[2])
    u_min = intr.fx * math.tan(theta - beta) + intr.cx
    u_max = intr.fx * math.tan(theta + beta) + intr.cx
    c_hat = c / distance
    e1 = np.array([math.cos(theta), 0.0, -math.sin(theta)])
    e2 = np.array([0.0, 1.0, 0.0])
    best = 0.0
    for phi in np.linspace(0.0, 2.0 * math.pi, 4001):
        ray = c_hat * math.cos(beta) + (e1 * math.cos(phi) + e2 * math.sin(phi)) * math.sin(beta)
        best = max(best, abs(ray[1] / ray[2]))
    return BoundingBox(u_min, intr.cy - intr.fy * best, u_max, intr.cy + intr.fy * best)


class TestSphereDistance:
    def test_half_pi_subtense(self):
        # csc(pi/2) == 1: the sphere center sits one radius away
        assert sphere_distance_from_angle(math.pi, 0.1) == pytest.approx(0.1, abs=1e-15)

    def test_small_angle_value(self):
        assert sphere_distance_from_angle(0.1, 0.05) == pytest.approx(
            0.05 / math.sin(0.05), abs=1e-12
        )

    def test_zero_angle_degenerate(self):
        with pytest.raises(DegenerateBox):
            sphere_distance_from_angle(0.0, 0.1)

    def test_distance_decreases_with_angle(self):
        angles = np.linspace(0.01, math.pi, 200)
        distances = [sphere_distance_from_angle(a, 0.05) for a in angles]
        assert all(d1 > d2 for d1, d2 in zip(distances, distances[1:]))


class TestDecodeBox:
    @pytest.mark.parametrize(
        "center,radius",
        [((0.0, 0.0, 2.0), 0.1), ((0.3, 0.0, 1.5), 0.05), ((-0.5, 0.0, 4.0), 0.05),
         ((0.0, 0.0, 0.5), 0.05)],
    )
    def test_exact_on_analytic_sphere_silhouette(self, center, radius, intr):
        bbox = sphere_silhouette_bbox(center, radius, intr)
        estimate = decode_box(BoxDetection(bbox=bbox, confidence=1.0), intr, radius)
        np.testing.assert_allclose(estimate.position, center, atol=1e-6)
        assert np.linalg.norm(estimate.position) == pytest.approx(
            np.linalg.norm(center), abs=1e-6
        )

    def test_zero_width_box_degenerate(self, intr):
        det = BoxDetection(bbox=BoundingBox(100.0, 90.0, 100.0, 110.0), confidence=0.9)
        with pytest.raises(DegenerateBox):
            decode_box(det, intr, 0.05)

    def test_antipodal_rays_degenerate(self):
        with pytest.raises(DegenerateBox):
            decode_rays(np.array([1.0, 0.0, 0.0]), np.array([-1.0, 0.0, 0.0]), 0.1)

    def test_positive_depth_always(self, intr):
        rng = np.random.default_rng(0)
        for _ in range(200):
            u1, u2 = np.sort(rng.uniform(1.0, 319.0, 2))
            v1, v2 = np.sort(rng.uniform(1.0, 319.0, 2))
            if u2 - u1 < 1e-6:
                continue
            det = BoxDetection(bbox=BoundingBox(u1, v1, u2, v2), confidence=0.5)
            assert decode_box(det, intr, 0.05).position[2] > 0.0


def annotation_with(neighbors, frame_id: int = 0) -> FrameAnnotation:
    return FrameAnnotation(frame_id=frame_id, timestamp=0.0, ego_id="r0", neighbors=neighbors)


def neighbor_at(position, intr, robot_id="r1") -> NeighborAnnotation:
    position = np.asarray(position, dtype=float)
    center = project(position, intr)
    return NeighborAnnotation(
        robot_id=robot_id,
        rel_position=position,
        center=center,
        bbox=BoundingBox(center.u - 2.0, center.v - 2.0, center.u + 2.0, center.v + 2.0),
    )


class TestEncodeGrid:
    def test_empty_annotation_gives_zero_map(self, intr):
        gmap = encode_grid(annotation_with([]), intr)
        assert not gmap.confidence.any() and not gmap.depth.any()

    def test_single_neighbor_at_principal_point(self, intr):
        gmap = encode_grid(annotation_with([neighbor_at((0, 0, 1.5), intr)]), intr, rows=5, cols=5)
        assert gmap.confidence[2, 2] == 1.0
        assert gmap.depth[2, 2] == 1.5
        assert gmap.confidence.sum() == 1.0

    def test_cell_collision_keeps_nearer_depth(self, intr):
        near = neighbor_at((0.0, 0.0, 1.0), intr, "r1")
        far = neighbor_at((0.001, 0.0, 2.0), intr, "r2")
        for order in ([near, far], [far, near]):
            gmap = encode_grid(annotation_with(order), intr, rows=5, cols=5)
            assert gmap.depth[2, 2] == 1.0
            assert gmap.confidence.sum() == 1.0


class TestDecodeGrid:
    def test_all_zero_confidence_gives_empty(self, intr):
        assert decode_grid(GridDetectionMap.zeros(), intr) == []

    def test_center_cell_maps_to_principal_axis(self, intr):
        gmap = GridDetectionMap.zeros(5, 5)
        gmap.confidence[2, 2] = 1.0
        gmap.depth[2, 2] = 2.0
        (est,) = decode_grid(gmap, intr)
        np.testing.assert_allclose(est.position, [0.0, 0.0, 2.0], atol=1e-12)

    def test_two_separated_peaks_keep_exact_depths(self, intr):
        near = neighbor_at((-0.5, 0.0, 1.0), intr, "r1")
        far = neighbor_at((0.5, 0.2, 3.0), intr, "r2")
        gmap = encode_grid(annotation_with([near, far]), intr)
        estimates = decode_grid(gmap, intr)
        assert sorted(e.position[2] for e in estimates) == [1.0, 3.0]

    def test_threshold_filters_weak_cells(self, intr):
        gmap = GridDetectionMap.zeros(5, 5)
        gmap.confidence[1, 1] = 0.4
        gmap.depth[1, 1] = 2.0
        assert decode_grid(gmap, intr, threshold=0.5) == []
        assert len(decode_grid(gmap, intr, threshold=0.3)) == 1

    def test_round_trip_within_half_cell(self, intr):
        rng = np.random.default_rng(1)
        rows, cols = 28, 40
        bound_x = (intr.width / cols / 2.0) / intr.fx
        bound_y = (intr.height / rows / 2.0) / intr.fy
        for trial in range(100):
            neighbors = []
            for k in range(int(rng.integers(1, 4))):
                z = rng.uniform(0.5, 4.0)
                x = rng.uniform(-0.85, 0.85) * z * (intr.cx / intr.fx)
                y = rng.uniform(-0.85, 0.85) * z * (intr.cy / intr.fy)
                neighbors.append(neighbor_at((x, y, z), intr, f"r{k + 1}"))
            gmap = encode_grid(annotation_with(neighbors, trial), intr, rows, cols)
            for estimate in decode_grid(gmap, intr):
                deltas = [np.linalg.norm(estimate.position - n.rel_position) for n in neighbors]
                closest = neighbors[int(np.argmin(deltas))]
                z = closest.rel_position[2]
                assert estimate.position[2] == z  # depth channel is exact
                assert abs(estimate.position[0] - closest.rel_position[0]) <= z * bound_x + 1e-12
                assert abs(estimate.position[1] - closest.rel_position[1]) <= z * bound_y + 1e-12


class TestSimulateDetector:
    def zero_noise(self) -> NoiseModel:
        return NoiseModel(pixel_sigma=0.0, depth_rel_sigma=0.0, miss_rate=0.0,
                          false_positive_rate=0.0, rng_seed=0)

    def cube_annotation(self, intr) -> FrameAnnotation:
        # axis-aligned cubic robot so the sphere model matches the box width
        geom = RobotGeometry(half_extents=np.array([0.05, 0.05, 0.05]), sphere_radius=0.05)
        camera = CameraModel(intrinsics=intr, extrinsic=RigidTransform.identity(),
                             pitch_label="up")
        ego = Pose(0.0, RigidTransform.identity())
        neighbor = Pose(0.0, RigidTransform(Quaternion.identity(), np.array([0.2, -0.1, 2.0])))
        return annotate_frame(ego, {"r1": neighbor}, camera, geom)

    def test_zero_noise_box_mode_is_identity(self, intr):
        # sphere-silhouette box passes through untouched and decodes exactly
        center = np.array([0.3, 0.0, 2.0])
        bbox = sphere_silhouette_bbox(center, 0.05, intr)
        annotation = annotation_with(
            [NeighborAnnotation("r1", center, project(center, intr), bbox)]
        )
        detections = simulate_detector(annotation, self.zero_noise(), intr, "box", radius=0.05)
        (estimate,) = decode_detections(detections, intr, radius=0.05)
        np.testing.assert_allclose(estimate.position, center, atol=1e-6)

    def test_zero_noise_box_mode_on_cube_annotation(self, intr):
        # cube corners give a wider box than the sphere model assumes, so the
        # decoded position carries a model error of a couple of half-extents
        annotation = self.cube_annotation(intr)
        detections = simulate_detector(annotation, self.zero_noise(), intr, "box", radius=0.05)
        (estimate,) = decode_detections(detections, intr, radius=0.05)
        assert np.linalg.norm(estimate.position - [0.2, -0.1, 2.0]) < 0.25

    def test_zero_noise_grid_mode_decodes_to_truth(self, intr):
        annotation = self.cube_annotation(intr)
        gmap = simulate_detector(annotation, self.zero_noise(), intr, "grid")
        (estimate,) = decode_detections(gmap, intr)
        truth = annotation.neighbors[0].rel_position
        assert estimate.position[2] == truth[2]
        assert np.linalg.norm(estimate.position - truth) < truth[2] * (8.0 / 2.0) / intr.fx * 1.5

    def test_full_miss_rate_drops_everything(self, intr):
        annotation = self.cube_annotation(intr)
        noise = NoiseModel(miss_rate=1.0, false_positive_rate=0.0, rng_seed=3)
        assert simulate_detector(annotation, noise, intr, "box") == []
        gmap = simulate_detector(annotation, noise, intr, "grid")
        assert not gmap.confidence.any()

    def test_fixed_seed_bit_reproducible(self, intr):
        annotation = self.cube_annotation(intr)
        noise = NoiseModel(rng_seed=11, false_positive_rate=1.0)
        first = simulate_detector(annotation, noise, intr, "box")
        second = simulate_detector(annotation, noise, intr, "box")
        assert len(first) == len(second)
        for a, b in zip(first, second):
            assert a.bbox == b.bbox and a.confidence == b.confidence
        g1 = simulate_detector(annotation, noise, intr, "grid")
        g2 = simulate_detector(annotation, noise, intr, "grid")
        assert np.array_equal(g1.confidence, g2.confidence)
        assert np.array_equal(g1.depth, g2.depth)

    def test_different_frames_draw_differently(self, intr):
        annotation = self.cube_annotation(intr)
        shifted = annotation_with(annotation.neighbors, frame_id=1)
        noise = NoiseModel(rng_seed=11, pixel_sigma=2.0)
        a = simulate_detector(annotation, noise, intr, "box")
        b = simulate_detector(shifted, noise, intr, "box")
        assert a[0].bbox != b[0].bbox

    def test_false_positives_appear_on_empty_frames(self, intr):
        noise = NoiseModel(false_positive_rate=3.0, rng_seed=5)
        detections = simulate_detector(annotation_with([], 7), noise, intr, "box")
        assert detections, "expected Poisson false positives"
        for det in detections:
            assert noise.false_confidence[0] <= det.confidence <= noise.false_confidence[1]

    def test_pixel_sigma_two_gives_fraction_of_a_meter_error(self, intr):
        # 0.1 m robot at 2 m: +/-2 px jitter lands around 0.2 m Euclidean error
        geom = RobotGeometry(half_extents=np.full(3, 0.1), sphere_radius=0.1)
        bbox = sphere_silhouette_bbox((0.0, 0.0, 2.0), 0.1, intr)
        center = project((0.0, 0.0, 2.0), intr)
        annotation = annotation_with(
            [NeighborAnnotation("r1", np.array([0.0, 0.0, 2.0]), center, bbox)]
        )
        noise = NoiseModel(pixel_sigma=2.0, miss_rate=0.0, false_positive_rate=0.0, rng_seed=2)
        errors = []
        for frame_id in range(12_000):
            annotation.frame_id = frame_id
            detections = simulate_detector(annotation, noise, intr, "box", radius=0.1)
            estimates = decode_detections(detections, intr, radius=0.1)
            if estimates:
                errors.append(np.linalg.norm(estimates[0].position - [0.0, 0.0, 2.0]))
        mean_error = float(np.mean(errors))
        assert 0.05 < mean_error < 0.6

    def test_grid_outputs_have_positive_depth(self, intr):
        annotation = self.cube_annotation(intr)
        noise = NoiseModel(rng_seed=8, depth_rel_sigma=0.5, false_positive_rate=2.0)
        for frame_id in range(50):
            annotation.frame_id = frame_id
            gmap = simulate_detector(annotation, noise, intr, "grid")
            for estimate in decode_detections(gmap, intr):
                assert estimate.position[2] > 0.0

    def test_unknown_mode_rejected(self, intr):
        with pytest.raises(ValueError):
            simulate_detector(annotation_with([]), NoiseModel(), intr, "lidar")
