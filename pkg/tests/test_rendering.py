import numpy as np
import pytest
from PIL import Image

from mvp_pclip.data import SyntheticSpec, generate
from mvp_pclip.geometry import (CameraIntrinsics, PointCloud, RigidTransform, ViewRig, back_project,
                                generate_view_rig, normalize_cloud, project_points, splat_tolerance)
from mvp_pclip.rendering import (NO_POINT, DepthView, coverage, export_views, normalize_depth,
                                 render_all, render_view)

K = CameraIntrinsics(100.0, 100.0, 112.0, 112.0, 224, 224)
AXIS_RIG = ViewRig(K, (RigidTransform.identity(),))


def sphere_cloud(n=5000, seed=0):
    d = np.random.default_rng(seed).normal(size=(n, 3))
    return PointCloud(d / np.linalg.norm(d, axis=1, keepdims=True))


def test_single_point_raster():
    dv, corr = render_view(PointCloud([[0, 0, 2]]), AXIS_RIG, 0, splat_radius=0)
    assert dv.valid.sum() == 1 and dv.valid[112, 112]
    assert dv.depth[112, 112] == 2.0
    assert corr.pixel_to_point[112, 112] == 0
    assert corr.point_to_pixels == [[(0, 112, 112)]]


def test_z_buffer_nearest_wins():
    cloud = PointCloud([[0, 0, 3], [0, 0, 2]])
    dv, corr = render_view(cloud, AXIS_RIG, 0, splat_radius=0)
    assert dv.depth[112, 112] == 2.0
    assert corr.pixel_to_point[112, 112] == 1
    assert corr.point_to_pixels[0] == []


def test_equal_depth_tie_goes_to_lower_index():
    dv, corr = render_view(PointCloud([[0, 0, 2], [0, 0, 2]]), AXIS_RIG, 0, splat_radius=1)
    assert set(corr.pixel_to_point[dv.valid].tolist()) == {0}


def test_out_of_frame_point_absent():
    # u = 112 + 100 * x / 2 = width + 5 for x = 2.34
    cloud = PointCloud([[2.34, 0, 2], [0, 0, 2]])
    _, corr = render_view(cloud, AXIS_RIG, 0, splat_radius=1)
    assert corr.point_to_pixels[0] == []
    assert len(corr.point_to_pixels[1]) == 9


def test_behind_point_absent():
    _, corr = render_view(PointCloud([[0, 0, -1]]), AXIS_RIG, 0)
    assert (corr.pixel_to_point == NO_POINT).all()


def test_bad_view_index():
    with pytest.raises(IndexError):
        render_view(PointCloud([[0, 0, 1]]), AXIS_RIG, 1)


def _check_view(cloud, rig, k, splat):
    dv, corr = render_view(cloud, rig, k, splat)
    assert np.array_equal(dv.valid, dv.depth != 0)
    assert (dv.depth[dv.valid] > 1e-6).all()
    # bijection between the two encodings
    p2p = corr.point_to_pixels
    listed = {(r, c): i for i, pix in enumerate(p2p) for (_, r, c) in pix}
    rows, cols, pts = corr.pixels()
    assert listed == {(int(r), int(c)): int(i) for r, c, i in zip(rows, cols, pts)}
    # back-projection lands near the winning point
    for r, c, i in zip(rows, cols, pts):
        z = dv.depth[r, c]
        q = back_project(c + 0.5, r + 0.5, z, rig.intrinsics, rig.poses[k])
        assert np.linalg.norm(q - cloud.points[i]) <= splat_tolerance(z, rig.intrinsics, splat)
    # z-buffer optimality against brute force
    u, v, zz, ok = project_points(cloud.points, rig.intrinsics, rig.poses[k])
    for i in np.nonzero(ok)[0]:
        c0, r0 = int(np.floor(u[i])), int(np.floor(v[i]))
        for r in range(r0 - splat, r0 + splat + 1):
            for c in range(c0 - splat, c0 + splat + 1):
                if 0 <= r < dv.depth.shape[0] and 0 <= c < dv.depth.shape[1]:
                    assert dv.depth[r, c] <= zz[i]


def test_render_consistency_random_clouds():
    split = generate(SyntheticSpec(points_per_cloud=300, clouds_per_category=1, seed=5))
    rig = generate_view_rig(3, intrinsics=CameraIntrinsics.default(48))
    for cloud in list(split.train.values()) + list(split.test.values()):
        norm = normalize_cloud(cloud)
        for k in range(len(rig)):
            _check_view(norm, rig, k, 1)


def test_render_all_nine_views_and_normalisation():
    rig = generate_view_rig(9, intrinsics=CameraIntrinsics.default(64))
    rs = render_all(sphere_cloud(800), rig)
    assert len(rs) == 9 and len(rs.normalized) == 9
    for img, (dv, _) in zip(rs.normalized, rs.views):
        assert np.array_equal(img == 0, ~dv.valid)
        assert img.min() >= 0 and img.max() <= 1


def test_coverage_single_top_view_is_fraction():
    rig = generate_view_rig(3, intrinsics=CameraIntrinsics.default(64))
    one = ViewRig(rig.intrinsics, rig.poses[-1:])
    c = coverage(render_all(sphere_cloud(), one), 5000)
    assert 0.0 < c <= 1.0


def brute_force_coverage(cloud, rig):
    seen = set()
    for k in range(len(rig)):
        _, corr = render_view(cloud, rig, k)
        t = corr.pixel_to_point
        for r in range(t.shape[0]):
            for c in range(t.shape[1]):
                if t[r, c] != NO_POINT:
                    seen.add(int(t[r, c]))
    return len(seen) / len(cloud)


def test_sphere_coverage_grows_with_views():
    cloud = sphere_cloud()
    rig = generate_view_rig(9, intrinsics=CameraIntrinsics.default(64))
    covs = [coverage(render_all(cloud, rig.prefix(k)), len(cloud)) for k in range(1, 10)]
    assert covs[-1] > covs[0]
    assert all(b >= a for a, b in zip(covs, covs[1:]))
    assert covs[-1] == pytest.approx(brute_force_coverage(cloud, rig), abs=0)


def test_coverage_edge_cases():
    rig = generate_view_rig(1, intrinsics=CameraIntrinsics.default(64))
    rs = render_all(PointCloud([[0.0, 0.0, 0.0]]), rig)
    assert coverage(rs, 1) == 1.0
    far = PointCloud([[100.0, 100.0, 100.0]])
    assert coverage(render_all(far, rig), 1) == 0.0


def test_normalize_depth_rules():
    depth = np.array([[2.0, 4.0], [0.0, 0.0]])
    dv = DepthView(depth, depth > 0, 0)
    out = normalize_depth(dv, eps=0.0)
    np.testing.assert_array_equal(out, [[1.0, 0.0], [0.0, 0.0]])
    flat = DepthView(np.array([[3.0, 3.0], [0.0, 3.0]]), np.array([[1, 1], [0, 1]], bool), 0)
    np.testing.assert_array_equal(normalize_depth(flat), [[1, 1], [0, 1]])
    empty = DepthView(np.zeros((2, 2)), np.zeros((2, 2), bool), 0)
    np.testing.assert_array_equal(normalize_depth(empty), np.zeros((2, 2)))


def test_export_views_png(tmp_path):
    rig = generate_view_rig(2, intrinsics=CameraIntrinsics.default(32))
    rs = render_all(sphere_cloud(500), rig)
    paths = export_views(rs, tmp_path, "ball")
    assert (tmp_path / "ball_view0.png").exists() and (tmp_path / "ball_view1_mask.png").exists()
    img = np.array(Image.open(tmp_path / "ball_view0.png"))
    assert img.dtype == np.uint16
    np.testing.assert_allclose(img / 65535.0, rs.normalized[0], atol=1 / 65535)
    mask = np.array(Image.open(tmp_path / "ball_view0_mask.png"))
    assert mask.dtype == np.uint8 and np.array_equal(mask > 0, rs.views[0][0].valid)
    assert len(paths) == 4
