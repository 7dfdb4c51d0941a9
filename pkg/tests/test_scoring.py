import math

import numpy as np
import pytest
import torch

from mvp_pclip.encoder import DTYPE, BatchEncoding, EncoderConfig, FrozenBackbone, VisualPromptBank, encode_images
from mvp_pclip.geometry import CameraIntrinsics, PointCloud, generate_view_rig, normalize_cloud
from mvp_pclip.rendering import CorrespondenceMap, render_all
from mvp_pclip.scoring import (PointFeatures, ViewScore, aggregate_point_features, anomaly_map,
                               anomaly_score, integrate_view_scores, upsample_feature_map)

from oracles import aggregate_loop


def test_upsample_constant_and_identity():
    c = torch.full((3, 3, 5), 2.5, dtype=DTYPE)
    torch.testing.assert_close(upsample_feature_map(c, (7, 9)), torch.full((7, 9, 5), 2.5, dtype=DTYPE),
                               rtol=0, atol=1e-15)
    m = torch.arange(8, dtype=DTYPE).reshape(2, 2, 2)
    assert torch.equal(upsample_feature_map(m, (2, 2)), m)


def test_upsample_ramp():
    m = torch.tensor([[0.0, 1.0], [0.0, 1.0]], dtype=DTYPE)[..., None]
    out = upsample_feature_map(m, (4, 4))[..., 0]
    for row in out:
        torch.testing.assert_close(row, torch.tensor([0, 1 / 3, 2 / 3, 1], dtype=DTYPE),
                                   rtol=0, atol=1e-15)


def corr_from(table, n):
    return CorrespondenceMap(np.asarray(table, dtype=np.int64), 0, n)


def test_single_view_constant_feature():
    c = np.array([3.0, 4.0])
    maps = np.broadcast_to(c, (1, 2, 2, 2, 2)).copy()  # views, m, g, g, d
    table = -np.ones((4, 4), dtype=np.int64)
    table[1, 2] = 0
    enc = BatchEncoding(torch.zeros(1, 2, dtype=DTYPE), torch.as_tensor(maps))
    pf = aggregate_point_features(enc, [corr_from(table, 2)], 2)
    np.testing.assert_allclose(pf.features[0].numpy(), c / 5)
    assert pf.visible.tolist() == [2, 0]
    assert torch.equal(pf.features[1], torch.zeros(2, dtype=DTYPE))


def test_two_views_average():
    a, b = np.array([1.0, 0.0, 0.0]), np.array([0.0, 2.0, 0.0])
    maps = np.stack([np.broadcast_to(a, (1, 2, 2, 3)), np.broadcast_to(b, (1, 2, 2, 3))])
    t = np.zeros((3, 3), dtype=np.int64)
    enc = BatchEncoding(torch.zeros(2, 3, dtype=DTYPE), torch.as_tensor(maps))
    pf = aggregate_point_features(enc, [corr_from(t, 1), corr_from(t, 1)], 1)
    ref = (a + b) / 2
    np.testing.assert_allclose(pf.features[0].numpy(), ref / np.linalg.norm(ref), atol=1e-15)


def _rendered_case(n_points, seed, views=9, size=32):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_points, 3)) * [1.0, 0.6, 0.4]
    cloud = normalize_cloud(PointCloud(d))
    rig = generate_view_rig(views, intrinsics=CameraIntrinsics.default(size))
    return render_all(cloud, rig, 1).correspondences


@pytest.mark.parametrize("seed", [0, 1])
def test_aggregation_matches_brute_force_loop(seed):
    corrs = _rendered_case(600, seed)
    rng = np.random.default_rng(seed + 10)
    maps = rng.normal(size=(9, 4, 4, 4, 6))
    enc = BatchEncoding(torch.zeros(9, 6, dtype=DTYPE), torch.as_tensor(maps))
    pf = aggregate_point_features(enc, corrs, 600)
    ref, cnt = aggregate_loop(maps, corrs, 600)
    np.testing.assert_allclose(pf.features.numpy(), ref, rtol=0, atol=1e-10)
    np.testing.assert_array_equal(pf.visible, cnt)


def test_aggregation_with_real_encoder_maps():
    cfg = EncoderConfig(image_size=32, patch_size=8, dim=16, n_heads=2)
    corrs = _rendered_case(300, 5, views=3)
    imgs = torch.rand(3, 32, 32, generator=torch.Generator().manual_seed(0), dtype=DTYPE)
    enc = encode_images(imgs, FrozenBackbone(cfg), VisualPromptBank.init(cfg), cfg)
    pf = aggregate_point_features(enc, corrs, 300)
    ref, _ = aggregate_loop(enc.maps.numpy(), corrs, 300)
    np.testing.assert_allclose(pf.features.numpy(), ref, rtol=0, atol=1e-10)


def test_view_permutation_invariance():
    corrs = _rendered_case(400, 3, views=5)
    maps = torch.as_tensor(np.random.default_rng(0).normal(size=(5, 2, 4, 4, 8)))
    enc = BatchEncoding(torch.zeros(5, 8, dtype=DTYPE), maps)
    base = aggregate_point_features(enc, corrs, 400)
    perm = [3, 0, 4, 1, 2]
    enc_p = BatchEncoding(torch.zeros(5, 8, dtype=DTYPE), maps[perm])
    out = aggregate_point_features(enc_p, [corrs[i] for i in perm], 400)
    torch.testing.assert_close(out.features, base.features, rtol=0, atol=1e-12)


def _encoding_with_token(t):
    t = torch.as_tensor(t, dtype=DTYPE)
    return BatchEncoding(t[None], torch.zeros(1, 1, 1, 1, len(t), dtype=DTYPE))


def test_anomaly_score_examples():
    G = np.eye(2)
    assert anomaly_score(_encoding_with_token([1.0, 1.0]), G, 0.07) == 0.5
    # similarities (0.2, 0.6) at tau = 1
    xi = anomaly_score(_encoding_with_token([0.2, 0.6]), G, 1.0)
    assert xi == pytest.approx(math.exp(0.6) / (math.exp(0.2) + math.exp(0.6)), abs=1e-12)
    assert xi == pytest.approx(0.59868, abs=1e-5)
    assert anomaly_score(_encoding_with_token([0.0, 1.0]), G, 1e-3) > 1 - 1e-12


def test_anomaly_map_examples():
    G = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    feats = torch.tensor([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]], dtype=DTYPE)
    A = anomaly_map(PointFeatures(feats, np.array([4, 4, 0])), G, 0.07)
    assert A[0] == 0.5
    assert A[1] > 0.99
    assert A[2] == 0.5


def test_anomaly_map_monotone_in_abnormal_similarity():
    G = np.eye(2)
    angles = np.linspace(0, np.pi / 2, 20)
    feats = torch.as_tensor(np.stack([np.cos(angles), np.sin(angles)], 1))
    A = anomaly_map(PointFeatures(feats, np.ones(20, dtype=int)), G, 0.07)
    assert np.all(np.diff(A) > 0)


def test_integrate_view_scores():
    t0 = np.array([[0, 1], [-1, 1]])
    t1 = np.array([[1, 0], [-1, -1]])
    corrs = [corr_from(t0, 3), corr_from(t1, 3)]
    m0 = np.array([[0.1, 0.3], [0.0, 0.5]])
    m1 = np.array([[0.9, 0.2], [0.0, 0.0]])
    mean = integrate_view_scores([ViewScore(m0, 0.2), ViewScore(m1, 0.4)], corrs, "mean")
    assert mean.score == pytest.approx(0.3)
    np.testing.assert_allclose(mean.map, [(0.1 + 0.2) / 2, (0.3 + 0.5 + 0.9) / 3, 0.5])
    mx = integrate_view_scores([ViewScore(m0, 0.2), ViewScore(m1, 0.4)], corrs, "max")
    assert mx.score == 0.4
    np.testing.assert_allclose(mx.map, [0.2, 0.9, 0.5])
    same = integrate_view_scores([ViewScore(m0, 0.2), ViewScore(m0, 0.2)], [corrs[0]] * 2)
    np.testing.assert_allclose(same.map, [0.1, 0.4, 0.5])
    with pytest.raises(ValueError):
        integrate_view_scores([ViewScore(m0, 0.2)], corrs)
