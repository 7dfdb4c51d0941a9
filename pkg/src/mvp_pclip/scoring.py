"""Per-point feature aggregation, anomaly map/score, and generic view-score fusion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .encoder import DTYPE, BatchEncoding, ImageEncoding
from .rendering import CorrespondenceMap

DEFAULT_TAU = 0.07
NEUTRAL = 0.5


@dataclass
class PointFeatures:
    features: torch.Tensor
    visible: np.ndarray


@dataclass
class AnomalyResult:
    score: float
    map: np.ndarray

    def __post_init__(self):
        self.map = np.asarray(self.map, dtype=np.float64)
        if not 0.0 <= self.score <= 1.0 or np.any((self.map < 0) | (self.map > 1)):
            raise ValueError("anomaly score and map must lie in [0, 1]")


@dataclass
class ViewScore:
    """Output of a single-view scorer: a pixel score map and an image-level scalar."""

    pixel_map: np.ndarray
    scalar: float


def upsample_feature_map(fmap, target) -> torch.Tensor:
    """Bilinear upsampling of a (g, g, dim) grid to (H, W, dim), corners aligned."""
    fmap = torch.as_tensor(fmap, dtype=DTYPE)
    H, W = target
    x = fmap.permute(2, 0, 1)[None]
    out = F.interpolate(x, size=(H, W), mode="bilinear", align_corners=True)
    return out[0].permute(1, 2, 0)


def _axis_weights(idx: np.ndarray, size: int, grid: int):
    """Low neighbour index and upper weight along one axis (align_corners=True)."""
    if grid == 1 or size == 1:
        return np.zeros_like(idx), np.zeros(idx.shape)
    pos = idx * (grid - 1) / (size - 1)
    lo = np.minimum(np.floor(pos).astype(np.int64), grid - 2)
    return lo, pos - lo


def view_interpolation_weights(corr: CorrespondenceMap, grid: int) -> np.ndarray:
    """(n, grid*grid) matrix mapping a view's patch grid to per-point features.

    Row ``i`` is the mean, over the pixels point ``i`` wins, of the bilinear
    weights of those pixels; rows of points invisible in the view are zero.
    """
    H, W = corr.pixel_to_point.shape
    n = corr.n_points
    rows, cols, pts = corr.pixels()
    weights = np.zeros((n, grid * grid))
    if pts.size == 0:
        return weights
    r0, wr = _axis_weights(rows, H, grid)
    c0, wc = _axis_weights(cols, W, grid)
    r1 = np.minimum(r0 + 1, grid - 1)
    c1 = np.minimum(c0 + 1, grid - 1)
    for rr, cc, w in ((r0, c0, (1 - wr) * (1 - wc)), (r0, c1, (1 - wr) * wc),
                      (r1, c0, wr * (1 - wc)), (r1, c1, wr * wc)):
        np.add.at(weights, (pts, rr * grid + cc), w)
    counts = np.bincount(pts, minlength=n).astype(np.float64)
    seen = counts > 0
    weights[seen] /= counts[seen, None]
    return weights


@dataclass
class AggregationPlan:
    """Precomputed gather for a cloud: one interpolation matrix per view.

    ``weights`` has shape (n, views * grid * grid); ``view_counts[i]`` is the
    number of views in which point ``i`` wins at least one pixel.
    """

    weights: torch.Tensor
    view_counts: np.ndarray
    m: int

    @classmethod
    def build(cls, correspondences: Sequence[CorrespondenceMap], grid: int, m: int):
        mats = [view_interpolation_weights(c, grid) for c in correspondences]
        n = correspondences[0].n_points
        counts = np.zeros(n, dtype=np.int64)
        for c in correspondences:
            counts[c.visible_points()] += 1
        return cls(torch.as_tensor(np.concatenate(mats, axis=1), dtype=DTYPE), counts, m)

    @property
    def visible(self) -> np.ndarray:
        return self.view_counts * self.m


def aggregate_with_plan(maps: torch.Tensor, plan: AggregationPlan) -> PointFeatures:
    """``maps`` is (views, m, g, g, dim); average over layers and visible views."""
    V, m, g, _, d = maps.shape
    layer_mean = maps.mean(dim=1).reshape(V * g * g, d)
    summed = plan.weights @ layer_mean
    counts = torch.as_tensor(np.maximum(plan.view_counts, 1), dtype=DTYPE)
    feats = F.normalize(summed / counts[:, None], dim=-1)
    mask = torch.as_tensor(plan.view_counts > 0)
    feats = torch.where(mask[:, None], feats, torch.zeros_like(feats))
    return PointFeatures(feats, plan.visible)


def _stack_maps(encodings) -> torch.Tensor:
    if isinstance(encodings, BatchEncoding):
        return encodings.maps
    return torch.stack([torch.stack(list(e.key_layer_maps)) for e in encodings])


def aggregate_point_features(encodings, correspondences: Sequence[CorrespondenceMap],
                             n: int) -> PointFeatures:
    """Average key-layer features over every (view, layer) pair where a point is seen.

    Within a view, a point's feature is the mean over the pixels it wins of
    the upsampled map. Rows are L2-normalised; unseen points stay zero with
    ``visible == 0``.
    """
    maps = _stack_maps(encodings)
    if maps.shape[0] != len(correspondences):
        raise ValueError("encodings and correspondences must align by view")
    if any(c.n_points != n for c in correspondences):
        raise ValueError("correspondence maps disagree with the point count")
    plan = AggregationPlan.build(correspondences, maps.shape[2], maps.shape[1])
    return aggregate_with_plan(maps, plan)


def two_way_softmax(sim: torch.Tensor, tau: float) -> torch.Tensor:
    """Abnormal-column probability of a softmax over (normal, abnormal) similarities."""
    return torch.softmax(sim / tau, dim=-1)[..., 1]


def anomaly_score_tensor(class_tokens: torch.Tensor, G: torch.Tensor, tau: float) -> torch.Tensor:
    return two_way_softmax(class_tokens.mean(dim=0) @ G.T, tau)


def anomaly_map_tensor(points: PointFeatures, G: torch.Tensor, tau: float) -> torch.Tensor:
    probs = two_way_softmax(points.features @ G.T, tau)
    seen = torch.as_tensor(np.asarray(points.visible) > 0)
    return torch.where(seen, probs, torch.full_like(probs, NEUTRAL))


def anomaly_score(encodings, text, tau: float = DEFAULT_TAU) -> float:
    """Object score from the view-averaged class token against the text rows."""
    if isinstance(encodings, BatchEncoding):
        tokens = encodings.class_tokens
    else:
        tokens = torch.stack([e.class_token for e in encodings])
    return float(anomaly_score_tensor(tokens, torch.as_tensor(text, dtype=DTYPE), tau))


def anomaly_map(points: PointFeatures, text, tau: float = DEFAULT_TAU) -> np.ndarray:
    G = torch.as_tensor(text, dtype=DTYPE)
    return anomaly_map_tensor(points, G, tau).detach().numpy()


def integrate_view_scores(scores: Sequence[ViewScore],
                          correspondences: Sequence[CorrespondenceMap],
                          reducer: str = "mean") -> AnomalyResult:
    """Fuse per-view pixel score maps onto points; plug-in seam for 2D scorers.

    Each point reduces over every pixel it wins in every view; points never
    seen get the neutral 0.5. The object score reduces the per-view scalars.
    """
    if reducer not in ("mean", "max"):
        raise ValueError(f"unknown reducer {reducer!r}")
    if len(scores) != len(correspondences) or not scores:
        raise ValueError("need one ViewScore per correspondence map")
    n = correspondences[0].n_points
    total = np.zeros(n)
    count = np.zeros(n)
    best = np.full(n, -np.inf)
    for vs, corr in zip(scores, correspondences):
        if vs.pixel_map.shape != corr.pixel_to_point.shape:
            raise ValueError("view score map does not match the view shape")
        rows, cols, pts = corr.pixels()
        vals = vs.pixel_map[rows, cols]
        np.add.at(total, pts, vals)
        np.add.at(count, pts, 1.0)
        np.maximum.at(best, pts, vals)
    seen = count > 0
    out = np.full(n, NEUTRAL)
    if reducer == "mean":
        out[seen] = total[seen] / count[seen]
    else:
        out[seen] = best[seen]
    scalars = np.array([vs.scalar for vs in scores], dtype=np.float64)
    obj = scalars.mean() if reducer == "mean" else scalars.max()
    return AnomalyResult(float(obj), np.clip(out, 0.0, 1.0))


__all__: List[str] = [
    "AggregationPlan", "AnomalyResult", "DEFAULT_TAU", "PointFeatures", "ViewScore",
    "aggregate_point_features", "aggregate_with_plan", "anomaly_map", "anomaly_map_tensor",
    "anomaly_score", "anomaly_score_tensor", "integrate_view_scores", "two_way_softmax",
    "upsample_feature_map", "view_interpolation_weights",
]
