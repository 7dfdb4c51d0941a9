"""Z-buffered point splatting into depth images with exact pixel/point correspondence."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np
from PIL import Image

from .fileio import atomic_write_bytes
from .geometry import EPS_Z, PointCloud, ViewRig, project_points

NO_POINT = -1


@dataclass(frozen=True)
class DepthView:
    depth: np.ndarray
    valid: np.ndarray
    view_index: int


@dataclass(frozen=True)
class CorrespondenceMap:
    """Pixel to winning point table for one view.

    ``pixel_to_point`` holds :data:`NO_POINT` where no point won the pixel.
    """

    pixel_to_point: np.ndarray
    view_index: int
    n_points: int

    def pixels(self):
        """``(rows, cols, point_index)`` for every pixel that has a winner."""
        rows, cols = np.nonzero(self.pixel_to_point != NO_POINT)
        return rows, cols, self.pixel_to_point[rows, cols]

    @property
    def point_to_pixels(self) -> List[list]:
        out: List[list] = [[] for _ in range(self.n_points)]
        for r, c, i in zip(*self.pixels()):
            out[int(i)].append((self.view_index, int(r), int(c)))
        return out

    def visible_points(self) -> np.ndarray:
        return np.unique(self.pixel_to_point[self.pixel_to_point != NO_POINT])


@dataclass(frozen=True)
class RenderedSet:
    views: tuple
    normalized: tuple

    def __len__(self):
        return len(self.views)

    @property
    def depth_views(self):
        return [v for v, _ in self.views]

    @property
    def correspondences(self):
        return [c for _, c in self.views]

    def images(self) -> np.ndarray:
        return np.stack(self.normalized)


def render_view(cloud: PointCloud, rig: ViewRig, view_index: int,
                splat_radius: int = 1):
    """Splat every point onto a square of pixels and keep the nearest per pixel.

    A point lands in pixel ``(floor(v), floor(u))`` and covers the
    ``(2 * splat_radius + 1)``-wide square around it. Equal depths resolve to
    the lower point index.
    """
    if len(cloud) == 0:
        raise ValueError("cannot render an empty cloud")
    if not 0 <= view_index < len(rig):
        raise IndexError(f"view_index {view_index} outside rig of {len(rig)} views")
    if splat_radius < 0:
        raise ValueError("splat_radius must be non-negative")
    K = rig.intrinsics
    H, W = K.height, K.width
    u, v, z, ok = project_points(cloud.points, K, rig.poses[view_index])
    idx = np.nonzero(ok)[0]
    c0 = np.floor(u[idx]).astype(np.int64)
    r0 = np.floor(v[idx]).astype(np.int64)
    zi = z[idx]

    offs = np.arange(-splat_radius, splat_radius + 1)
    dr, dc = np.meshgrid(offs, offs, indexing="ij")
    rr = (r0[:, None] + dr.ravel()[None, :]).ravel()
    cc = (c0[:, None] + dc.ravel()[None, :]).ravel()
    k = dr.size
    pid = np.repeat(idx, k)
    dep = np.repeat(zi, k)
    inside = (rr >= 0) & (rr < H) & (cc >= 0) & (cc < W)
    rr, cc, pid, dep = rr[inside], cc[inside], pid[inside], dep[inside]

    depth = np.zeros((H, W))
    table = np.full((H, W), NO_POINT, dtype=np.int64)
    if pid.size:
        flat = rr * W + cc
        order = np.lexsort((pid, dep, flat))
        flat, pid, dep = flat[order], pid[order], dep[order]
        first = np.ones(flat.size, dtype=bool)
        first[1:] = flat[1:] != flat[:-1]
        depth.ravel()[flat[first]] = dep[first]
        table.ravel()[flat[first]] = pid[first]
    valid = table != NO_POINT
    return (DepthView(depth, valid, view_index),
            CorrespondenceMap(table, view_index, len(cloud)))


def normalize_depth(view: DepthView, eps: float = 1e-8) -> np.ndarray:
    """Min-max normalise valid depths to [0, 1] with near points bright."""
    out = np.zeros(view.depth.shape)
    if not view.valid.any():
        return out
    d = view.depth[view.valid]
    lo, hi = d.min(), d.max()
    if hi == lo:
        out[view.valid] = 1.0
    else:
        out[view.valid] = 1.0 - (d - lo) / (hi - lo + eps)
    return out


def render_all(cloud: PointCloud, rig: ViewRig, splat_radius: int = 1) -> RenderedSet:
    views = tuple(render_view(cloud, rig, k, splat_radius) for k in range(len(rig)))
    normalized = tuple(normalize_depth(dv) for dv, _ in views)
    return RenderedSet(views, normalized)


def coverage(rendered: RenderedSet, n_points: int) -> float:
    """Fraction of points that win at least one pixel in at least one view."""
    if n_points <= 0:
        return 0.0
    seen = np.zeros(n_points, dtype=bool)
    for corr in rendered.correspondences:
        seen[corr.visible_points()] = True
    return float(seen.mean())


def _save_png(path, arr) -> None:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())


def export_views(rendered: RenderedSet, out_dir, cloud_id: str) -> List[Path]:
    """Write each normalized view as 16-bit PNG plus an 8-bit validity mask."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for k, (img, (dv, _)) in enumerate(zip(rendered.normalized, rendered.views)):
        path = out_dir / f"{cloud_id}_view{k}.png"
        arr = np.round(np.clip(img, 0.0, 1.0) * 65535).astype(np.uint16)
        _save_png(path, arr)
        mask_path = out_dir / f"{cloud_id}_view{k}_mask.png"
        _save_png(mask_path, dv.valid.astype(np.uint8) * 255)
        written += [path, mask_path]
    return written


__all__ = [
    "CorrespondenceMap", "DepthView", "EPS_Z", "NO_POINT", "RenderedSet", "coverage",
    "export_views", "normalize_depth", "render_all", "render_view",
]
