"""Pinhole camera model, rigid poses and the look-at view rig."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

EPS_Z = 1e-6
DEFAULT_ELEVATION_DEG = 35.0


class Behind:
    """Sentinel returned when a point sits at or behind the camera plane."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Behind"

    def __bool__(self):
        return False


BEHIND = Behind()


@dataclass(frozen=True)
class PointCloud:
    """An n x 3 point set with optional per-point anomaly labels.

    ``object_label`` defaults to ``max(labels)`` when labels are given.
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    object_label: Optional[int] = None
    category: str = ""

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be n x 3, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("point cloud must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels)
            if labels.shape != (pts.shape[0],):
                raise ValueError(
                    f"labels length {labels.shape} does not match {pts.shape[0]} points"
                )
            if not np.all((labels == 0) | (labels == 1)):
                raise ValueError("labels must be 0 or 1")
            labels = labels.astype(np.int8)
            object.__setattr__(self, "labels", labels)
            derived = int(labels.max())
            if self.object_label is None:
                object.__setattr__(self, "object_label", derived)
            elif int(self.object_label) != derived:
                raise ValueError("object_label must equal max over point labels")
        if self.object_label is not None:
            if int(self.object_label) not in (0, 1):
                raise ValueError("object_label must be 0 or 1")
            object.__setattr__(self, "object_label", int(self.object_label))

    def __len__(self):
        return self.points.shape[0]

    def with_points(self, points: np.ndarray) -> "PointCloud":
        return PointCloud(points, self.labels, self.object_label, self.category)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @classmethod
    def default(cls, image_size: int = 224, focal_224: float = 200.0) -> "CameraIntrinsics":
        """Square intrinsics; the focal length scales with the image size."""
        f = focal_224 * image_size / 224.0
        c = image_size / 2.0
        return cls(f, f, c, c, image_size, image_size)

    @property
    def K(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class RigidTransform:
    """World-to-camera transform ``x_cam = rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9, rtol=0):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant 1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    @property
    def center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class ViewRig:
    intrinsics: CameraIntrinsics
    poses: tuple = field(default_factory=tuple)

    def __post_init__(self):
        poses = tuple(self.poses)
        if len(poses) < 1:
            raise ValueError("a view rig needs at least one pose")
        object.__setattr__(self, "poses", poses)

    def __len__(self):
        return len(self.poses)

    def prefix(self, k: int) -> "ViewRig":
        """The rig restricted to its first ``k`` poses."""
        if not 1 <= k <= len(self.poses):
            raise ValueError(f"prefix length {k} outside [1, {len(self.poses)}]")
        return ViewRig(self.intrinsics, self.poses[:k])


def project_point(p, intrinsics: CameraIntrinsics, pose: RigidTransform):
    """Project one point to ``(u, v, z)`` or return :data:`BEHIND`."""
    p = np.asarray(p, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(p)):
        raise ValueError("point must be finite")
    xc, yc, z = pose.rotation @ p + pose.translation
    if z <= EPS_Z:
        return BEHIND
    u = intrinsics.cx + intrinsics.fx * xc / z
    v = intrinsics.cy + intrinsics.fy * yc / z
    return float(u), float(v), float(z)


def project_points(points: np.ndarray, intrinsics: CameraIntrinsics, pose: RigidTransform):
    """Vectorised projection.

    Returns ``(u, v, z, ok)`` arrays; ``ok`` is False where the point is behind
    the camera (``u`` and ``v`` are NaN there).
    """
    cam = pose.apply(points)
    z = cam[:, 2]
    ok = z > EPS_Z
    safe = np.where(ok, z, 1.0)
    u = np.where(ok, intrinsics.cx + intrinsics.fx * cam[:, 0] / safe, np.nan)
    v = np.where(ok, intrinsics.cy + intrinsics.fy * cam[:, 1] / safe, np.nan)
    return u, v, z, ok


def back_project(u: float, v: float, z: float, intrinsics: CameraIntrinsics,
                 pose: RigidTransform) -> np.ndarray:
    """Lift pixel ``(u, v)`` at camera depth ``z`` back to world coordinates."""
    if not z > EPS_Z:
        raise ValueError(f"depth {z} must exceed {EPS_Z}")
    xc = (u - intrinsics.cx) * z / intrinsics.fx
    yc = (v - intrinsics.cy) * z / intrinsics.fy
    cam = np.array([xc, yc, z])
    # R is orthonormal so R^-1 == R^T
    return pose.rotation.T @ (cam - pose.translation)


def back_project_points(u, v, z, intrinsics: CameraIntrinsics,
                        pose: RigidTransform) -> np.ndarray:
    """Vectorised :func:`back_project`; returns an (n, 3) array."""
    u, v, z = (np.asarray(a, dtype=np.float64).ravel() for a in (u, v, z))
    if not np.all(z > EPS_Z):
        raise ValueError(f"every depth must exceed {EPS_Z}")
    cam = np.stack([(u - intrinsics.cx) * z / intrinsics.fx,
                    (v - intrinsics.cy) * z / intrinsics.fy, z], 1)
    return (cam - pose.translation) @ pose.rotation


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> RigidTransform:
    """Pose of a camera at ``eye`` whose optical axis passes through ``target``.

    Camera axes follow the image convention: x right, y down, z forward.
    """
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - eye
    dist = np.linalg.norm(forward)
    if dist == 0:
        raise ValueError("eye and target coincide")
    forward = forward / dist
    up = np.asarray(up, dtype=np.float64)
    if np.linalg.norm(np.cross(forward, up)) < 1e-8:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    # re-orthonormalise to keep R^T R == I at machine precision
    u_, _, vt = np.linalg.svd(R)
    R = u_ @ vt
    return RigidTransform(R, -R @ eye)


def rig_directions(n_views: int, elevation_deg: float = DEFAULT_ELEVATION_DEG) -> np.ndarray:
    """Unit vectors from the rig center to each camera, in rig order.

    Cameras sit at evenly spaced azimuths at a fixed elevation; when
    ``n_views`` is odd and above one the last camera looks straight down.
    """
    if n_views < 1:
        raise ValueError("n_views must be at least 1")
    top = n_views > 1 and n_views % 2 == 1
    n_ring = n_views - 1 if top else n_views
    el = math.radians(elevation_deg)
    dirs = []
    for k in range(n_ring):
        az = 2.0 * math.pi * k / n_ring
        dirs.append((math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)))
    if top:
        dirs.append((0.0, 0.0, 1.0))
    return np.array(dirs)


def generate_view_rig(n_views: int, radius: float = 2.5, center=(0.0, 0.0, 0.0),
                      intrinsics: Optional[CameraIntrinsics] = None) -> ViewRig:
    """Deterministic look-at rig on a sphere around ``center``."""
    if n_views < 1:
        raise ValueError("n_views must be at least 1")
    if not radius > 0:
        raise ValueError("radius must be positive")
    if intrinsics is None:
        intrinsics = CameraIntrinsics.default()
    center = np.asarray(center, dtype=np.float64)
    poses = [look_at(center + radius * d, center) for d in rig_directions(n_views)]
    return ViewRig(intrinsics, tuple(poses))


def normalize_cloud(cloud: PointCloud) -> PointCloud:
    """Center at the centroid and scale so the farthest point has norm 1."""
    pts = cloud.points - cloud.points.mean(axis=0)
    scale = np.sqrt((pts ** 2).sum(axis=1)).max()
    if scale > 0:
        pts = pts / scale
    return cloud.with_points(pts)


def splat_tolerance(z: float, intrinsics: CameraIntrinsics, splat_radius: int) -> float:
    """World-space bound between a splatted pixel's back-projection and its point.

    A point lands in pixel ``floor(u)``; splatted pixel centers are at most
    ``splat_radius + 0.5`` pixels away per axis.
    """
    px = math.sqrt(2.0) * (splat_radius + 0.5)
    return px * z / min(intrinsics.fx, intrinsics.fy) + 1e-6


__all__: Sequence[str] = [
    "BEHIND", "Behind", "CameraIntrinsics", "EPS_Z", "PointCloud", "RigidTransform",
    "ViewRig", "back_project", "back_project_points", "generate_view_rig", "look_at", "normalize_cloud",
    "project_point", "project_points", "rig_directions", "splat_tolerance",
]
