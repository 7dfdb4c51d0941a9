"""Synthetic zero-shot benchmark and point cloud file I/O (PLY, XYZ, label sidecars)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .fileio import atomic_write_bytes, atomic_write_text
from .geometry import PointCloud

CATEGORIES = ("sphere", "box", "cylinder", "torus", "cone")
ANOMALY_TYPES = ("bump", "dent", "hole", "flash")
DISPLACEMENT_RANGE = (0.03, 0.08)
HOLE_RING = 1.35


class PlyError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    categories: Tuple[str, ...] = CATEGORIES
    points_per_cloud: int = 800
    clouds_per_category: int = 40
    anomaly_types: Tuple[str, ...] = ANOMALY_TYPES
    anomaly_fraction: float = 0.5
    anomaly_area: float = 0.05
    seed: int = 0
    train_categories: Tuple[str, ...] = ("sphere", "box", "cylinder")
    displacement: Tuple[float, float] = DISPLACEMENT_RANGE

    def __post_init__(self):
        for name in ("categories", "anomaly_types", "train_categories", "displacement"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        unknown = set(self.categories) - set(CATEGORIES)
        if unknown:
            raise ValueError(f"unknown categories {sorted(unknown)}")
        if set(self.anomaly_types) - set(ANOMALY_TYPES) or not self.anomaly_types:
            raise ValueError(f"anomaly_types must be a non-empty subset of {ANOMALY_TYPES}")
        if not set(self.train_categories) <= set(self.categories):
            raise ValueError("train_categories must be drawn from categories")
        if not 0.0 < self.anomaly_area <= 0.3:
            raise ValueError("anomaly_area must lie in (0, 0.3]")
        if not 0.0 <= self.anomaly_fraction <= 1.0:
            raise ValueError("anomaly_fraction must lie in [0, 1]")
        if self.anomaly_area * self.points_per_cloud < 1:
            raise ValueError("anomaly_area * points_per_cloud must be at least one point")
        lo, hi = self.displacement
        if not 0 < lo <= hi:
            raise ValueError("displacement range must satisfy 0 < low <= high")
        if self.clouds_per_category < 1:
            raise ValueError("clouds_per_category must be at least 1")

    @property
    def test_categories(self) -> Tuple[str, ...]:
        return tuple(c for c in self.categories if c not in self.train_categories)


@dataclass
class DatasetSplit:
    train_categories: Tuple[str, ...]
    test_categories: Tuple[str, ...]
    train: Dict[str, PointCloud] = field(default_factory=dict)
    test: Dict[str, PointCloud] = field(default_factory=dict)
    anomaly_types: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.train_categories) & set(self.test_categories):
            raise ValueError("train and test categories must be disjoint")


# ---------------------------------------------------------------------------
# base shapes: sampling with analytic normals, and unsigned surface distance


@dataclass(frozen=True)
class Shape:
    kind: str
    params: Tuple[float, ...]
    rotation: np.ndarray

    def sample(self, n: int, rng: np.random.Generator):
        pts, nrm = _SAMPLERS[self.kind](self.params, n, rng)
        return pts @ self.rotation.T, nrm @ self.rotation.T

    def distance(self, points: np.ndarray) -> np.ndarray:
        """Unsigned distance from world points to the undeformed surface."""
        local = np.asarray(points) @ self.rotation
        return np.abs(_SDFS[self.kind](self.params, local))


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _sample_sphere(params, n, rng):
    (r,) = params
    d = _unit(rng.normal(size=(n, 3)))
    return r * d, d


def _sample_box(params, n, rng):
    b = np.array(params)
    areas = np.array([b[1] * b[2], b[0] * b[2], b[0] * b[1]] * 2)
    face = rng.choice(6, size=n, p=areas / areas.sum())
    pts = rng.uniform(-1, 1, size=(n, 3)) * b
    nrm = np.zeros((n, 3))
    axis = face % 3
    sign = np.where(face < 3, 1.0, -1.0)
    pts[np.arange(n), axis] = sign * b[axis]
    nrm[np.arange(n), axis] = sign
    return pts, nrm


def _sample_cylinder(params, n, rng):
    r, h = params
    areas = np.array([2 * math.pi * r * 2 * h, math.pi * r * r, math.pi * r * r])
    part = rng.choice(3, size=n, p=areas / areas.sum())
    phi = rng.uniform(0, 2 * math.pi, size=n)
    rad = r * np.sqrt(rng.uniform(size=n))
    z = rng.uniform(-h, h, size=n)
    side = part == 0
    top = np.where(part == 1, 1.0, -1.0)
    rho = np.where(side, r, rad)
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), np.where(side, z, top * h)], 1)
    nrm = np.where(side[:, None],
                   np.stack([np.cos(phi), np.sin(phi), np.zeros(n)], 1),
                   np.stack([np.zeros(n), np.zeros(n), top], 1))
    return pts, nrm


def _sample_torus(params, n, rng):
    R, r = params
    out_t, out_p = [], []
    while sum(len(t) for t in out_t) < n:
        theta = rng.uniform(0, 2 * math.pi, size=2 * n)
        phi = rng.uniform(0, 2 * math.pi, size=2 * n)
        keep = rng.uniform(size=2 * n) < (R + r * np.cos(theta)) / (R + r)
        out_t.append(theta[keep])
        out_p.append(phi[keep])
    theta = np.concatenate(out_t)[:n]
    phi = np.concatenate(out_p)[:n]
    nrm = np.stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), np.sin(theta)], 1)
    ring = np.stack([R * np.cos(phi), R * np.sin(phi), np.zeros(n)], 1)
    return ring + r * nrm, nrm


def _sample_cone(params, n, rng):
    rb, h = params
    slant = math.hypot(rb, 2 * h)
    areas = np.array([math.pi * rb * slant, math.pi * rb * rb])
    part = rng.choice(2, size=n, p=areas / areas.sum())
    phi = rng.uniform(0, 2 * math.pi, size=n)
    t = np.sqrt(rng.uniform(size=n))  # fraction of the way from apex to base
    side = part == 0
    rho = np.where(side, rb * t, rb * np.sqrt(rng.uniform(size=n)))
    z = np.where(side, h - 2 * h * t, -h)
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], 1)
    side_n = _unit(np.stack([2 * h * np.cos(phi), 2 * h * np.sin(phi), np.full(n, rb)], 1))
    base_n = np.tile([0.0, 0.0, -1.0], (n, 1))
    return pts, np.where(side[:, None], side_n, base_n)


def _sdf_sphere(params, p):
    return np.linalg.norm(p, axis=1) - params[0]


def _sdf_box(params, p):
    q = np.abs(p) - np.array(params)
    return np.linalg.norm(np.maximum(q, 0), axis=1) + np.minimum(q.max(axis=1), 0)


def _sdf_cylinder(params, p):
    r, h = params
    d = np.stack([np.linalg.norm(p[:, :2], axis=1) - r, np.abs(p[:, 2]) - h], 1)
    return np.minimum(d.max(axis=1), 0) + np.linalg.norm(np.maximum(d, 0), axis=1)


def _sdf_torus(params, p):
    R, r = params
    q = np.stack([np.linalg.norm(p[:, :2], axis=1) - R, p[:, 2]], 1)
    return np.linalg.norm(q, axis=1) - r


def _sdf_cone(params, p):
    # capped cone with base radius rb at z=-h and apex at z=+h
    rb, h = params
    qx = np.linalg.norm(p[:, :2], axis=1)
    qy = p[:, 2]
    k1 = np.array([0.0, h])
    k2 = np.array([-rb, 2 * h])
    ca = np.stack([qx - np.minimum(qx, np.where(qy < 0, rb, 0.0)), np.abs(qy) - h], 1)
    q = np.stack([qx, qy], 1)
    t = np.clip(((k1 - q) @ k2) / (k2 @ k2), 0.0, 1.0)
    cb = q - k1 + k2 * t[:, None]
    s = np.where((cb[:, 0] < 0) & (ca[:, 1] < 0), -1.0, 1.0)
    return s * np.sqrt(np.minimum((ca ** 2).sum(1), (cb ** 2).sum(1)))


_SAMPLERS = {"sphere": _sample_sphere, "box": _sample_box, "cylinder": _sample_cylinder,
             "torus": _sample_torus, "cone": _sample_cone}
_SDFS = {"sphere": _sdf_sphere, "box": _sdf_box, "cylinder": _sdf_cylinder,
         "torus": _sdf_torus, "cone": _sdf_cone}


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_shape(kind: str, rng: np.random.Generator) -> Shape:
    if kind == "sphere":
        params = (1.0,)
    elif kind == "box":
        params = (1.0, rng.uniform(0.5, 0.9), rng.uniform(0.4, 0.8))
    elif kind == "cylinder":
        params = (rng.uniform(0.5, 0.8), rng.uniform(0.8, 1.1))
    elif kind == "torus":
        params = (1.0, rng.uniform(0.25, 0.45))
    elif kind == "cone":
        params = (rng.uniform(0.7, 1.0), rng.uniform(0.7, 1.0))
    else:
        raise ValueError(f"unknown shape {kind!r}")
    return Shape(kind, tuple(float(x) for x in params), _random_rotation(rng))


# ---------------------------------------------------------------------------
# defects


def _region(points, seed_idx, k, metric=None):
    diff = points - points[seed_idx]
    d2 = (diff ** 2).sum(1) if metric is None else metric(diff)
    order = np.argsort(d2, kind="stable")
    return order[:k], np.sqrt((diff ** 2).sum(1))


def apply_anomaly(points, normals, kind, area, rng, radius, displacement=DISPLACEMENT_RANGE,
                  k: Optional[int] = None):
    """Deform a clean sample; returns (points, labels).

    The defect region holds ``k`` points (default ``round(area * n)``).
    ``hole`` removes its region, so callers sample ``k`` surplus points.
    """
    n = len(points)
    if k is None:
        k = int(round(area * n))
    k = max(1, int(k))
    seed_idx = int(rng.integers(n))
    h = rng.uniform(*displacement) * radius
    labels = np.zeros(n, dtype=np.int8)
    if kind in ("bump", "dent"):
        region, dist = _region(points, seed_idx, k)
        r = max(dist[region].max(), 1e-12)
        prof = h * (1.0 - 0.5 * (dist[region] / r) ** 2)
        sign = 1.0 if kind == "bump" else -1.0
        points = points.copy()
        points[region] += sign * prof[:, None] * normals[region]
        labels[region] = 1
    elif kind == "flash":
        nrm = normals[seed_idx]
        tangent = np.cross(nrm, rng.normal(size=3))
        tangent /= np.linalg.norm(tangent)

        def metric(diff):
            along = diff @ tangent
            across = diff - along[:, None] * tangent
            return along ** 2 / 4.0 + 4.0 * (across ** 2).sum(1)

        region, _ = _region(points, seed_idx, k, metric)
        points = points.copy()
        points[region] += h * normals[region]
        labels[region] = 1
    elif kind == "hole":
        region, dist = _region(points, seed_idx, k)
        r = dist[region].max()
        keep = np.ones(n, dtype=bool)
        keep[region] = False
        ring = keep & (dist <= HOLE_RING * r)
        if not ring.any():
            rest = np.nonzero(keep)[0]
            ring[rest[np.argmin(dist[rest])]] = True
        points = points[keep]
        labels = ring[keep].astype(np.int8)
    else:
        raise ValueError(f"unknown anomaly type {kind!r}")
    return points, labels


def make_cloud(kind: str, n: int, rng: np.random.Generator, anomaly: Optional[str] = None,
               area: float = 0.05, displacement=DISPLACEMENT_RANGE):
    """One synthetic cloud; returns (PointCloud, Shape) so tests can query the surface."""
    shape = random_shape(kind, rng)
    k = max(1, int(round(area * n)))
    extra = k if anomaly == "hole" else 0
    pts, nrm = shape.sample(n + extra, rng)
    radius = np.linalg.norm(pts - pts.mean(0), axis=1).max()
    if anomaly is None:
        labels = np.zeros(n, dtype=np.int8)
    else:
        pts, labels = apply_anomaly(pts, nrm, anomaly, area, rng, radius, displacement, k)
    return PointCloud(pts, labels, category=kind), shape


def generate(spec: SyntheticSpec) -> DatasetSplit:
    """Deterministic category-disjoint benchmark built from ``spec``."""
    split = DatasetSplit(spec.train_categories, spec.test_categories)
    root = np.random.SeedSequence(spec.seed)
    for cat, child in zip(spec.categories, root.spawn(len(spec.categories))):
        rng = np.random.default_rng(child)
        n_bad = int(round(spec.anomaly_fraction * spec.clouds_per_category))
        bad = np.zeros(spec.clouds_per_category, dtype=bool)
        bad[rng.permutation(spec.clouds_per_category)[:n_bad]] = True
        target = split.train if cat in spec.train_categories else split.test
        for i in range(spec.clouds_per_category):
            kind = str(rng.choice(list(spec.anomaly_types))) if bad[i] else None
            cloud, _ = make_cloud(cat, spec.points_per_cloud, rng, kind, spec.anomaly_area,
                                  spec.displacement)
            name = f"{cat}_{i:03d}"
            target[name] = cloud
            split.anomaly_types[name] = kind or "good"
    return split


# ---------------------------------------------------------------------------
# file I/O

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def labels_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(path.name[: -len(path.suffix)] + ".labels.txt" if path.suffix
                          else path.name + ".labels.txt")


def _parse_ply_header(f):
    first = f.readline()
    if first.strip() != b"ply":
        raise PlyError("line 1: missing 'ply' magic")
    fmt = None
    elements: List[Tuple[str, int, list]] = []
    lineno = 1
    while True:
        raw = f.readline()
        lineno += 1
        if not raw:
            raise PlyError(f"line {lineno}: header ended without end_header")
        words = raw.decode("ascii", errors="replace").split()
        if not words or words[0] in ("comment", "obj_info"):
            continue
        if words[0] == "end_header":
            break
        if words[0] == "format":
            if len(words) != 3 or words[1] not in ("ascii", "binary_little_endian"):
                raise PlyError(f"line {lineno}: unsupported format {' '.join(words[1:])!r}")
            fmt = words[1]
        elif words[0] == "element":
            try:
                elements.append((words[1], int(words[2]), []))
            except (IndexError, ValueError):
                raise PlyError(f"line {lineno}: malformed element line") from None
        elif words[0] == "property":
            if not elements:
                raise PlyError(f"line {lineno}: property before any element")
            if words[1] == "list":
                elements[-1][2].append((words[-1], None))
            elif len(words) == 3 and words[1] in _PLY_TYPES:
                elements[-1][2].append((words[2], _PLY_TYPES[words[1]]))
            else:
                raise PlyError(f"line {lineno}: malformed property line")
        else:
            raise PlyError(f"line {lineno}: unexpected header keyword {words[0]!r}")
    if fmt is None:
        raise PlyError("header has no format line")
    if not elements or elements[0][0] != "vertex":
        raise PlyError("first element must be 'vertex'")
    return fmt, elements, lineno


def read_ply(path) -> np.ndarray:
    with open(path, "rb") as f:
        fmt, elements, header_lines = _parse_ply_header(f)
        _, count, props = elements[0]
        names = [p[0] for p in props]
        if any(dt is None for _, dt in props):
            raise PlyError("list properties on vertices are not supported")
        if not {"x", "y", "z"} <= set(names):
            raise PlyError("vertex element lacks x, y, z properties")
        cols = [names.index(c) for c in "xyz"]
        if fmt == "binary_little_endian":
            dtype = np.dtype([(nm, "<" + dt) for nm, dt in props])
            offset = f.tell()
            buf = f.read(dtype.itemsize * count)
            if len(buf) != dtype.itemsize * count:
                got = len(buf) // dtype.itemsize
                raise PlyError(f"byte offset {offset}: expected {count} vertices, found {got}")
            rec = np.frombuffer(buf, dtype=dtype)
            pts = np.stack([rec[c].astype(np.float64) for c in "xyz"], 1)
        else:
            pts = np.empty((count, 3))
            for i in range(count):
                lineno = header_lines + 1 + i
                raw = f.readline()
                if not raw:
                    raise PlyError(f"line {lineno}: expected {count} vertices, found {i}")
                words = raw.split()
                if len(words) < len(props):
                    raise PlyError(f"line {lineno}: expected {len(props)} values")
                try:
                    pts[i] = [float(words[c]) for c in cols]
                except ValueError:
                    raise PlyError(f"line {lineno}: non-numeric coordinate") from None
    bad = ~np.isfinite(pts).all(1)
    if bad.any():
        i = int(np.argmax(bad))
        where = f"line {header_lines + 1 + i}" if fmt == "ascii" else f"vertex {i}"
        raise PlyError(f"{where}: non-finite coordinate")
    return pts


def write_ply(path, points, colors=None, binary: bool = True) -> None:
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {n}", "property double x", "property double y",
              "property double z"]
    if colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append("end_header")
    fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
    if colors is not None:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    rec = np.empty(n, dtype=fields)
    rec["x"], rec["y"], rec["z"] = points.T
    if colors is not None:
        colors = np.asarray(colors, dtype=np.uint8)
        rec["red"], rec["green"], rec["blue"] = colors.T
    parts = [("\n".join(header) + "\n").encode("ascii")]
    if binary:
        parts.append(rec.tobytes())
    else:
        for row in rec:
            vals = [repr(float(row[c])) for c in "xyz"]
            if colors is not None:
                vals += [str(int(row[c])) for c in ("red", "green", "blue")]
            parts.append((" ".join(vals) + "\n").encode("ascii"))
    atomic_write_bytes(path, b"".join(parts))


def read_xyz(path) -> np.ndarray:
    rows = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            words = line.split()
            if len(words) < 3:
                raise PlyError(f"line {lineno}: expected 3 coordinates")
            try:
                xyz = [float(w) for w in words[:3]]
            except ValueError:
                raise PlyError(f"line {lineno}: non-numeric coordinate") from None
            if not all(math.isfinite(v) for v in xyz):
                raise PlyError(f"line {lineno}: non-finite coordinate")
            rows.append(xyz)
    if not rows:
        raise PlyError(f"{path}: no points")
    return np.array(rows)


def write_xyz(path, points) -> None:
    pts = np.asarray(points, dtype=np.float64)
    atomic_write_text(path, "".join(f"{p[0]!r} {p[1]!r} {p[2]!r}\n" for p in pts))


def read_labels(path, n: Optional[int] = None) -> np.ndarray:
    vals = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            s = line.strip()
            if not s:
                continue
            if s not in ("0", "1"):
                raise PlyError(f"{path} line {lineno}: label must be 0 or 1, got {s!r}")
            vals.append(int(s))
    labels = np.array(vals, dtype=np.int8)
    if n is not None and len(labels) != n:
        raise PlyError(f"{path}: {len(labels)} labels for {n} points")
    return labels


def write_labels(path, labels) -> None:
    atomic_write_text(path, "".join(f"{int(v)}\n" for v in labels))


def load_cloud(path, labels_path=None, category: str = "") -> PointCloud:
    """Read PLY or XYZ; labels come from ``labels_path`` or the sidecar if present."""
    path = Path(path)
    pts = read_ply(path) if path.suffix.lower() == ".ply" else read_xyz(path)
    if labels_path is None and labels_path_for(path).exists():
        labels_path = labels_path_for(path)
    labels = read_labels(labels_path, len(pts)) if labels_path is not None else None
    return PointCloud(pts, labels, category=category)


def save_cloud(cloud: PointCloud, path, binary: bool = True, write_sidecar: bool = True) -> None:
    path = Path(path)
    if path.suffix.lower() == ".ply":
        write_ply(path, cloud.points, binary=binary)
    else:
        write_xyz(path, cloud.points)
    if write_sidecar and cloud.labels is not None:
        write_labels(labels_path_for(path), cloud.labels)


def score_colors(scores) -> np.ndarray:
    """Linear blue-to-red colormap: ``(r, g, b) = (q, 0, 255 - q)``.

    ``q = floor(255 * s + 0.5)`` with ``s`` clipped to [0, 1], so 0 is
    (0, 0, 255), 1 is (255, 0, 0) and 0.5 is (128, 0, 127).
    """
    s = np.clip(np.asarray(scores, dtype=np.float64), 0.0, 1.0)
    q = np.floor(255.0 * s + 0.5).astype(np.int64)
    return np.stack([q, np.zeros_like(q), 255 - q], 1).astype(np.uint8)


def export_colored(cloud: PointCloud, scores, path) -> None:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if len(scores) != len(cloud):
        raise ValueError(f"{len(scores)} scores for {len(cloud)} points")
    write_ply(path, cloud.points, colors=score_colors(scores))


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ManifestEntry:
    category: str
    path: str
    split: str
    object_label: int

    @property
    def name(self) -> str:
        return Path(self.path).stem


def write_manifest(path, entries: Sequence[ManifestEntry]) -> None:
    lines = ["# category path split object_label\n"]
    lines += [f"{e.category} {e.path} {e.split} {e.object_label}\n" for e in entries]
    atomic_write_text(path, "".join(lines))


def read_manifest(path) -> List[ManifestEntry]:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            words = line.split()
            if len(words) != 4 or words[3] not in ("0", "1"):
                raise ValueError(f"{path} line {lineno}: expected 'category path split 0|1'")
            out.append(ManifestEntry(words[0], words[1], words[2], int(words[3])))
    return out


def save_split(split: DatasetSplit, root) -> Path:
    """Write every cloud as binary PLY plus label sidecar and a manifest."""
    root = Path(root)
    entries = []
    for name_split, clouds in (("train", split.train), ("test", split.test)):
        for name, cloud in clouds.items():
            rel = Path("clouds") / cloud.category / f"{name}.ply"
            (root / rel).parent.mkdir(parents=True, exist_ok=True)
            save_cloud(cloud, root / rel)
            entries.append(ManifestEntry(cloud.category, rel.as_posix(), name_split,
                                         int(cloud.object_label or 0)))
    manifest = root / "manifest.txt"
    write_manifest(manifest, entries)
    return manifest


def load_split(manifest_path, which: str) -> Dict[str, PointCloud]:
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    clouds = {}
    for e in read_manifest(manifest_path):
        if e.split != which:
            continue
        cloud = load_cloud(root / e.path, category=e.category)
        if cloud.object_label is not None and cloud.object_label != e.object_label:
            raise ValueError(f"{e.path}: manifest object label disagrees with point labels")
        clouds[e.name] = cloud
    return clouds


__all__ = [
    "ANOMALY_TYPES", "CATEGORIES", "DatasetSplit", "ManifestEntry", "PlyError", "Shape",
    "SyntheticSpec", "apply_anomaly", "export_colored", "generate", "labels_path_for",
    "load_cloud", "load_split", "make_cloud", "random_shape", "read_labels", "read_manifest",
    "read_ply", "read_xyz", "save_cloud", "save_split", "score_colors", "write_labels",
    "write_manifest", "write_ply", "write_xyz",
]
