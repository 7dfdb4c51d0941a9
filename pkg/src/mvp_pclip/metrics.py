"""Object- and point-level AUROC, Max-F1 and Average Precision."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

METRIC_NAMES = ("o_auroc", "o_maxf1", "o_ap", "p_auroc", "p_maxf1", "p_ap")


def _prepare(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels must have the same length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    return s, y.astype(bool)


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC; ties count one half. Raises on single-class input."""
    s, y = _prepare(scores, labels)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC is undefined unless both classes are present")
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _threshold_counts(s, y):
    """True/false positive counts at each distinct score, descending (ties grouped)."""
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    return tp.astype(np.float64), fp.astype(np.float64)


def average_precision(scores, labels) -> float:
    """Step-wise AP: sum of recall increments times precision at each threshold."""
    s, y = _prepare(scores, labels)
    n_pos = y.sum()
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive")
    tp, fp = _threshold_counts(s, y)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def max_f1(scores, labels) -> float:
    """Best F1 over thresholds at observed scores (predict positive if score >= t)."""
    s, y = _prepare(scores, labels)
    n_pos = y.sum()
    if n_pos == 0:
        raise ValueError("max-F1 needs at least one positive")
    tp, fp = _threshold_counts(s, y)
    f1 = 2 * tp / (tp + fp + n_pos)
    return float(f1.max())


@dataclass
class EvalReport:
    o_auroc: float
    o_maxf1: float
    o_ap: float
    p_auroc: float
    p_maxf1: float
    p_ap: float
    per_category: Dict[str, Dict[str, float]] = field(default_factory=dict)
    n_objects: int = 0
    n_points: int = 0

    def as_dict(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in METRIC_NAMES}

    def to_table(self) -> str:
        """Per-category rows with object and point metric triples, then the mean."""
        head = f"{'category':<12} {'O-R':>6} {'O-F':>6} {'O-P':>6} {'P-R':>6} {'P-F':>6} {'P-P':>6}"
        rows = [head, "-" * len(head)]

        def fmt(name, m):
            vals = " ".join(f"{100 * m[k]:6.1f}" for k in METRIC_NAMES)
            return f"{name:<12} {vals}"

        for cat in sorted(self.per_category):
            rows.append(fmt(cat, self.per_category[cat]))
        rows.append(fmt("Mean", self.as_dict()))
        return "\n".join(rows) + "\n"

    def to_keyvalue(self) -> str:
        lines = [f"{k} = {v!r}" for k, v in self.as_dict().items()]
        lines += [f"n_objects = {self.n_objects}", f"n_points = {self.n_points}"]
        for cat in sorted(self.per_category):
            lines += [f"{cat}.{k} = {v!r}" for k, v in self.per_category[cat].items()]
        return "\n".join(lines) + "\n"


def _metric_triple(scores, labels, prefix):
    out = {}
    for name, fn in (("auroc", auroc), ("maxf1", max_f1), ("ap", average_precision)):
        try:
            out[f"{prefix}_{name}"] = fn(scores, labels)
        except ValueError:
            out[f"{prefix}_{name}"] = float("nan")
    return out


def evaluate(results: Mapping[str, object], clouds: Mapping[str, object],
             foreground: Optional[Mapping[str, np.ndarray]] = None) -> EvalReport:
    """Per-category metrics, macro-averaged into the dataset-level numbers.

    ``results`` and ``clouds`` are keyed by cloud name; each cloud supplies
    ``category``, ``labels`` and ``object_label``. Point metrics pool the
    foreground points of every cloud in a category. A metric undefined for a
    category (one class only) is NaN there and skipped in the mean.
    """
    cats: Dict[str, list] = {}
    for name in results:
        cats.setdefault(clouds[name].category, []).append(name)
    per_cat = {}
    n_pts = 0
    for cat, names in sorted(cats.items()):
        xi = [results[n].score for n in names]
        obj = [clouds[n].object_label for n in names]
        pts, lab = [], []
        for n in names:
            fg = np.ones(len(clouds[n].labels), bool) if foreground is None else foreground[n]
            pts.append(np.asarray(results[n].map)[fg])
            lab.append(np.asarray(clouds[n].labels)[fg])
        pts, lab = np.concatenate(pts), np.concatenate(lab)
        n_pts += len(pts)
        per_cat[cat] = {**_metric_triple(xi, obj, "o"), **_metric_triple(pts, lab, "p")}
    means = {}
    for k in METRIC_NAMES:
        vals = [m[k] for m in per_cat.values() if np.isfinite(m[k])]
        means[k] = float(np.mean(vals)) if vals else float("nan")
    return EvalReport(**means, per_category=per_cat, n_objects=len(results), n_points=n_pts)


__all__ = ["EvalReport", "METRIC_NAMES", "auroc", "average_precision", "evaluate", "max_f1"]
