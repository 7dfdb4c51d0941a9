"""Composite IoU + focal + cross-entropy loss and prompt-only optimisation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
import torch

from .encoder import DTYPE
from .geometry import PointCloud
from .model import MVPCLIP, PreparedCloud

log = logging.getLogger(__name__)

# guards empty masks only; large enough values visibly bias small-mask losses
IOU_EPS = 1e-12
PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0005
    epochs: int = 3
    batch: int = 1
    seed: int = 0
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch < 1:
            raise ValueError("batch must be at least 1")


@dataclass(frozen=True)
class LossBreakdown:
    iou: float
    focal: float
    ce: float
    total: float

    def line(self, step) -> str:
        return f"{step} {self.iou!r} {self.focal!r} {self.ce!r} {self.total!r}"


def _t(x) -> torch.Tensor:
    return x if isinstance(x, torch.Tensor) else torch.as_tensor(np.asarray(x), dtype=DTYPE)


def iou_loss(A, gt, eps: float = IOU_EPS) -> torch.Tensor:
    """Soft IoU loss ``1 - (sum A*gt + eps) / (sum A + sum gt - sum A*gt + eps)``."""
    A, gt = _t(A), _t(gt).to(DTYPE)
    inter = (A * gt).sum()
    union = A.sum() + gt.sum() - inter
    return 1.0 - (inter + eps) / (union + eps)


def focal_loss(A, gt, gamma: float = 2.0, alpha: float = 0.25) -> torch.Tensor:
    A, gt = _t(A), _t(gt).to(DTYPE)
    pt = torch.where(gt > 0.5, A, 1.0 - A).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
    at = torch.where(gt > 0.5, torch.full_like(A, alpha), torch.full_like(A, 1.0 - alpha))
    return (-at * (1.0 - pt) ** gamma * torch.log(pt)).mean()


def cross_entropy(xi, xi_gt) -> torch.Tensor:
    xi = _t(xi).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = float(xi_gt)
    return -(y * torch.log(xi) + (1.0 - y) * torch.log(1.0 - xi))


def composite_loss(xi, A, gt_map, gt_obj, cfg: TrainConfig = TrainConfig()):
    """Unit-weighted sum of the three terms; returns (total tensor, per-term tensors)."""
    terms = {
        "iou": iou_loss(A, gt_map),
        "focal": focal_loss(A, gt_map, cfg.focal_gamma, cfg.focal_alpha),
        "ce": cross_entropy(xi, gt_obj),
    }
    return terms["iou"] + terms["focal"] + terms["ce"], terms


def _check_finite(terms: Mapping[str, torch.Tensor]) -> None:
    for name, value in terms.items():
        if not torch.isfinite(value).all():
            raise FloatingPointError(f"non-finite {name} loss: {float(value.detach())}")


def _ground_truth(prep: PreparedCloud):
    if prep.labels is None:
        raise ValueError("training clouds need point labels")
    gt = torch.as_tensor(prep.labels.astype(np.float64))
    return gt, int(prep.object_label)


def batch_loss(model: MVPCLIP, batch: Sequence[PreparedCloud], cfg: TrainConfig):
    """Mean composite loss over ``batch``; text features computed once per class."""
    cache: Dict[str, torch.Tensor] = {}
    sums = {"iou": 0.0, "focal": 0.0, "ce": 0.0}
    for prep in batch:
        if prep.category not in cache:
            cache[prep.category] = model.text_features(prep.category)
        xi, A = model.forward(prep, cache[prep.category])
        gt, obj = _ground_truth(prep)
        _, terms = composite_loss(xi, A, gt, obj, cfg)
        _check_finite(terms)
        for k in sums:
            sums[k] = sums[k] + terms[k]
    terms = {k: v / len(batch) for k, v in sums.items()}
    total = terms["iou"] + terms["focal"] + terms["ce"]
    return total, terms


def breakdown(terms: Mapping[str, torch.Tensor]) -> LossBreakdown:
    iou, focal, ce = (float(terms[k].detach()) for k in ("iou", "focal", "ce"))
    return LossBreakdown(iou, focal, ce, iou + focal + ce)


def backward(model: MVPCLIP, batch: Sequence[PreparedCloud], cfg: TrainConfig = TrainConfig(),
             scale: float = 1.0) -> Dict[str, np.ndarray]:
    """Reverse-mode gradients of ``scale * loss`` w.r.t. the prompt parameters only."""
    model.requires_grad_(True)
    params = model.parameters()
    total, terms = batch_loss(model, batch, cfg)
    grads = torch.autograd.grad(scale * total, params, allow_unused=True)
    out = {}
    for (name, p), g in zip(model.named_parameters(), grads):
        out[name] = np.zeros(tuple(p.shape)) if g is None else g.detach().numpy().copy()
    return out


def evaluate_loss(model: MVPCLIP, prepared: Sequence[PreparedCloud],
                  cfg: TrainConfig = TrainConfig()) -> LossBreakdown:
    with torch.no_grad():
        _, terms = batch_loss(model, prepared, cfg)
    return breakdown(terms)


@dataclass
class TrainResult:
    steps: List[LossBreakdown] = field(default_factory=list)
    epochs: List[LossBreakdown] = field(default_factory=list)
    checkpoints: List[Path] = field(default_factory=list)


def train(model: MVPCLIP, dataset: Mapping[str, PointCloud] | Sequence[PointCloud],
          cfg: TrainConfig = TrainConfig(), checkpoint_dir=None, log_path=None,
          on_epoch: Optional[Callable[[int, LossBreakdown], None]] = None) -> TrainResult:
    """Adam on the prompt banks; the frozen backbone is never touched.

    ``epochs[0]`` is the full-dataset loss before any update and
    ``epochs[k]`` the loss after epoch ``k``.
    """
    from .checkpoint import save_checkpoint
    from .fileio import atomic_write_bytes

    clouds = list(dataset.values()) if isinstance(dataset, Mapping) else list(dataset)
    if not clouds:
        raise ValueError("training dataset is empty")
    prepared = [model.prepare(c) for c in clouds]
    torch.manual_seed(cfg.seed)
    model.requires_grad_(True)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate,
                           betas=(cfg.adam_beta1, cfg.adam_beta2), eps=cfg.adam_eps)
    result = TrainResult()
    result.epochs.append(evaluate_loss(model, prepared, cfg))
    log.info("epoch 0 loss %.6f", result.epochs[0].total)
    rng = np.random.default_rng(cfg.seed)
    lines = ["# step iou focal ce total"]
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(prepared))
        for start in range(0, len(order), cfg.batch):
            batch = [prepared[i] for i in order[start:start + cfg.batch]]
            opt.zero_grad(set_to_none=True)
            total, terms = batch_loss(model, batch, cfg)
            total.backward()
            opt.step()
            step += 1
            bd = breakdown(terms)
            result.steps.append(bd)
            lines.append(bd.line(step))
        ep = evaluate_loss(model, prepared, cfg)
        result.epochs.append(ep)
        log.info("epoch %d loss %.6f", epoch, ep.total)
        if on_epoch is not None:
            on_epoch(epoch, ep)
        if checkpoint_dir is not None:
            path = Path(checkpoint_dir) / f"epoch_{epoch}.ckpt"
            save_checkpoint(path, model, {"epoch": epoch})
            result.checkpoints.append(path)
    if log_path is not None:
        atomic_write_bytes(log_path, ("\n".join(lines) + "\n").encode())
    model.requires_grad_(False)
    return result


__all__ = ["LossBreakdown", "TrainConfig", "TrainResult", "backward", "batch_loss",
           "composite_loss", "cross_entropy", "evaluate_loss", "focal_loss", "iou_loss", "train"]
