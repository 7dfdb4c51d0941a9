"""End-to-end prompted multi-view detector: render, encode, aggregate, score."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from .encoder import (DTYPE, EncoderConfig, FrozenBackbone, TextPromptBank, VisualPromptBank,
                      encode_images, text_features)
from .geometry import CameraIntrinsics, PointCloud, ViewRig, generate_view_rig, normalize_cloud
from .rendering import RenderedSet, render_all
from .scoring import (DEFAULT_TAU, AggregationPlan, AnomalyResult, aggregate_with_plan,
                      anomaly_map_tensor, anomaly_score_tensor)


@dataclass(frozen=True)
class PipelineConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    views: int = 9
    rig_radius: float = 2.5
    splat_radius: int = 1
    tau: float = DEFAULT_TAU
    state_words: Tuple[str, str] = ("perfect", "damaged")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["encoder"]["key_layers"] = list(self.encoder.key_layers)
        d["state_words"] = list(self.state_words)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        enc = EncoderConfig(**d.pop("encoder"))
        d["state_words"] = tuple(d["state_words"])
        return cls(encoder=enc, **d)


@dataclass
class PreparedCloud:
    """Everything about a cloud that does not depend on the prompts."""

    images: torch.Tensor
    plan: AggregationPlan
    n: int
    category: str
    labels: Optional[np.ndarray]
    object_label: Optional[int]
    rendered: RenderedSet


class MVPCLIP:
    """Frozen backbone plus the learnable prompt banks."""

    def __init__(self, config: PipelineConfig = PipelineConfig(), prompt_seed: int = 0,
                 rig: Optional[ViewRig] = None):
        self.config = config
        enc = config.encoder
        self.backbone = FrozenBackbone(enc)
        self.visual = VisualPromptBank.init(enc, prompt_seed)
        self.text = TextPromptBank.init(enc, prompt_seed, state_words=tuple(config.state_words))
        if rig is None:
            rig = generate_view_rig(config.views, config.rig_radius,
                                    intrinsics=CameraIntrinsics.default(enc.image_size))
        self.rig = rig

    # -- parameters -------------------------------------------------------
    def named_parameters(self) -> List[Tuple[str, torch.Tensor]]:
        out = [(f"B{j}", self.visual.B[j]) for j in sorted(self.visual.B)]
        out += [("U", self.text.U), ("S_normal", self.text.S_normal),
                ("S_abnormal", self.text.S_abnormal)]
        return out

    def parameters(self) -> List[torch.Tensor]:
        return [p for _, p in self.named_parameters()]

    def load_parameters(self, arrays: Dict[str, np.ndarray]) -> None:
        for name, p in self.named_parameters():
            if name not in arrays:
                raise KeyError(f"missing prompt parameter {name}")
            value = torch.as_tensor(np.asarray(arrays[name]), dtype=DTYPE)
            if value.shape != p.shape:
                raise ValueError(f"{name}: shape {tuple(value.shape)} != {tuple(p.shape)}")
            with torch.no_grad():
                p.copy_(value)

    def requires_grad_(self, flag: bool = True) -> "MVPCLIP":
        for p in self.parameters():
            p.requires_grad_(flag)
        return self

    def with_rig(self, rig: ViewRig) -> "MVPCLIP":
        """A detector sharing weights and prompts but rendering through ``rig``."""
        other = object.__new__(MVPCLIP)
        other.__dict__.update(self.__dict__)
        other.rig = rig
        return other

    # -- forward ----------------------------------------------------------
    def prepare(self, cloud: PointCloud) -> PreparedCloud:
        norm = normalize_cloud(cloud)
        rendered = render_all(norm, self.rig, self.config.splat_radius)
        enc = self.config.encoder
        plan = AggregationPlan.build(rendered.correspondences, enc.grid, enc.m)
        return PreparedCloud(torch.as_tensor(rendered.images(), dtype=DTYPE), plan, len(cloud),
                             cloud.category, cloud.labels, cloud.object_label, rendered)

    def text_features(self, class_name: str) -> torch.Tensor:
        return text_features(self.text.for_class(class_name or "object"), self.backbone)

    def forward(self, prep: PreparedCloud, G: Optional[torch.Tensor] = None):
        """Return ``(score, map)`` tensors for one prepared cloud."""
        if G is None:
            G = self.text_features(prep.category)
        enc = encode_images(prep.images, self.backbone, self.visual, self.config.encoder)
        feats = aggregate_with_plan(enc.maps, prep.plan)
        xi = anomaly_score_tensor(enc.class_tokens, G, self.config.tau)
        A = anomaly_map_tensor(feats, G, self.config.tau)
        return xi, A

    def score(self, cloud: PointCloud) -> AnomalyResult:
        return self.score_prepared(self.prepare(cloud))

    def score_prepared(self, prep: PreparedCloud) -> AnomalyResult:
        with torch.no_grad():
            xi, A = self.forward(prep)
        return AnomalyResult(float(xi), A.numpy().copy())


__all__ = ["MVPCLIP", "PipelineConfig", "PreparedCloud"]
