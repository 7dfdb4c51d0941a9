"""Zero-shot point cloud anomaly detection by multi-view depth projection and prompted encoders."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, load_config
from .data import SyntheticSpec, generate, load_cloud, save_cloud
from .encoder import EncoderConfig, FrozenBackbone, TextPromptBank, VisualPromptBank
from .geometry import (BEHIND, CameraIntrinsics, PointCloud, RigidTransform, ViewRig, back_project,
                       generate_view_rig, normalize_cloud, project_point)
from .metrics import EvalReport, evaluate
from .model import MVPCLIP, PipelineConfig
from .rendering import coverage, render_all, render_view
from .scoring import AnomalyResult, aggregate_point_features, integrate_view_scores
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "AnomalyResult", "BEHIND", "CameraIntrinsics", "ConfigError", "EncoderConfig", "EvalReport",
    "FrozenBackbone", "MVPCLIP", "PipelineConfig", "PointCloud", "RigidTransform", "RunConfig",
    "SyntheticSpec", "TextPromptBank", "TrainConfig", "ViewRig", "VisualPromptBank",
    "aggregate_point_features", "back_project", "coverage", "evaluate", "generate",
    "generate_view_rig", "integrate_view_scores", "load_checkpoint", "load_cloud", "load_config",
    "normalize_cloud", "project_point", "render_all", "render_view", "save_checkpoint",
    "save_cloud", "train",
]
