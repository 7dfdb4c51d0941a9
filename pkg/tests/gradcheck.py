"""Finite-difference gradient check on the tiny encoder configuration."""

import numpy as np

from mvp_pclip.data import make_cloud
from mvp_pclip.encoder import EncoderConfig
from mvp_pclip.model import MVPCLIP, PipelineConfig
from mvp_pclip.training import TrainConfig, backward, batch_loss

from oracles import central_differences


def tiny_config(prompt_init_std=1.0):
    return EncoderConfig(image_size=4, patch_size=2, n_layers=2, n_heads=2, dim=8,
                         key_layers=(1, 2), text_layers=2, n_union=2, n_specific=2,
                         prompt_init_std=prompt_init_std)


def tiny_case(seed, prompt_init_std=1.0):
    rng = np.random.default_rng(seed)
    cloud, _ = make_cloud("sphere", 60, rng, "bump", area=0.2)
    model = MVPCLIP(PipelineConfig(encoder=tiny_config(prompt_init_std), views=3), prompt_seed=seed)
    return model, model.prepare(cloud)


def worst_relative_error(seed, h=1e-4, prompt_init_std=1.0):
    """Largest per-entry |analytic - numeric| / max(|analytic|, |numeric|) over all prompts."""
    model, prep = tiny_case(seed, prompt_init_std)
    cfg = TrainConfig()
    analytic = backward(model, [prep], cfg)

    def loss():
        return float(batch_loss(model, [prep], cfg)[0].detach())

    numeric = central_differences(loss, model.parameters(), h)
    worst = 0.0
    for (name, _), n in zip(model.named_parameters(), numeric):
        a = analytic[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst
