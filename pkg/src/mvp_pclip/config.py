"""Flat ``key = value`` run configuration with command-line overrides.

Every key of :class:`RunConfig` may appear at most once in a file. Lines
starting with ``#`` and trailing ``# ...`` are comments. Unknown keys,
duplicate keys and unparseable values raise :class:`ConfigError` naming the
offending key. Tuple-valued keys take comma-separated values.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, Iterable, Mapping, Tuple

from .data import ANOMALY_TYPES, CATEGORIES, SyntheticSpec
from .encoder import EncoderConfig
from .model import PipelineConfig
from .scoring import DEFAULT_TAU
from .training import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    backbone_seed: int = 0
    # rendering
    views: int = 9
    image_size: int = 64
    rig_radius: float = 2.5
    splat_radius: int = 1
    # encoder
    patch_size: int = 16
    n_layers: int = 8
    n_heads: int = 4
    dim: int = 64
    key_layers: Tuple[int, ...] = (2, 4, 6, 8)
    prompt_tokens: int = 1
    text_layers: int = 4
    text_len: int = 32
    n_union: int = 8
    n_specific: int = 4
    prompt_init_std: float = 0.02
    state_words: Tuple[str, ...] = ("perfect", "damaged")
    # scoring
    tau: float = DEFAULT_TAU
    # training
    learning_rate: float = 0.0005
    epochs: int = 3
    batch: int = 1
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25
    # synthetic data
    categories: Tuple[str, ...] = CATEGORIES
    train_categories: Tuple[str, ...] = ("sphere", "box", "cylinder")
    anomaly_types: Tuple[str, ...] = ANOMALY_TYPES
    points_per_cloud: int = 800
    clouds_per_category: int = 40
    anomaly_fraction: float = 0.5
    anomaly_area: float = 0.05
    displacement: Tuple[float, ...] = (0.03, 0.08)
    # sweeps
    sweep_views: Tuple[int, ...] = (1, 3, 5, 7, 9)
    sweep_repeats: int = 3
    # paths
    data_dir: str = "data"
    out_dir: str = "runs"

    def __post_init__(self):
        if len(self.state_words) != 2:
            raise ConfigError("state_words: expected exactly two words")
        if len(self.displacement) != 2:
            raise ConfigError("displacement: expected 'low, high'")
        if not self.sweep_views or min(self.sweep_views) < 1:
            raise ConfigError("sweep_views: expected positive view counts")
        if self.sweep_repeats < 1:
            raise ConfigError("sweep_repeats: must be at least 1")
        # surface invariant violations from the module configs under the right key
        for build in (self.encoder, self.pipeline, self.train_config, self.synthetic_spec):
            try:
                build()
            except ConfigError:
                raise
            except (ValueError, TypeError) as exc:
                raise ConfigError(str(exc)) from None

    # -- module configs --------------------------------------------------
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(
            image_size=self.image_size, patch_size=self.patch_size, n_layers=self.n_layers,
            n_heads=self.n_heads, dim=self.dim, key_layers=tuple(self.key_layers),
            prompt_tokens_per_key_layer=self.prompt_tokens, text_len=self.text_len,
            text_layers=self.text_layers, n_union=self.n_union, n_specific=self.n_specific,
            seed=self.backbone_seed, prompt_init_std=self.prompt_init_std)

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(encoder=self.encoder(), views=self.views,
                              rig_radius=self.rig_radius, splat_radius=self.splat_radius,
                              tau=self.tau, state_words=tuple(self.state_words))

    def train_config(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate, epochs=self.epochs,
                           batch=self.batch, seed=self.seed, focal_gamma=self.focal_gamma,
                           focal_alpha=self.focal_alpha)

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            categories=self.categories, points_per_cloud=self.points_per_cloud,
            clouds_per_category=self.clouds_per_category, anomaly_types=self.anomaly_types,
            anomaly_fraction=self.anomaly_fraction, anomaly_area=self.anomaly_area,
            seed=self.seed, train_categories=self.train_categories,
            displacement=tuple(self.displacement))

    # -- serialisation ---------------------------------------------------
    def to_text(self) -> str:
        """Canonical form: every key in declaration order, values as parsed back."""
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def with_overrides(self, overrides: Mapping[str, str]) -> "RunConfig":
        return replace(self, **_coerce_all(overrides))


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_TUPLE_ITEM = {"key_layers": int, "sweep_views": int, "displacement": float}


def _coerce(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key '{key}'")
    default = _FIELDS[key].default
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            items = [w.strip() for w in raw.split(",") if w.strip()]
            return tuple(_TUPLE_ITEM.get(key, str)(w) for w in items)
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.lower() == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"config key '{key}': cannot parse value {raw!r}") from None


def _coerce_all(pairs: Mapping[str, str]) -> Dict[str, object]:
    return {k: _coerce(k, v) for k, v in pairs.items()}


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """Raw ``key -> value`` strings; rejects malformed lines, unknown and duplicate keys."""
    out: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source} line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source} line {lineno}: unknown config key '{key}'")
        if key in out:
            raise ConfigError(f"{source} line {lineno}: duplicate config key '{key}'")
        out[key] = value
    return out


def parse_overrides(args: Iterable[str]) -> Dict[str, str]:
    """``--key=value`` strings (dashes in keys map to underscores)."""
    out: Dict[str, str] = {}
    for arg in args:
        if not arg.startswith("--") or "=" not in arg:
            raise ConfigError(f"override {arg!r}: expected --key=value")
        key, value = arg[2:].split("=", 1)
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key '{key}'")
        out[key] = value
    return out


def load_config(path=None, overrides: Mapping[str, str] = None) -> RunConfig:
    raw: Dict[str, str] = {}
    if path is not None:
        raw = parse_config_text(Path(path).read_text(), str(path))
    raw.update(overrides or {})
    return RunConfig(**_coerce_all(raw))


__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config_text", "parse_overrides"]
