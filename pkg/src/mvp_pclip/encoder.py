"""Desk-scale CLIP stand-in: frozen transformer encoders with learnable prompts.

The image encoder injects visual prompt tokens at selected key layers and
exports the patch grid after each of them. The text encoder builds the
normal/abnormal sentences from shared "union" prompt rows, state-specific
rows, a state word and the class name.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

DTYPE = torch.float64

SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<oov>")
WORDS = (
    "a", "an", "the", "photo", "of", "depth", "image", "object", "part",
    "perfect", "flawless", "normal", "good", "damaged", "abnormal", "defective", "broken",
    "with", "without", "defect", "bump", "dent", "hole", "flash",
    "sphere", "box", "cylinder", "torus", "cone",
    "bagel", "cable", "gland", "carrot", "cookie", "dowel", "foam", "peach", "potato",
    "rope", "tire", "airplane", "candybar", "car", "chicken", "diamond", "duck", "fish",
    "gemstone", "seahorse", "shell", "starfish", "toffees",
)
VOCAB = SPECIAL_TOKENS + WORDS
PAD, BOS, EOS, OOV = range(4)


@dataclass(frozen=True)
class EncoderConfig:
    image_size: int = 64
    patch_size: int = 16
    n_layers: int = 8
    n_heads: int = 4
    dim: int = 64
    key_layers: Tuple[int, ...] = (2, 4, 6, 8)
    prompt_tokens_per_key_layer: int = 1
    text_vocab: int = 64
    text_len: int = 32
    text_layers: int = 4
    n_union: int = 8
    n_specific: int = 4
    mlp_ratio: int = 4
    seed: int = 0
    prompt_init_std: float = 0.02

    def __post_init__(self):
        object.__setattr__(self, "key_layers", tuple(int(k) for k in self.key_layers))
        if self.image_size % self.patch_size:
            raise ValueError("image_size must be divisible by patch_size")
        if not self.key_layers:
            raise ValueError("at least one key layer is required")
        if any(b <= a for a, b in zip(self.key_layers, self.key_layers[1:])):
            raise ValueError("key_layers must be strictly increasing")
        if self.key_layers[0] < 1 or self.key_layers[-1] > self.n_layers:
            raise ValueError(f"key layers must lie in [1, {self.n_layers}]")
        if self.dim % self.n_heads:
            raise ValueError("dim must be divisible by n_heads")
        if self.text_vocab < len(VOCAB):
            raise ValueError(f"text_vocab must be at least {len(VOCAB)}")
        if self.n_union < 0 or self.n_specific < 0 or self.prompt_tokens_per_key_layer < 0:
            raise ValueError("prompt counts must be non-negative")

    @property
    def grid(self) -> int:
        return self.image_size // self.patch_size

    @property
    def m(self) -> int:
        return len(self.key_layers)


# ---------------------------------------------------------------------------
# frozen backbone


def _orthogonal(gen: torch.Generator, rows: int, cols: int, gain: float = 1.0) -> torch.Tensor:
    a = torch.randn(max(rows, cols), min(rows, cols), generator=gen, dtype=DTYPE)
    q, r = torch.linalg.qr(a)
    q = q * torch.sign(torch.diagonal(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols].contiguous()


def _block_params(gen, dim, hidden):
    return {
        "wq": _orthogonal(gen, dim, dim),
        "wk": _orthogonal(gen, dim, dim),
        "wv": _orthogonal(gen, dim, dim),
        "wo": _orthogonal(gen, dim, dim, 0.5),
        "w1": _orthogonal(gen, dim, hidden, math.sqrt(2.0)),
        "b1": torch.zeros(hidden, dtype=DTYPE),
        "w2": _orthogonal(gen, hidden, dim, 0.5),
        "b2": torch.zeros(dim, dtype=DTYPE),
    }


class FrozenBackbone:
    """All non-prompt weights, generated from ``config.seed`` and never trained."""

    def __init__(self, config: EncoderConfig):
        self.config = config
        gen = torch.Generator().manual_seed(int(config.seed))
        d, p = config.dim, config.patch_size
        hidden = config.mlp_ratio * d
        n_patches = config.grid ** 2
        self.patch_embed = _orthogonal(gen, p * p, d, math.sqrt(d / (p * p)) * 4.0)
        self.class_embed = torch.randn(d, generator=gen, dtype=DTYPE)
        self.image_pos = 0.5 * torch.randn(n_patches + 1, d, generator=gen, dtype=DTYPE)
        self.image_blocks = [_block_params(gen, d, hidden) for _ in range(config.n_layers)]
        self.image_proj = _orthogonal(gen, d, d)
        self.token_embed = 0.02 * torch.randn(config.text_vocab, d, generator=gen, dtype=DTYPE)
        self.text_pos = 0.01 * torch.randn(config.text_len, d, generator=gen, dtype=DTYPE)
        self.text_blocks = [_block_params(gen, d, hidden) for _ in range(config.text_layers)]
        self.text_proj = _orthogonal(gen, d, d)

    def tensors(self) -> List[Tuple[str, torch.Tensor]]:
        out = [("patch_embed", self.patch_embed), ("class_embed", self.class_embed),
               ("image_pos", self.image_pos)]
        for i, blk in enumerate(self.image_blocks):
            out += [(f"image.{i}.{k}", v) for k, v in blk.items()]
        out += [("image_proj", self.image_proj), ("token_embed", self.token_embed),
                ("text_pos", self.text_pos)]
        for i, blk in enumerate(self.text_blocks):
            out += [(f"text.{i}.{k}", v) for k, v in blk.items()]
        out.append(("text_proj", self.text_proj))
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        for name, t in self.tensors():
            h.update(name.encode())
            h.update(t.detach().numpy().astype("<f8").tobytes())
        return h.hexdigest()


def _layer_norm(x: torch.Tensor) -> torch.Tensor:
    return F.layer_norm(x, x.shape[-1:], eps=1e-5)


def _block(x: torch.Tensor, p: Dict[str, torch.Tensor], n_heads: int,
           causal: bool = False) -> torch.Tensor:
    B, T, D = x.shape
    dh = D // n_heads
    h = _layer_norm(x)
    q = (h @ p["wq"]).view(B, T, n_heads, dh).transpose(1, 2)
    k = (h @ p["wk"]).view(B, T, n_heads, dh).transpose(1, 2)
    v = (h @ p["wv"]).view(B, T, n_heads, dh).transpose(1, 2)
    att = q @ k.transpose(-1, -2) / math.sqrt(dh)
    if causal:
        mask = torch.ones(T, T, dtype=torch.bool).triu(1)
        att = att.masked_fill(mask, float("-inf"))
    att = torch.softmax(att, dim=-1)
    o = (att @ v).transpose(1, 2).reshape(B, T, D)
    x = x + o @ p["wo"]
    h = _layer_norm(x)
    return x + F.gelu(h @ p["w1"] + p["b1"]) @ p["w2"] + p["b2"]


# ---------------------------------------------------------------------------
# prompt banks


@dataclass
class VisualPromptBank:
    B: Dict[int, torch.Tensor]

    @classmethod
    def init(cls, config: EncoderConfig, seed: int = 0, zero: bool = False) -> "VisualPromptBank":
        gen = torch.Generator().manual_seed(int(seed) + 1)
        shape = (config.prompt_tokens_per_key_layer, config.dim)
        bank = {}
        for j in config.key_layers:
            t = torch.randn(*shape, generator=gen, dtype=DTYPE) * config.prompt_init_std
            bank[j] = torch.zeros(shape, dtype=DTYPE) if zero else t
        return cls(bank)

    def parameters(self) -> List[torch.Tensor]:
        return [self.B[j] for j in sorted(self.B)]


@dataclass
class TextPromptBank:
    U: torch.Tensor
    S_normal: torch.Tensor
    S_abnormal: torch.Tensor
    state_words: Tuple[str, str] = ("perfect", "damaged")
    class_name: str = "object"

    def __post_init__(self):
        if self.S_normal.shape != self.S_abnormal.shape:
            raise ValueError("S_normal and S_abnormal must have the same shape")

    @classmethod
    def init(cls, config: EncoderConfig, seed: int = 0, **kw) -> "TextPromptBank":
        gen = torch.Generator().manual_seed(int(seed) + 2)
        std = config.prompt_init_std
        d = config.dim
        U = torch.randn(config.n_union, d, generator=gen, dtype=DTYPE) * std
        Sn = torch.randn(config.n_specific, d, generator=gen, dtype=DTYPE) * std
        Sa = torch.randn(config.n_specific, d, generator=gen, dtype=DTYPE) * std
        return cls(U, Sn, Sa, **kw)

    def for_class(self, class_name: str) -> "TextPromptBank":
        return replace(self, class_name=class_name)

    def parameters(self) -> List[torch.Tensor]:
        return [self.U, self.S_normal, self.S_abnormal]


# ---------------------------------------------------------------------------
# image pathway


@dataclass
class ImageEncoding:
    class_token: torch.Tensor
    key_layer_maps: List[torch.Tensor]


@dataclass
class BatchEncoding:
    """Encodings of a stack of views; ``maps`` is (views, m, grid, grid, dim)."""

    class_tokens: torch.Tensor
    maps: torch.Tensor

    def __len__(self):
        return self.class_tokens.shape[0]

    def view(self, k: int) -> ImageEncoding:
        return ImageEncoding(self.class_tokens[k], list(self.maps[k].unbind(0)))


def _patchify(images: torch.Tensor, p: int) -> torch.Tensor:
    N, H, W = images.shape
    g_h, g_w = H // p, W // p
    x = images.reshape(N, g_h, p, g_w, p).permute(0, 1, 3, 2, 4)
    return x.reshape(N, g_h * g_w, p * p)


def encode_images(images, backbone: FrozenBackbone, prompts: VisualPromptBank,
                  config: EncoderConfig) -> BatchEncoding:
    """Run the prompted image encoder on an (N, H, W) stack of views in [0, 1]."""
    images = torch.as_tensor(images, dtype=DTYPE)
    if images.ndim == 2:
        images = images[None]
    s = config.image_size
    if images.ndim != 3 or images.shape[1:] != (s, s):
        raise ValueError(f"expected images of shape (N, {s}, {s}), got {tuple(images.shape)}")
    if set(prompts.B) != set(config.key_layers):
        raise ValueError("visual prompt bank keys must equal the key layers")
    N = images.shape[0]
    g = config.grid
    tokens = _patchify(images, config.patch_size) @ backbone.patch_embed
    cls = backbone.class_embed.expand(N, 1, -1)
    x = _layer_norm(torch.cat([cls, tokens], dim=1) + backbone.image_pos)
    n_seq = x.shape[1]
    maps = []
    for j, blk in enumerate(backbone.image_blocks, start=1):
        if j in prompts.B:
            b = prompts.B[j]
            x = torch.cat([x, b.expand(N, -1, -1)], dim=1)
            x = _block(x, blk, config.n_heads)[:, :n_seq]
            feat = _layer_norm(x[:, 1:]) @ backbone.image_proj
            maps.append(feat.reshape(N, g, g, -1))
        else:
            x = _block(x, blk, config.n_heads)
    cls_out = F.normalize(_layer_norm(x[:, 0]) @ backbone.image_proj, dim=-1)
    return BatchEncoding(cls_out, torch.stack(maps, dim=1))


def encode_image(image, backbone: FrozenBackbone, prompts: VisualPromptBank,
                 config: EncoderConfig) -> ImageEncoding:
    image = torch.as_tensor(image, dtype=DTYPE)
    if image.ndim != 2:
        raise ValueError("encode_image expects a single H x W image")
    return encode_images(image[None], backbone, prompts, config).view(0)


# ---------------------------------------------------------------------------
# text pathway


def tokenize(text: str) -> List[int]:
    index = {w: i for i, w in enumerate(VOCAB)}
    return [index.get(w, OOV) for w in text.lower().replace("_", " ").split()]


def _embed_tokens(ids: Sequence[int], backbone: FrozenBackbone) -> torch.Tensor:
    return backbone.token_embed[torch.as_tensor(list(ids), dtype=torch.long)]


def build_text_prompts(bank: TextPromptBank, backbone: FrozenBackbone):
    """Embedded (normal, abnormal) sequences: BOS, U, S, state word, class, EOS."""
    cfg = backbone.config
    cls_ids = tokenize(bank.class_name)
    seqs = []
    for S, state in ((bank.S_normal, bank.state_words[0]), (bank.S_abnormal, bank.state_words[1])):
        length = 2 + bank.U.shape[0] + S.shape[0] + len(tokenize(state)) + len(cls_ids)
        if length > cfg.text_len:
            raise ValueError(f"prompt of {length} tokens exceeds text_len={cfg.text_len}")
        seqs.append(torch.cat([
            _embed_tokens([BOS], backbone), bank.U, S,
            _embed_tokens(tokenize(state) + cls_ids + [EOS], backbone),
        ]))
    return seqs[0], seqs[1]


def embed_text(text: str, backbone: FrozenBackbone) -> torch.Tensor:
    """Embedded sequence of a plain hand-written prompt such as "perfect bagel"."""
    ids = [BOS] + tokenize(text) + [EOS]
    if len(ids) > backbone.config.text_len:
        raise ValueError(f"prompt of {len(ids)} tokens exceeds text_len")
    return _embed_tokens(ids, backbone)


def encode_text(seq: torch.Tensor, backbone: FrozenBackbone) -> torch.Tensor:
    """Causal transformer over one embedded sequence; unit vector at the EOS slot."""
    T = seq.shape[0]
    if T > backbone.config.text_len:
        raise ValueError("sequence longer than text_len")
    x = (seq + backbone.text_pos[:T])[None]
    for blk in backbone.text_blocks:
        x = _block(x, blk, backbone.config.n_heads, causal=True)
    out = _layer_norm(x[0, -1]) @ backbone.text_proj
    return F.normalize(out, dim=-1)


def text_features(bank: TextPromptBank, backbone: FrozenBackbone) -> torch.Tensor:
    """The 2 x dim matrix G with rows (normal, abnormal)."""
    seq_n, seq_a = build_text_prompts(bank, backbone)
    return torch.stack([encode_text(seq_n, backbone), encode_text(seq_a, backbone)])


def naive_text_features(class_name: str, backbone: FrozenBackbone,
                        state_words=("perfect", "damaged")) -> torch.Tensor:
    return torch.stack([
        encode_text(embed_text(f"{w} {class_name}", backbone), backbone) for w in state_words
    ])


__all__ = [
    "BatchEncoding", "DTYPE", "EncoderConfig", "FrozenBackbone", "ImageEncoding",
    "TextPromptBank", "VOCAB", "VisualPromptBank", "build_text_prompts", "embed_text",
    "encode_image", "encode_images", "encode_text", "naive_text_features",
    "text_features", "tokenize",
]
