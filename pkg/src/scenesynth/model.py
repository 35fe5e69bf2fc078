"""Autoregressive scene network.

Floor masks and already-placed instances are encoded into a feature set; a
transformer without positional encoding attends over that set plus a learned
query token, so the output is invariant to instance order. The query output
drives a cascade of heads: stop decision, predicted semantic embedding, then
mixture-of-logistics blocks for translation, yaw and size, each conditioned
on everything decided before it.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .embedding import EMBED_DIM, EmbeddingIndex
from .likelihoods import MixtureOfLogistics, mol_mean
from .scene import NormalizationBounds


@dataclass
class ModelConfig:
    feature_dim: int = 512
    query_dim: int = 512
    n_layers: int = 4
    n_heads: int = 8
    ff_dim: int = 1024
    mol_components: int = 10
    sinusoid_freqs: int = 16
    embed_dim: int = EMBED_DIM
    embed_proj_dim: int = 64
    head_hidden: int = 256
    max_instances: int = 32
    mask_resolution: int = 64
    floor_encoder: str = "resnet18"  # "resnet18" or "conv4" (small, desk-scale)
    dropout: float = 0.0

    def __post_init__(self):
        if self.feature_dim % self.n_heads:
            raise ValueError("feature_dim must be divisible by n_heads")
        for name in ("feature_dim", "query_dim", "n_layers", "n_heads", "ff_dim",
                     "mol_components", "sinusoid_freqs", "embed_proj_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class StepPrediction:
    """One decoding step, fields in cascade dependency order."""

    stop_logits: torch.Tensor  # (B, 2)
    predicted_embedding: torch.Tensor  # (B, embed_dim)
    translation: MixtureOfLogistics  # (B, 3, K)
    rotation: MixtureOfLogistics  # (B, 1, K)
    size: MixtureOfLogistics  # (B, 3, K)


def positional_encode(v: torch.Tensor, n_freqs: int) -> torch.Tensor:
    """Fixed sine-cosine code per scalar: (sin(2^l pi x), cos(2^l pi x)), l < L.

    Input (..., D) maps to (..., D * 2L), component order fixed.
    """
    freqs = (2.0 ** torch.arange(n_freqs, dtype=v.dtype, device=v.device)) * math.pi
    ang = v.unsqueeze(-1) * freqs  # (..., D, L)
    enc = torch.stack([torch.sin(ang), torch.cos(ang)], dim=-1)  # (..., D, L, 2)
    return enc.reshape(*v.shape[:-1], v.shape[-1] * 2 * n_freqs)


class Conv4FloorEncoder(nn.Module):
    """Small strided CNN for desk-scale runs; drop-in for the resnet path."""

    def __init__(self, feature_dim: int):
        super().__init__()
        chans = [1, 16, 32, 64, 128]
        blocks = []
        for cin, cout in zip(chans, chans[1:]):
            blocks += [nn.Conv2d(cin, cout, 3, stride=2, padding=1), nn.ReLU()]
        self.body = nn.Sequential(*blocks)
        self.fc = nn.Linear(chans[-1], feature_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.body(x)
        return self.fc(h.mean(dim=(2, 3)))


def _resnet18_encoder(feature_dim: int) -> nn.Module:
    from torchvision.models import resnet18

    net = resnet18(weights=None)
    net.conv1 = nn.Conv2d(1, 64, kernel_size=7, stride=2, padding=3, bias=False)
    net.fc = nn.Linear(net.fc.in_features, feature_dim)
    return net


def _mlp(dims: list[int]) -> nn.Sequential:
    layers = []
    for i, (a, b) in enumerate(zip(dims, dims[1:])):
        layers.append(nn.Linear(a, b))
        if i < len(dims) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class SceneModel(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.feature_dim
        if config.floor_encoder == "resnet18":
            self.floor_encoder = _resnet18_encoder(d)
        elif config.floor_encoder == "conv4":
            self.floor_encoder = Conv4FloorEncoder(d)
        else:
            raise ValueError(f"unknown floor encoder {config.floor_encoder!r}")

        self.embed_mlp = _mlp([config.embed_dim, config.head_hidden, config.embed_proj_dim])
        pe_dim = 7 * 2 * config.sinusoid_freqs
        self.instance_proj = nn.Linear(config.embed_proj_dim + pe_dim, d)

        self.query = nn.Parameter(torch.randn(config.query_dim) / math.sqrt(config.query_dim))
        self.query_proj = (
            nn.Identity() if config.query_dim == d else nn.Linear(config.query_dim, d)
        )

        layer = nn.TransformerEncoderLayer(
            d_model=d,
            nhead=config.n_heads,
            dim_feedforward=config.ff_dim,
            dropout=config.dropout,
            batch_first=True,
            activation="gelu",
        )
        self.transformer = nn.TransformerEncoder(layer, num_layers=config.n_layers)

        k = config.mol_components
        hh = config.head_hidden
        p = config.embed_proj_dim
        self.stop_head = _mlp([d, hh, 2])
        self.embedding_head = _mlp([d + 2, hh, config.embed_dim])
        self.trans_head = _mlp([d + p, hh, 3 * 3 * k])
        self.rot_head = _mlp([d + p + 3, hh, 3 * k])
        self.size_head = _mlp([d + p + 3 + 1, hh, 3 * 3 * k])

    # --- encoders -------------------------------------------------------

    def encode_floor(self, mask: torch.Tensor) -> torch.Tensor:
        """Binary mask (B, R, R) or (R, R) -> floor feature (B, D)."""
        if mask.dim() == 2:
            mask = mask.unsqueeze(0)
        if mask.shape[-1] != self.config.mask_resolution:
            raise ValueError(
                f"mask resolution {mask.shape[-1]} != configured {self.config.mask_resolution}"
            )
        return self.floor_encoder(mask.unsqueeze(1).float())

    def encode_instance(self, h: torch.Tensor, t_norm: torch.Tensor) -> torch.Tensor:
        """Semantic embedding (…, 512) + normalized transform (…, 7) -> C (…, D)."""
        emb = self.embed_mlp(h.float())
        pe = positional_encode(t_norm.float(), self.config.sinusoid_freqs)
        return self.instance_proj(torch.cat([emb, pe], dim=-1))

    # --- decoding -------------------------------------------------------

    def _mol_block(self, raw: torch.Tensor, n_attr: int) -> MixtureOfLogistics:
        k = self.config.mol_components
        raw = raw.reshape(*raw.shape[:-1], n_attr, 3, k)
        return MixtureOfLogistics(
            logits=raw[..., 0, :], locs=raw[..., 1, :], log_scales=raw[..., 2, :]
        )

    def query_features(
        self,
        floor_feature: torch.Tensor,
        ctx: torch.Tensor,
        ctx_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Attend over {floor} u ctx u {query}; return the query-position output.

        ctx: (B, T, D) encoded instances, ctx_mask: (B, T) True where valid.
        """
        if floor_feature.dim() == 1:
            floor_feature = floor_feature.unsqueeze(0)
        b = floor_feature.shape[0]
        if ctx.numel() == 0:
            ctx = ctx.reshape(b, 0, self.config.feature_dim)
        if ctx.shape[1] > self.config.max_instances:
            raise ValueError(f"context size {ctx.shape[1]} exceeds max {self.config.max_instances}")
        q = self.query_proj(self.query).expand(b, 1, -1)
        tokens = torch.cat([floor_feature.unsqueeze(1), ctx, q], dim=1)
        if ctx_mask is not None:
            pad = torch.zeros(b, 1, dtype=torch.bool, device=tokens.device)
            key_padding = torch.cat([pad, ~ctx_mask, pad], dim=1)
        else:
            key_padding = None
        out = self.transformer(tokens, src_key_padding_mask=key_padding)
        return out[:, -1]

    def cascade(
        self,
        qhat: torch.Tensor,
        chosen_embedding: torch.Tensor | None = None,
        translation: torch.Tensor | None = None,
        yaw: torch.Tensor | None = None,
    ) -> StepPrediction:
        """Run the heads in dependency order from the query feature.

        Teacher inputs are optional: absent, the predicted embedding and each
        block's mixture mean feed the next head (deterministic cascade).
        """
        stop_logits = self.stop_head(qhat)
        stop_probs = torch.softmax(stop_logits, dim=-1)
        hhat = self.embedding_head(torch.cat([qhat, stop_probs], dim=-1))
        emb_in = hhat if chosen_embedding is None else chosen_embedding.float()
        emb_feat = self.embed_mlp(emb_in)
        trans = self._mol_block(self.trans_head(torch.cat([qhat, emb_feat], dim=-1)), 3)
        t_in = mol_mean(trans).detach() if translation is None else translation.float()
        rot = self._mol_block(self.rot_head(torch.cat([qhat, emb_feat, t_in], dim=-1)), 1)
        y_in = mol_mean(rot).detach() if yaw is None else yaw.float()
        if y_in.dim() == 1:
            y_in = y_in.unsqueeze(-1)
        size = self._mol_block(self.size_head(torch.cat([qhat, emb_feat, t_in, y_in], dim=-1)), 3)
        return StepPrediction(
            stop_logits=stop_logits,
            predicted_embedding=hhat,
            translation=trans,
            rotation=rot,
            size=size,
        )

    def decode_step(
        self,
        floor_feature: torch.Tensor,
        ctx: torch.Tensor,
        ctx_mask: torch.Tensor | None = None,
        chosen_embedding: torch.Tensor | None = None,
        translation: torch.Tensor | None = None,
        yaw: torch.Tensor | None = None,
    ) -> StepPrediction:
        qhat = self.query_features(floor_feature, ctx, ctx_mask)
        return self.cascade(qhat, chosen_embedding, translation, yaw)


def embedding_logits(hhat: torch.Tensor, index: EmbeddingIndex) -> torch.Tensor:
    """Dot-product scores of the predicted embedding against every index row."""
    mat = torch.as_tensor(index.matrix, dtype=hhat.dtype, device=hhat.device)
    if hhat.shape[-1] != mat.shape[1]:
        raise ValueError("embedding dimension mismatch with index")
    return hhat @ mat.T


def index_fingerprint(index: EmbeddingIndex) -> str:
    h = hashlib.sha1(index.matrix.tobytes())
    h.update("|".join(index.ids).encode())
    return h.hexdigest()


def save_checkpoint(
    path,
    model: SceneModel,
    bounds: NormalizationBounds,
    encoder_name: str = "stub",
    encoder_version: str = "1",
    index_hash: str = "",
    optimizer_state: dict | None = None,
    step: int = 0,
) -> None:
    torch.save(
        {
            "state_dict": model.state_dict(),
            "config": asdict(model.config),
            "bounds": bounds.to_json(),
            "encoder": {"name": encoder_name, "version": encoder_version},
            "index_hash": index_hash,
            "optimizer_state": optimizer_state,
            "step": step,
        },
        path,
    )


def load_checkpoint(path) -> tuple[SceneModel, NormalizationBounds, dict]:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    model = SceneModel(ModelConfig(**blob["config"]))
    model.load_state_dict(blob["state_dict"])
    model.eval()
    bounds = NormalizationBounds.from_json(blob["bounds"])
    return model, bounds, blob
