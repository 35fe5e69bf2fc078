"""Autoregressive inference: synthesis, completion, text guidance, replacement.

Decoding loop per step: stop decision (argmax by default), retrieval of the
next asset from the optionally text-guided predicted embedding, then sampled
translation, yaw and size in cascade. The retrieved asset's true pooled
embedding is fed back as context for later steps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import torch

from .embedding import EmbeddingIndex, EncoderBackend, embed_text, retrieve_topk
from .likelihoods import mol_mode_seek, mol_sample
from .model import SceneModel
from .scene import (
    FurnitureInstance,
    NormalizationBounds,
    NormalizedTransform7,
    Scene,
    denormalize_transform,
    normalize_transform,
)


@dataclass
class GuidanceConfig:
    prompt: str | None = None
    w0: float = 0.35  # midpoint of the working range 0.2..0.5
    decay: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.w0 <= 1.0:
            raise ValueError("w0 must be in [0, 1]")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must be in (0, 1]")

    def weight(self, step: int) -> float:
        return self.w0 * self.decay**step


@dataclass
class SynthesisLimits:
    max_new: int = 32
    k: int = 10
    temperature: float = 1.0
    sample_stop: bool = False
    room_type_filter: bool = True
    # mode-seeking decode: each attribute takes the location of its highest-
    # weight mixture component instead of a random draw
    greedy_transforms: bool = False


@dataclass
class TraceStep:
    step: int
    asset_id: str | None
    transform: list[float] | None
    stop_probability: float


@dataclass
class SynthesisTrace:
    steps: list[TraceStep] = field(default_factory=list)
    truncated: bool = False

    def to_json(self) -> dict:
        return {
            "steps": [s.__dict__ for s in self.steps],
            "truncated": self.truncated,
        }


def apply_text_guidance(hhat: np.ndarray, t_raw: np.ndarray, w_t: float) -> np.ndarray:
    """Interpolate the predicted embedding with a norm-matched edit vector."""
    if not 0.0 <= w_t <= 1.0:
        raise ValueError("w_t must be in [0, 1]")
    h_norm = float(np.linalg.norm(hhat))
    if h_norm == 0.0:
        warnings.warn("predicted embedding has zero norm, guidance skipped", stacklevel=2)
        return hhat
    t_norm = float(np.linalg.norm(t_raw))
    if t_norm == 0.0:
        raise ValueError("edit vector must have nonzero norm")
    t = t_raw * (h_norm / t_norm)
    return (1.0 - w_t) * hhat + w_t * t


def _encode_context(model: SceneModel, index: EmbeddingIndex, scene: Scene, bounds):
    if not scene.instances:
        return torch.zeros(1, 0, model.config.feature_dim)
    hs = torch.tensor(
        np.stack([index.row(i.asset_id) for i in scene.instances]), dtype=torch.float32
    )
    ts = torch.tensor(
        np.stack(
            [normalize_transform(i.transform, bounds, strict=False).values for i in scene.instances]
        ),
        dtype=torch.float32,
    )
    return model.encode_instance(hs, ts).unsqueeze(0)


def _sample_instance(
    model: SceneModel,
    qhat: torch.Tensor,
    asset_embedding: np.ndarray,
    bounds: NormalizationBounds,
    rng: np.random.Generator,
    greedy: bool = False,
):
    """Cascaded attribute decoding given the chosen asset embedding."""

    def draw(block):
        return mol_mode_seek(block) if greedy else mol_sample(block, rng)

    h = torch.tensor(asset_embedding, dtype=torch.float32).unsqueeze(0)
    with torch.no_grad():
        pred = model.cascade(qhat, chosen_embedding=h)
        t = draw(_squeeze(pred.translation))
        pred = model.cascade(qhat, chosen_embedding=h, translation=torch.tensor(t).float().unsqueeze(0))
        y = draw(_squeeze(pred.rotation))
        pred = model.cascade(
            qhat,
            chosen_embedding=h,
            translation=torch.tensor(t).float().unsqueeze(0),
            yaw=torch.tensor(y).float().reshape(1, 1),
        )
        s = draw(_squeeze(pred.size))
    v = NormalizedTransform7(tuple(np.concatenate([t, s, np.atleast_1d(y)]).tolist()))
    return denormalize_transform(v, bounds)


def _squeeze(mol):
    from .likelihoods import MixtureOfLogistics

    return MixtureOfLogistics(mol.logits[0], mol.locs[0], mol.log_scales[0])


def complete_scene(
    model: SceneModel,
    index: EmbeddingIndex,
    scene: Scene,
    bounds: NormalizationBounds,
    guidance: GuidanceConfig | None = None,
    rng: np.random.Generator | None = None,
    limits: SynthesisLimits | None = None,
    encoder: EncoderBackend | None = None,
) -> tuple[Scene, SynthesisTrace]:
    """Autoregressively add instances to the scene until the stop head fires.

    Input instances are never removed or mutated; guidance weight decays
    exponentially per generated step.
    """
    guidance = guidance or GuidanceConfig()
    limits = limits or SynthesisLimits()
    rng = rng or np.random.default_rng()
    if len(scene.instances) > model.config.max_instances:
        raise ValueError("scene already exceeds max instances")

    pool = index.for_room_type(scene.room_type) if limits.room_type_filter else index
    text_emb = None
    if guidance.prompt:
        if encoder is None:
            raise ValueError("text guidance requires an encoder backend")
        text_emb = embed_text(guidance.prompt, encoder)

    model.eval()
    out = Scene(
        id=scene.id,
        room_type=scene.room_type,
        floor=scene.floor,
        instances=list(scene.instances),
        extra=dict(scene.extra),
    )
    trace = SynthesisTrace()
    # never let the context outgrow what the model was configured to attend over
    budget = min(limits.max_new, model.config.max_instances - len(scene.instances))
    with torch.no_grad():
        floor_feat = model.encode_floor(torch.tensor(out.floor.mask, dtype=torch.float32))
        for step in range(budget + 1):
            ctx = _encode_context(model, index, out, bounds)
            qhat = model.query_features(floor_feat, ctx)
            pred = model.cascade(qhat)
            stop_probs = torch.softmax(pred.stop_logits, dim=-1)[0]
            p_stop = float(stop_probs[1])
            if limits.sample_stop:
                stopped = bool(rng.uniform() < p_stop)
            else:
                stopped = p_stop >= 0.5
            if stopped:
                trace.steps.append(TraceStep(step, None, None, p_stop))
                return out, trace
            if step == budget:
                trace.truncated = True
                trace.steps.append(TraceStep(step, None, None, p_stop))
                return out, trace
            hhat = pred.predicted_embedding[0].numpy().astype(np.float64)
            query = hhat
            if text_emb is not None:
                w_t = guidance.weight(step)
                if w_t > 0:
                    query = apply_text_guidance(hhat, text_emb, w_t)
            asset_id = retrieve_topk(pool, query, k=limits.k, temperature=limits.temperature, rng=rng)
            # feed the retrieved asset's true pooled embedding back
            transform = _sample_instance(
                model, qhat, index.row(asset_id).astype(np.float64), bounds, rng,
                greedy=limits.greedy_transforms,
            )
            out.instances.append(FurnitureInstance(asset_id=asset_id, transform=transform))
            trace.steps.append(TraceStep(step, asset_id, list(transform.to_vector()), p_stop))
    return out, trace


def generate_scene(
    model: SceneModel,
    index: EmbeddingIndex,
    floor_scene: Scene,
    bounds: NormalizationBounds,
    guidance: GuidanceConfig | None = None,
    rng: np.random.Generator | None = None,
    limits: SynthesisLimits | None = None,
    encoder: EncoderBackend | None = None,
) -> tuple[Scene, SynthesisTrace]:
    """Full synthesis from a bare floor plan (instances of the input ignored)."""
    empty = Scene(
        id=floor_scene.id,
        room_type=floor_scene.room_type,
        floor=floor_scene.floor,
        instances=[],
        extra=dict(floor_scene.extra),
    )
    return complete_scene(model, index, empty, bounds, guidance, rng, limits, encoder)


def replace_instance(
    model: SceneModel,
    index: EmbeddingIndex,
    scene: Scene,
    instance_id: int,
    prompt: str,
    bounds: NormalizationBounds,
    encoder: EncoderBackend,
    rng: np.random.Generator | None = None,
    k: int = 1,
    temperature: float = 1.0,
) -> Scene:
    """Swap one instance for a text-retrieved asset, re-predicting its placement.

    One fresh decode pass runs with the remaining instances as context and the
    retrieved embedding teacher-forced; all other instances are untouched.
    """
    rng = rng or np.random.default_rng()
    if not 0 <= instance_id < len(scene.instances):
        raise KeyError(f"unknown instance {instance_id}")
    remaining = [inst for i, inst in enumerate(scene.instances) if i != instance_id]
    partial = Scene(
        id=scene.id,
        room_type=scene.room_type,
        floor=scene.floor,
        instances=remaining,
        extra=dict(scene.extra),
    )
    text_emb = embed_text(prompt, encoder)
    asset_id = retrieve_topk(index, text_emb, k=k, temperature=temperature, rng=rng)
    model.eval()
    with torch.no_grad():
        floor_feat = model.encode_floor(torch.tensor(scene.floor.mask, dtype=torch.float32))
        ctx = _encode_context(model, index, partial, bounds)
        qhat = model.query_features(floor_feat, ctx)
    transform = _sample_instance(model, qhat, index.row(asset_id).astype(np.float64), bounds, rng)
    instances = list(scene.instances)
    instances[instance_id] = FurnitureInstance(asset_id=asset_id, transform=transform)
    return Scene(
        id=scene.id,
        room_type=scene.room_type,
        floor=scene.floor,
        instances=instances,
        extra=dict(scene.extra),
    )
