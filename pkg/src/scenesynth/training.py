"""Dataset sampling, losses and the optimization loop.

Each example is one Monte-Carlo term of the permutation-summed objective: a
random augmentation of a scene, a uniformly sized random subset as context,
and either one held-out instance or the stop label as the target.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .embedding import EmbeddingIndex
from .likelihoods import mol_log_prob
from .model import (
    ModelConfig,
    SceneModel,
    StepPrediction,
    embedding_logits,
    index_fingerprint,
    load_checkpoint,
    save_checkpoint,
)
from .scene import NormalizationBounds, Scene, augment_scene, compute_bounds, normalize_transform

AUGMENT_OPS = ("none", "rotate", "mirror_x", "mirror_z")


@dataclass
class TrainingExample:
    mask: np.ndarray  # (R, R)
    ctx_h: np.ndarray  # (T, 512)
    ctx_t: np.ndarray  # (T, 7) normalized
    stop: bool
    target_row: int = -1  # row in the index, -1 on stop
    target_t: np.ndarray | None = None  # (7,) normalized


@dataclass
class LossReport:
    stop_loss: float
    embedding_loss: float
    translation_nll: float
    rotation_nll: float
    size_nll: float
    total: float


@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 64
    lr: float = 1e-4
    label_smoothing: float = 0.1
    stop_class_weight: float = 1.0
    seed: int = 0
    augment: bool = True
    # std of Gaussian noise added to context transforms (not targets); makes
    # the heads robust to the small decode errors they see at rollout time
    ctx_jitter: float = 0.0
    checkpoint_every: int = 500
    log_every: int = 25
    out_dir: str = "runs"


def sample_training_example(
    scene: Scene,
    rng: np.random.Generator,
    index: EmbeddingIndex,
    bounds: NormalizationBounds,
    augment: bool = True,
    ctx_jitter: float = 0.0,
) -> TrainingExample:
    """Draw (augmentation, T, permutation, target) for one scene.

    T ~ Uniform{0..n}; with T = n the target is the stop label, otherwise a
    uniform pick from the complement. Augmentation is applied to the whole
    scene before splitting.
    """
    if not scene.instances:
        raise ValueError("scene has no instances")
    if augment:
        op = AUGMENT_OPS[rng.integers(len(AUGMENT_OPS))]
        if op == "rotate":
            scene = augment_scene(scene, "rotate", theta=float(rng.uniform(0, 2 * math.pi)))
        elif op != "none":
            scene = augment_scene(scene, op)
    n = len(scene.instances)
    t_size = int(rng.integers(0, n + 1))
    order = rng.permutation(n)
    ctx_idx = order[:t_size]
    ctx_h = np.array([index.row(scene.instances[i].asset_id) for i in ctx_idx], dtype=np.float64)
    ctx_t = np.array(
        [normalize_transform(scene.instances[i].transform, bounds).values for i in ctx_idx],
        dtype=np.float64,
    )
    if ctx_jitter > 0 and t_size:
        ctx_t = np.clip(ctx_t + rng.normal(0.0, ctx_jitter, ctx_t.shape), 0.0, 1.0)
    if t_size == n:
        return TrainingExample(
            mask=scene.floor.mask,
            ctx_h=ctx_h.reshape(t_size, -1),
            ctx_t=ctx_t.reshape(t_size, 7),
            stop=True,
        )
    target_i = int(rng.choice(order[t_size:]))
    inst = scene.instances[target_i]
    return TrainingExample(
        mask=scene.floor.mask,
        ctx_h=ctx_h.reshape(t_size, -1) if t_size else np.zeros((0, index.matrix.shape[1])),
        ctx_t=ctx_t.reshape(t_size, 7) if t_size else np.zeros((0, 7)),
        stop=False,
        target_row=index.ids.index(inst.asset_id),
        target_t=np.asarray(normalize_transform(inst.transform, bounds).values),
    )


def collate(examples: list[TrainingExample], embed_dim: int):
    b = len(examples)
    max_t = max(e.ctx_h.shape[0] for e in examples)
    masks = torch.tensor(np.stack([e.mask for e in examples]), dtype=torch.float32)
    ctx_h = torch.zeros(b, max_t, embed_dim)
    ctx_t = torch.zeros(b, max_t, 7)
    ctx_mask = torch.zeros(b, max_t, dtype=torch.bool)
    stop = torch.zeros(b, dtype=torch.long)
    target_row = torch.full((b,), -1, dtype=torch.long)
    target_t = torch.zeros(b, 7)
    for i, e in enumerate(examples):
        t = e.ctx_h.shape[0]
        if t:
            ctx_h[i, :t] = torch.from_numpy(e.ctx_h).float()
            ctx_t[i, :t] = torch.from_numpy(e.ctx_t).float()
            ctx_mask[i, :t] = True
        stop[i] = int(e.stop)
        if not e.stop:
            target_row[i] = e.target_row
            target_t[i] = torch.from_numpy(e.target_t).float()
    return masks, ctx_h, ctx_t, ctx_mask, stop, target_row, target_t


def forward_batch(
    model: SceneModel,
    masks: torch.Tensor,
    ctx_h: torch.Tensor,
    ctx_t: torch.Tensor,
    ctx_mask: torch.Tensor,
    target_h: torch.Tensor,
    target_t: torch.Tensor,
) -> StepPrediction:
    """Teacher-forced batched decode of the next-instance prediction."""
    floor = model.encode_floor(masks)
    ctx = model.encode_instance(ctx_h, ctx_t) if ctx_h.shape[1] else ctx_h.reshape(
        ctx_h.shape[0], 0, model.config.feature_dim
    )
    qhat = model.query_features(floor, ctx, ctx_mask if ctx_h.shape[1] else None)
    return model.cascade(
        qhat,
        chosen_embedding=target_h,
        translation=target_t[:, 0:3],
        yaw=target_t[:, 6:7],
    )


def compute_losses(
    pred: StepPrediction,
    stop: torch.Tensor,
    target_row: torch.Tensor,
    target_t: torch.Tensor,
    index: EmbeddingIndex,
    label_smoothing: float = 0.1,
    stop_class_weight: float = 1.0,
) -> tuple[torch.Tensor, LossReport]:
    """Stop BCE (with smoothing), embedding CE over index rows, and MoL NLLs.

    Embedding and transform terms are restricted to non-stop targets.
    """
    weight = None
    if stop_class_weight != 1.0:
        weight = torch.tensor([1.0, stop_class_weight])
    stop_loss = F.cross_entropy(
        pred.stop_logits, stop, label_smoothing=label_smoothing, weight=weight
    )
    cont = ~stop.bool()
    zero = pred.stop_logits.sum() * 0.0
    if cont.any():
        if (target_row[cont] < 0).any():
            raise ValueError("non-stop target missing its index row")
        logits = embedding_logits(pred.predicted_embedding[cont], index)
        emb_loss = F.cross_entropy(logits, target_row[cont])
        t = target_t[cont]
        trans_nll = -mol_log_prob(_select(pred.translation, cont), t[:, 0:3]).mean()
        rot_nll = -mol_log_prob(_select(pred.rotation, cont), t[:, 6:7]).mean()
        size_nll = -mol_log_prob(_select(pred.size, cont), t[:, 3:6]).mean()
    else:
        emb_loss = trans_nll = rot_nll = size_nll = zero
    total = stop_loss + emb_loss + trans_nll + rot_nll + size_nll
    report = LossReport(
        stop_loss=float(stop_loss.detach()),
        embedding_loss=float(emb_loss.detach()),
        translation_nll=float(trans_nll.detach()),
        rotation_nll=float(rot_nll.detach()),
        size_nll=float(size_nll.detach()),
        total=float(total.detach()),
    )
    return total, report


def _select(mol, mask):
    from .likelihoods import MixtureOfLogistics

    return MixtureOfLogistics(mol.logits[mask], mol.locs[mask], mol.log_scales[mask])


def train(
    scenes: list[Scene],
    index: EmbeddingIndex,
    model_config: ModelConfig | None = None,
    train_config: TrainConfig | None = None,
    bounds: NormalizationBounds | None = None,
    resume_from: str | None = None,
    encoder_name: str = "stub",
) -> tuple[SceneModel, NormalizationBounds, list[LossReport]]:
    """Optimize the model on a scene set; emits checkpoints and loss curves."""
    if not scenes:
        raise ValueError("empty dataset")
    cfg = train_config or TrainConfig()
    bounds = bounds or compute_bounds(scenes)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    start_step = 0
    if resume_from:
        model, bounds, blob = load_checkpoint(resume_from)
        model.train()
        opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
        if blob.get("optimizer_state"):
            opt.load_state_dict(blob["optimizer_state"])
        start_step = int(blob.get("step", 0))
    else:
        torch.manual_seed(cfg.seed)
        model = SceneModel(model_config or ModelConfig())
        model.train()
        opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    reports: list[LossReport] = []
    csv_path = out_dir / "losses.csv"
    jsonl_path = out_dir / "losses.jsonl"
    new_log = not csv_path.exists() or not resume_from
    csv_file = open(csv_path, "w" if new_log else "a", newline="")
    writer = csv.writer(csv_file)
    if new_log:
        writer.writerow(["step", "stop", "embedding", "translation", "rotation", "size", "total"])
    jsonl_file = open(jsonl_path, "w" if new_log else "a")

    embed_dim = index.matrix.shape[1]
    try:
        for step in range(start_step, start_step + cfg.steps):
            # per-step rng keyed by (seed, step) so resume is reproducible
            rng = np.random.default_rng((cfg.seed, step))
            examples = [
                sample_training_example(
                    scenes[int(rng.integers(len(scenes)))], rng, index, bounds,
                    cfg.augment, cfg.ctx_jitter,
                )
                for _ in range(cfg.batch_size)
            ]
            batch = collate(examples, embed_dim)
            masks, ctx_h, ctx_t, ctx_mask, stop, target_row, target_t = batch
            target_h = torch.zeros(len(examples), embed_dim)
            cont = ~stop.bool()
            if cont.any():
                target_h[cont] = torch.tensor(
                    index.matrix[target_row[cont].numpy()], dtype=torch.float32
                )
            pred = forward_batch(model, masks, ctx_h, ctx_t, ctx_mask, target_h, target_t)
            total, report = compute_losses(
                pred, stop, target_row, target_t, index,
                label_smoothing=cfg.label_smoothing,
                stop_class_weight=cfg.stop_class_weight,
            )
            if not math.isfinite(report.total):
                raise RuntimeError(f"training diverged at step {step}: loss={report.total}")
            opt.zero_grad()
            total.backward()
            opt.step()
            reports.append(report)
            if step % cfg.log_every == 0 or step == start_step + cfg.steps - 1:
                row = [step, report.stop_loss, report.embedding_loss,
                       report.translation_nll, report.rotation_nll, report.size_nll, report.total]
                writer.writerow(row)
                jsonl_file.write(json.dumps({"step": step, **report.__dict__}) + "\n")
            if cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0:
                _atomic_checkpoint(
                    out_dir / f"checkpoint-{step + 1}.pt", model, bounds, encoder_name,
                    index, opt, step + 1,
                )
        _atomic_checkpoint(out_dir / "checkpoint-final.pt", model, bounds, encoder_name,
                           index, opt, start_step + cfg.steps)
    finally:
        csv_file.close()
        jsonl_file.close()
    model.eval()
    return model, bounds, reports


def _atomic_checkpoint(path: Path, model, bounds, encoder_name, index, opt, step):
    tmp = path.with_suffix(".tmp")
    save_checkpoint(
        tmp, model, bounds,
        encoder_name=encoder_name,
        index_hash=index_fingerprint(index),
        optimizer_state=opt.state_dict(),
        step=step,
    )
    os.replace(tmp, path)
