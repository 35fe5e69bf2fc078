"""Quantitative harness: completion precision/recall and Fréchet distances.

Completion metrics strip test scenes to k instances, let the model finish
them, and compare the retrieved multiset of asset ids against the removed
ground truth. Distribution distance pools eight 512x512 renders per scene on
each side and compares feature statistics under a pluggable extractor.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import EmbeddingIndex, EncoderBackend
from .model import SceneModel
from .rendering import SCENE_VIEW, MaterialOverride, ViewConfig, render_scene_views
from .scene import NormalizationBounds, Scene
from .synthesis import SynthesisLimits, complete_scene


@dataclass
class RetrievalReport:
    precision: float
    recall: float
    per_scene: list[tuple[str, float, float]] = field(default_factory=list)


@dataclass
class FrechetReport:
    fid: float
    clip_fid: float
    n_a: int
    n_b: int


def retrieval_pr(ground_truth: list[str], retrieved: list[str]) -> tuple[float, float]:
    """Multiset precision/recall of retrieved asset ids vs the removed set."""
    if not ground_truth:
        raise ValueError("ground truth must be non-empty")
    hits = sum((Counter(ground_truth) & Counter(retrieved)).values())
    precision = hits / len(retrieved) if retrieved else 0.0
    recall = hits / len(ground_truth)
    return precision, recall


def frechet_distance(feats_a: np.ndarray, feats_b: np.ndarray) -> float:
    """||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}).

    The cross-covariance square root is computed symmetrically via the
    eigendecomposition of Sa^{1/2} Sb Sa^{1/2} with eigenvalues clipped at 0,
    which keeps the result real and non-negative.
    """
    a = np.asarray(feats_a, dtype=np.float64)
    b = np.asarray(feats_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("feature sets must be 2-D with matching dimension")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    dim = a.shape[1]
    shrink_a = 0.0 if a.shape[0] > dim else 1e-6
    shrink_b = 0.0 if b.shape[0] > dim else 1e-6
    cov_a = np.cov(a, rowvar=False) + shrink_a * np.eye(dim)
    cov_b = np.cov(b, rowvar=False) + shrink_b * np.eye(dim)
    cov_a = np.atleast_2d(cov_a)
    cov_b = np.atleast_2d(cov_b)

    wa, va = np.linalg.eigh(cov_a)
    sqrt_a = va @ np.diag(np.sqrt(np.clip(wa, 0, None))) @ va.T
    inner = sqrt_a @ cov_b @ sqrt_a
    wi, _ = np.linalg.eigh(inner)
    tr_sqrt = np.sum(np.sqrt(np.clip(wi, 0, None)))
    diff = mu_a - mu_b
    fd = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * tr_sqrt)
    return max(fd, 0.0)


def image_features(images: list[np.ndarray], extractor: EncoderBackend) -> np.ndarray:
    return np.stack([extractor.embed_image(img) for img in images])


def scene_view_features(
    scenes: list[Scene],
    asset_lookup,
    extractor: EncoderBackend,
    view_cfg: ViewConfig = SCENE_VIEW,
) -> np.ndarray:
    """Pool the 8-view renders of every scene into one flat feature set."""
    feats = []
    for scene in scenes:
        views = render_scene_views(scene, asset_lookup, view_cfg)
        feats.append(image_features(views, extractor))
    return np.concatenate(feats)


@dataclass
class CompletionRow:
    keep: int
    seed: int
    decoding: str
    precision: float
    recall: float
    fid: float
    clip_fid: float


def evaluate_completion(
    model: SceneModel,
    index: EmbeddingIndex,
    test_scenes: list[Scene],
    bounds: NormalizationBounds,
    asset_lookup,
    extractor: EncoderBackend,
    clip_extractor: EncoderBackend | None = None,
    keep_counts: list[int] = (1, 2, 3),
    seeds: list[int] = (0, 1, 2, 3, 4),
    limits: SynthesisLimits | None = None,
    greedy: bool = True,
    view_cfg: ViewConfig = SCENE_VIEW,
    render_metrics: bool = True,
    completer=None,
) -> list[CompletionRow]:
    """Strip scenes to each keep count, complete, score, average over seeds.

    ``completer`` overrides the model call (oracle hooks for tests); it maps
    (scene, removed, rng) -> completed Scene.
    """
    if not test_scenes:
        raise ValueError("empty test set")
    limits = limits or SynthesisLimits(k=1 if greedy else 10)
    clip_extractor = clip_extractor or extractor
    rows = []
    for keep in keep_counts:
        for seed in seeds:
            rng = np.random.default_rng((seed, keep))
            precisions, recalls = [], []
            gt_scenes, completed_scenes = [], []
            for scene in test_scenes:
                n = len(scene.instances)
                kk = min(keep, n)
                perm = rng.permutation(n)
                kept = [scene.instances[i] for i in perm[:kk]]
                removed = [scene.instances[i].asset_id for i in perm[kk:]]
                if not removed:
                    continue
                partial = Scene(
                    id=scene.id, room_type=scene.room_type, floor=scene.floor,
                    instances=kept, extra=dict(scene.extra),
                )
                if completer is not None:
                    done = completer(partial, removed, rng)
                else:
                    done, _ = complete_scene(
                        model, index, partial, bounds, rng=rng, limits=limits
                    )
                # multiset difference, so a completer may interleave new
                # instances with the kept ones in any order
                kept_pool = Counter(inst.asset_id for inst in kept)
                added = []
                for inst in done.instances:
                    if kept_pool.get(inst.asset_id, 0) > 0:
                        kept_pool[inst.asset_id] -= 1
                    else:
                        added.append(inst.asset_id)
                p, r = retrieval_pr(removed, added)
                precisions.append(p)
                recalls.append(r)
                gt_scenes.append(scene)
                completed_scenes.append(done)
            if not precisions:
                continue
            fid = clip_fid = float("nan")
            if render_metrics and completed_scenes:
                feats_gt = scene_view_features(gt_scenes, asset_lookup, extractor, view_cfg)
                feats_cp = scene_view_features(completed_scenes, asset_lookup, extractor, view_cfg)
                fid = frechet_distance(feats_gt, feats_cp)
                if clip_extractor is not extractor:
                    cf_gt = scene_view_features(gt_scenes, asset_lookup, clip_extractor, view_cfg)
                    cf_cp = scene_view_features(completed_scenes, asset_lookup, clip_extractor, view_cfg)
                    clip_fid = frechet_distance(cf_gt, cf_cp)
                else:
                    clip_fid = fid
            rows.append(
                CompletionRow(
                    keep=keep,
                    seed=seed,
                    decoding="greedy" if greedy else "sampled",
                    precision=float(np.mean(precisions)),
                    recall=float(np.mean(recalls)),
                    fid=fid,
                    clip_fid=clip_fid,
                )
            )
    return rows


def write_completion_csv(rows: list[CompletionRow], path) -> None:
    """CSV with the familiar completion-table schema plus run metadata."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["Prepopulated #", "Decoding", "Seed", "FID", "CLIP-FID", "Precision", "Recall"])
        for r in rows:
            w.writerow([r.keep, r.decoding, r.seed, f"{r.fid:.6f}", f"{r.clip_fid:.6f}",
                        f"{r.precision:.6f}", f"{r.recall:.6f}"])


def summarize_rows(rows: list[CompletionRow]) -> dict[int, dict[str, float]]:
    """Average metrics over seeds per keep count."""
    out: dict[int, dict[str, float]] = {}
    for keep in sorted({r.keep for r in rows}):
        sub = [r for r in rows if r.keep == keep]
        out[keep] = {
            "precision": float(np.mean([r.precision for r in sub])),
            "recall": float(np.mean([r.recall for r in sub])),
            "fid": float(np.mean([r.fid for r in sub])),
            "clip_fid": float(np.mean([r.clip_fid for r in sub])),
        }
    return out
