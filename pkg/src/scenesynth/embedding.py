"""Pooled semantic object embeddings and the dot-product retrieval index.

Each asset is rendered from eight canonical directions; per-view embeddings
are L2-normalized and averaged (the mean itself is not renormalized, so its
norm encodes view agreement). The index scores queries by raw dot product
with temperature/top-K sampling for retrieval.

Two encoder backends: a pretrained image-text encoder adapter (optional,
needs downloaded weights) and a deterministic offline stub that hashes the
dominant render color and the silhouette into fixed channel blocks.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rendering import (
    MaterialOverride,
    OBJECT_VIEW,
    Mesh,
    ViewConfig,
    _SHAPE_BUILDERS,
    asset_mesh,
    render_object_views,
)
from .toyworld import PALETTE, ToyAssetSpec

EMBED_DIM = 512

# stub channel layout
_COLOR_ONEHOT = slice(0, 8)
_CHROMA = slice(8, 11)
_SHAPE_ONEHOT = slice(11, 16)
_SILHOUETTE = slice(16, 272)  # cropped to the silhouette bbox: shape-canonical
_ASPECT = slice(272, 336)  # uncropped 8x8: keeps per-asset aspect distinct
_TEXT_HASH = slice(336, 400)

_COLOR_WEIGHT = 2.0
_SHAPE_WEIGHT = 1.5
_SILHOUETTE_WEIGHT = 0.75
_ASPECT_WEIGHT = 0.5
_PALETTE_NAMES = list(PALETTE)
_SHAPE_NAMES = list(_SHAPE_BUILDERS)


class EncoderBackend:
    """Maps images and text to a shared 512-d space. Deterministic per input."""

    name = "abstract"
    version = "0"
    thread_safe = False

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def embed_text(self, prompt: str) -> np.ndarray:
        raise NotImplementedError


def _normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        return v
    return v / n


class StubEncoder(EncoderBackend):
    """Offline encoder: quantized dominant color + silhouette channel blocks.

    The color of the foreground pixels (chromaticity, so shading intensity
    cancels) is matched against the toy palette and one-hot encoded; the
    silhouette is pooled to a 16x16 grid. Text prompts map color and shape
    words onto the same blocks, shape words via canonical renders of the
    matching parametric mesh.
    """

    name = "stub"
    version = "1"
    thread_safe = True

    def __init__(self, view_cfg: ViewConfig = OBJECT_VIEW):
        self._view_cfg = view_cfg
        self._shape_cache: dict[str, np.ndarray] = {}

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        img = np.asarray(image, dtype=np.float64) / 255.0
        fg = np.any(img < 250 / 255.0, axis=2)
        vec = np.zeros(EMBED_DIM)
        if fg.any():
            mean_rgb = img[fg].mean(axis=0)
            chroma = mean_rgb / max(float(mean_rgb.max()), 1e-9)
            vec[_CHROMA] = chroma
            dists = [
                np.linalg.norm(chroma - np.array(c) / max(c)) for c in PALETTE.values()
            ]
            onehot = np.zeros(8)
            onehot[int(np.argmin(dists))] = 1.0
            vec[_COLOR_ONEHOT] = _COLOR_WEIGHT * onehot
            sil = _normalize(_pool_silhouette(_crop_to_bbox(fg)))
            shape_onehot = np.zeros(5)
            shape_onehot[self._classify_silhouette(sil)] = 1.0
            vec[_SHAPE_ONEHOT] = _SHAPE_WEIGHT * shape_onehot
            vec[_SILHOUETTE] = _SILHOUETTE_WEIGHT * sil
            vec[_ASPECT] = _ASPECT_WEIGHT * _normalize(_pool_silhouette(fg, grid=8))
        return _normalize(vec)

    def embed_text(self, prompt: str) -> np.ndarray:
        if not prompt.strip():
            raise ValueError("empty prompt")
        tokens = [t.strip(".,!?").lower() for t in prompt.split()]
        vec = np.zeros(EMBED_DIM)
        matched = False
        for i, cname in enumerate(_PALETTE_NAMES):
            if cname in tokens:
                c = np.array(PALETTE[cname])
                vec[_CHROMA] = c / c.max()
                onehot = np.zeros(8)
                onehot[i] = 1.0
                vec[_COLOR_ONEHOT] = _COLOR_WEIGHT * onehot
                matched = True
                break
        for i, shape in enumerate(_SHAPE_NAMES):
            if shape in tokens:
                onehot = np.zeros(5)
                onehot[i] = 1.0
                vec[_SHAPE_ONEHOT] = _SHAPE_WEIGHT * onehot
                vec[_SILHOUETTE] = _SILHOUETTE_WEIGHT * _normalize(
                    np.mean(self._shape_signatures(shape), axis=0)
                )
                matched = True
                break
        if not matched:
            # arbitrary prompts still need a deterministic nonzero embedding
            h = hashlib.sha256(prompt.encode()).digest()
            bits = np.frombuffer(h * 2, dtype=np.uint8)[:64] / 255.0 - 0.5
            vec[_TEXT_HASH] = bits
        return _normalize(vec)

    def _shape_signatures(self, shape: str) -> list[np.ndarray]:
        """Canonical per-view silhouette signatures of the parametric mesh."""
        if shape not in self._shape_cache:
            mesh = _SHAPE_BUILDERS[shape]()
            views = render_object_views(mesh, self._view_cfg)
            self._shape_cache[shape] = [
                _normalize(_pool_silhouette(_crop_to_bbox(np.any(v < 250, axis=2))))
                for v in views
            ]
        return self._shape_cache[shape]

    def _classify_silhouette(self, sig: np.ndarray) -> int:
        """Shape class = nearest canonical per-view signature by cosine."""
        best, best_cos = 0, -np.inf
        for i, shape in enumerate(_SHAPE_NAMES):
            for canon in self._shape_signatures(shape):
                c = float(sig @ canon)
                if c > best_cos:
                    best, best_cos = i, c
        return best


def _crop_to_bbox(fg: np.ndarray) -> np.ndarray:
    rows = np.nonzero(fg.any(axis=1))[0]
    cols = np.nonzero(fg.any(axis=0))[0]
    if rows.size == 0:
        return fg
    return fg[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]


def _pool_silhouette(fg: np.ndarray, grid: int = 16) -> np.ndarray:
    """Average-pool a boolean mask onto a grid x grid raster."""
    h, w = fg.shape
    ys = np.minimum((np.arange(h) * grid) // max(h, 1), grid - 1)
    xs = np.minimum((np.arange(w) * grid) // max(w, 1), grid - 1)
    pooled = np.zeros((grid, grid))
    counts = np.zeros((grid, grid))
    np.add.at(pooled, (ys[:, None].repeat(w, 1), xs[None, :].repeat(h, 0)), fg.astype(np.float64))
    np.add.at(counts, (ys[:, None].repeat(w, 1), xs[None, :].repeat(h, 0)), 1.0)
    flat = (pooled / np.maximum(counts, 1.0)).ravel()
    # zero-mean so the dot product correlates shape detail, not fill density
    return flat - flat.mean()


class PretrainedEncoder(EncoderBackend):
    """Adapter over a downloaded image-text encoder (weights path via env var).

    Not a test dependency: construction raises cleanly when the weights or
    the sentence-transformers package are unavailable.
    """

    name = "clip-vit-b32"
    version = "1"
    thread_safe = False

    ENV_VAR = "SCENESYNTH_ENCODER_PATH"

    def __init__(self, weights_path: str | None = None):
        path = weights_path or os.environ.get(self.ENV_VAR)
        if not path:
            raise RuntimeError(f"set {self.ENV_VAR} to the encoder weights directory")
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(path)

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        from PIL import Image

        emb = self._model.encode([Image.fromarray(image)], convert_to_numpy=True)[0]
        return emb.astype(np.float64)

    def embed_text(self, prompt: str) -> np.ndarray:
        if not prompt.strip():
            raise ValueError("empty prompt")
        emb = self._model.encode([prompt], convert_to_numpy=True)[0]
        return _normalize(emb.astype(np.float64))


def pool_views(images: list[np.ndarray], enc: EncoderBackend) -> np.ndarray:
    """Mean of the 8 L2-normalized per-view embeddings (no final renorm)."""
    if len(images) != 8:
        raise ValueError(f"expected exactly 8 views, got {len(images)}")
    embs = np.stack([_normalize(enc.embed_image(img)) for img in images])
    # exactly-rounded per-component sums keep the pool bit-identical under
    # any permutation of the views
    summed = np.array([math.fsum(embs[:, j]) for j in range(embs.shape[1])])
    return summed / len(images)


def embed_text(prompt: str, enc: EncoderBackend) -> np.ndarray:
    if not prompt.strip():
        raise ValueError("empty prompt")
    return _normalize(enc.embed_text(prompt))


@dataclass
class EmbeddingIndex:
    """Retrieval vocabulary: asset ids against a row-aligned embedding matrix."""

    ids: list[str]
    matrix: np.ndarray  # (N, 512) float32
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.ids) != self.matrix.shape[0]:
            raise ValueError("row count must match id count")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate asset ids in index")
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float32)

    def __len__(self) -> int:
        return len(self.ids)

    def row(self, asset_id: str) -> np.ndarray:
        return self.matrix[self.ids.index(asset_id)]

    def subset(self, ids: list[str]) -> "EmbeddingIndex":
        keep = [self.ids.index(i) for i in ids]
        return EmbeddingIndex(ids=list(ids), matrix=self.matrix[keep], metadata=dict(self.metadata))

    def for_room_type(self, room_type: str) -> "EmbeddingIndex":
        tags = self.metadata.get("room_types", {})
        ids = [i for i in self.ids if room_type in tags.get(i, [room_type])]
        if not ids:
            return self
        return self.subset(ids)


def build_index(
    assets: list[ToyAssetSpec],
    enc: EncoderBackend,
    cfg: ViewConfig = OBJECT_VIEW,
    mat: MaterialOverride = MaterialOverride(),
    room_types: dict[str, list[str]] | None = None,
) -> EmbeddingIndex:
    ids = [a.id for a in assets]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate asset ids")
    rows = []
    for asset in assets:
        views = render_object_views(asset_mesh(asset), cfg, mat)
        rows.append(pool_views(views, enc))
    meta = {
        "encoder": enc.name,
        "encoder_version": enc.version,
        "view_config": hashlib.sha1(cfg.key().encode()).hexdigest(),
    }
    if room_types:
        meta["room_types"] = room_types
    return EmbeddingIndex(ids=ids, matrix=np.array(rows, dtype=np.float32), metadata=meta)


def save_index(index: EmbeddingIndex, path: str | Path) -> None:
    """Binary little-endian float32 matrix plus a JSON manifest sidecar."""
    path = Path(path)
    mat = index.matrix.astype("<f4")
    path.write_bytes(struct.pack("<II", *mat.shape) + mat.tobytes())
    manifest = {"ids": index.ids, "metadata": index.metadata, "shape": list(mat.shape)}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(manifest, indent=2))


def load_index(path: str | Path) -> EmbeddingIndex:
    path = Path(path)
    raw = path.read_bytes()
    n, d = struct.unpack("<II", raw[:8])
    mat = np.frombuffer(raw[8:], dtype="<f4").reshape(n, d).copy()
    manifest = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return EmbeddingIndex(ids=manifest["ids"], matrix=mat, metadata=manifest["metadata"])


def softmax(x: np.ndarray) -> np.ndarray:
    z = x - np.max(x)
    e = np.exp(z)
    return e / e.sum()


def retrieve_topk(
    index: EmbeddingIndex,
    query: np.ndarray,
    k: int = 10,
    temperature: float = 1.0,
    rng: np.random.Generator | None = None,
) -> str:
    """Sample one asset id from softmax(scores / T) restricted to the top k."""
    if len(index) == 0:
        raise ValueError("empty index")
    if k < 1:
        raise ValueError("k must be >= 1")
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    rng = rng or np.random.default_rng()
    scores = index.matrix.astype(np.float64) @ np.asarray(query, dtype=np.float64)
    k = min(k, len(index))
    top = np.argsort(-scores, kind="stable")[:k]
    probs = softmax(scores[top] / temperature)
    choice = top[rng.choice(k, p=probs)]
    return index.ids[int(choice)]


def rank_assets(index: EmbeddingIndex, query: np.ndarray, k: int) -> list[str]:
    """Deterministic top-k ranking by dot product, ties broken lexicographically."""
    scores = index.matrix.astype(np.float64) @ np.asarray(query, dtype=np.float64)
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.ids[i]))
    return [index.ids[i] for i in order[: min(k, len(index))]]
