"""Input validation helpers shared by the estimator facade and the service."""

from __future__ import annotations

import numpy as np

from .embedding import EmbeddingIndex
from .scene import ROOM_TYPES, Scene


def check_scenes(scenes, index: EmbeddingIndex | None = None) -> list[Scene]:
    scenes = list(scenes)
    if not scenes:
        raise ValueError("expected a non-empty collection of scenes")
    for i, s in enumerate(scenes):
        if not isinstance(s, Scene):
            raise TypeError(f"scenes[{i}] is {type(s).__name__}, expected Scene")
        if index is not None:
            for inst in s.instances:
                if inst.asset_id not in index.ids:
                    raise ValueError(
                        f"scenes[{i}] references asset {inst.asset_id!r} absent from the index"
                    )
    return scenes


def check_room_type(room_type: str) -> str:
    if room_type not in ROOM_TYPES:
        raise ValueError(f"unknown room_type {room_type!r}, expected one of {ROOM_TYPES}")
    return room_type


def check_embedding(vec, dim: int = 512) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    if arr.shape != (dim,):
        raise ValueError(f"expected a ({dim},) embedding, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding contains non-finite values")
    return arr


def check_is_fitted(estimator, attr: str = "model_"):
    if not hasattr(estimator, attr):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
