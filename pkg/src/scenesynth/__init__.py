"""Style-consistent autoregressive indoor scene synthesis.

Scenes are unordered sets of furniture instances on a floor plan. Objects
are represented by pooled multi-view semantic embeddings instead of category
labels; a permutation-invariant transformer predicts the next embedding and
placement, and decoding retrieves real assets from an embedding index, with
optional text guidance.
"""

from .embedding import (
    EmbeddingIndex,
    EncoderBackend,
    StubEncoder,
    build_index,
    embed_text,
    load_index,
    pool_views,
    retrieve_topk,
    save_index,
)
from .estimator import SceneSynthesizer
from .likelihoods import MixtureOfLogistics, mol_log_prob, mol_sample
from .model import ModelConfig, SceneModel, load_checkpoint, save_checkpoint
from .scene import (
    FloorPlan,
    FurnitureInstance,
    NormalizationBounds,
    NormalizedTransform7,
    Scene,
    Transform7,
    augment_scene,
    compute_bounds,
    denormalize_transform,
    load_scene,
    normalize_transform,
    rasterize_floor,
    save_scene,
)
from .synthesis import GuidanceConfig, SynthesisLimits, complete_scene, generate_scene, replace_instance
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "EmbeddingIndex", "EncoderBackend", "StubEncoder", "build_index", "embed_text",
    "load_index", "pool_views", "retrieve_topk", "save_index", "SceneSynthesizer",
    "MixtureOfLogistics", "mol_log_prob", "mol_sample", "ModelConfig", "SceneModel",
    "load_checkpoint", "save_checkpoint", "FloorPlan", "FurnitureInstance",
    "NormalizationBounds", "NormalizedTransform7", "Scene", "Transform7",
    "augment_scene", "compute_bounds", "denormalize_transform", "load_scene",
    "normalize_transform", "rasterize_floor", "save_scene", "GuidanceConfig",
    "SynthesisLimits", "complete_scene", "generate_scene", "replace_instance",
    "TrainConfig", "train",
]
