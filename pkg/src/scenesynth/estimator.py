"""Estimator facade: fit on scenes, then sample or complete new ones.

Wraps the network, trainer and synthesizer behind the familiar
fit/sample/predict surface so the model composes with pipeline tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .embedding import EmbeddingIndex, EncoderBackend
from .model import ModelConfig
from .synthesis import GuidanceConfig, SynthesisLimits, complete_scene, generate_scene
from .training import TrainConfig, train
from .scene import Scene
from .validation import check_is_fitted, check_scenes


class SceneSynthesizer(BaseEstimator):
    """Autoregressive scene synthesizer with retrieval-based decoding.

    Parameters mirror the model and trainer configs; after ``fit`` the
    trained network and normalization bounds live on ``model_`` / ``bounds_``.
    """

    def __init__(
        self,
        index: EmbeddingIndex | None = None,
        encoder: EncoderBackend | None = None,
        feature_dim: int = 256,
        n_layers: int = 2,
        n_heads: int = 4,
        ff_dim: int = 512,
        mol_components: int = 10,
        floor_encoder: str = "conv4",
        steps: int = 1000,
        batch_size: int = 64,
        lr: float = 1e-4,
        label_smoothing: float = 0.1,
        augment: bool = True,
        random_state: int = 0,
        out_dir: str = "runs",
    ):
        self.index = index
        self.encoder = encoder
        self.feature_dim = feature_dim
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.ff_dim = ff_dim
        self.mol_components = mol_components
        self.floor_encoder = floor_encoder
        self.steps = steps
        self.batch_size = batch_size
        self.lr = lr
        self.label_smoothing = label_smoothing
        self.augment = augment
        self.random_state = random_state
        self.out_dir = out_dir

    def fit(self, X, y=None):
        if self.index is None:
            raise ValueError("an embedding index is required to fit")
        scenes = check_scenes(X, self.index)
        model_cfg = ModelConfig(
            feature_dim=self.feature_dim,
            n_layers=self.n_layers,
            n_heads=self.n_heads,
            ff_dim=self.ff_dim,
            mol_components=self.mol_components,
            floor_encoder=self.floor_encoder,
        )
        train_cfg = TrainConfig(
            steps=self.steps,
            batch_size=self.batch_size,
            lr=self.lr,
            label_smoothing=self.label_smoothing,
            augment=self.augment,
            seed=self.random_state,
            out_dir=self.out_dir,
        )
        self.model_, self.bounds_, self.loss_history_ = train(
            scenes, self.index, model_cfg, train_cfg
        )
        return self

    def sample(self, floor_scene: Scene, prompt: str | None = None, seed: int = 0,
               limits: SynthesisLimits | None = None) -> Scene:
        check_is_fitted(self)
        guidance = GuidanceConfig(prompt=prompt) if prompt else None
        scene, _ = generate_scene(
            self.model_, self.index, floor_scene, self.bounds_,
            guidance=guidance, rng=np.random.default_rng(seed), limits=limits,
            encoder=self.encoder,
        )
        return scene

    def predict(self, X, seed: int = 0, limits: SynthesisLimits | None = None) -> list[Scene]:
        """Complete each partial scene in X."""
        check_is_fitted(self)
        scenes = check_scenes(X, self.index)
        out = []
        for i, scene in enumerate(scenes):
            completed, _ = complete_scene(
                self.model_, self.index, scene, self.bounds_,
                rng=np.random.default_rng((seed, i)), limits=limits,
            )
            out.append(completed)
        return out
