import numpy as np
import pytest
from sklearn.base import clone

from scenesynth.estimator import SceneSynthesizer
from scenesynth.scene import Scene


class TestEstimatorContract:
    def test_get_set_params_round_trip(self, index, stub):
        est = SceneSynthesizer(index=index, encoder=stub, steps=7)
        params = est.get_params()
        assert params["steps"] == 7
        est.set_params(steps=9, lr=2e-4)
        assert est.steps == 9 and est.lr == 2e-4

    def test_clone_preserves_params(self, index, stub):
        est = SceneSynthesizer(index=index, encoder=stub, steps=7, n_layers=3)
        cloned = clone(est)
        assert cloned.steps == 7 and cloned.n_layers == 3
        assert cloned is not est

    def test_unfitted_predict_rejected(self, index, scenes):
        est = SceneSynthesizer(index=index)
        with pytest.raises(Exception, match="fit"):
            est.predict(scenes[:1])

    def test_fit_requires_index(self, scenes):
        with pytest.raises(ValueError, match="index"):
            SceneSynthesizer().fit(scenes)

    def test_fit_rejects_non_scene_input(self, index):
        est = SceneSynthesizer(index=index)
        with pytest.raises(TypeError, match="Scene"):
            est.fit([1, 2, 3])


class TestFitAndSample:
    @pytest.fixture(scope="class")
    def fitted(self, index, stub, scenes, tmp_path_factory):
        est = SceneSynthesizer(
            index=index,
            encoder=stub,
            feature_dim=64,
            n_layers=1,
            n_heads=2,
            ff_dim=64,
            steps=8,
            batch_size=4,
            random_state=0,
            out_dir=str(tmp_path_factory.mktemp("est")),
        )
        return est.fit(scenes[:4])

    def test_fit_exposes_artifacts(self, fitted):
        assert hasattr(fitted, "model_")
        assert hasattr(fitted, "bounds_")
        assert len(fitted.loss_history_) == 8

    def test_sample_returns_scene(self, fitted, scenes):
        from scenesynth.synthesis import SynthesisLimits

        out = fitted.sample(scenes[0], seed=0, limits=SynthesisLimits(max_new=2))
        assert isinstance(out, Scene)

    def test_predict_preserves_context(self, fitted, scenes):
        from scenesynth.synthesis import SynthesisLimits

        outs = fitted.predict(scenes[:2], seed=0, limits=SynthesisLimits(max_new=2))
        assert len(outs) == 2
        for src, out in zip(scenes, outs):
            assert out.instances[: len(src.instances)] == src.instances

    def test_predict_deterministic(self, fitted, scenes):
        from scenesynth.scene import scene_to_json
        from scenesynth.synthesis import SynthesisLimits

        a = fitted.predict(scenes[:1], seed=3, limits=SynthesisLimits(max_new=2))
        b = fitted.predict(scenes[:1], seed=3, limits=SynthesisLimits(max_new=2))
        assert scene_to_json(a[0]) == scene_to_json(b[0])
