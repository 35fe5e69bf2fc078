import json

import numpy as np
import pytest
import torch

from scenesynth.scene import scene_to_json
from scenesynth.synthesis import (
    GuidanceConfig,
    SynthesisLimits,
    apply_text_guidance,
    complete_scene,
    generate_scene,
    replace_instance,
)
from scenesynth.toyworld import generate_dataset


@pytest.fixture()
def toy_scene(scenes):
    return scenes[0]


def force_stop(model, always=True):
    """Pin the stop head to a constant decision regardless of input."""
    with torch.no_grad():
        head = model.stop_head[-1]
        head.weight.zero_()
        head.bias.copy_(torch.tensor([-20.0, 20.0] if always else [20.0, -20.0]))
    return model


class TestTextGuidance:
    def test_zero_weight_is_identity(self, rng):
        h = rng.normal(size=512)
        t = rng.normal(size=512)
        assert np.array_equal(apply_text_guidance(h, t, 0.0), h)

    def test_full_weight_preserves_norm(self, rng):
        h = rng.normal(size=512)
        t = rng.normal(size=512)
        out = apply_text_guidance(h, t, 1.0)
        assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(h), abs=1e-6)
        assert np.allclose(out / np.linalg.norm(out), t / np.linalg.norm(t), atol=1e-9)

    def test_orthogonal_midpoint_geometry(self):
        h = np.zeros(512)
        t = np.zeros(512)
        h[0] = 1.0
        t[1] = 1.0
        out = apply_text_guidance(h, t, 0.5)
        assert np.allclose(out, (h + t) / 2, atol=1e-12)
        assert np.linalg.norm(out) == pytest.approx(np.sqrt(2) / 2, abs=1e-6)

    def test_norm_never_grows(self, rng):
        for _ in range(200):
            h = rng.normal(size=512)
            t = rng.normal(size=512)
            w = rng.uniform()
            assert np.linalg.norm(apply_text_guidance(h, t, w)) <= np.linalg.norm(h) + 1e-9

    def test_zero_predicted_embedding_warns_and_passes_through(self, rng):
        t = rng.normal(size=512)
        with pytest.warns(UserWarning, match="zero norm"):
            out = apply_text_guidance(np.zeros(512), t, 0.5)
        assert np.array_equal(out, np.zeros(512))

    def test_zero_edit_vector_rejected(self, rng):
        with pytest.raises(ValueError, match="nonzero"):
            apply_text_guidance(rng.normal(size=512), np.zeros(512), 0.5)

    def test_invalid_weight_rejected(self, rng):
        with pytest.raises(ValueError, match="w_t"):
            apply_text_guidance(rng.normal(size=512), rng.normal(size=512), 1.5)

    def test_decay_is_strictly_decreasing(self):
        g = GuidanceConfig(prompt="x", w0=0.4, decay=0.5)
        ws = [g.weight(t) for t in range(6)]
        assert all(a > b for a, b in zip(ws, ws[1:]))
        assert ws[0] == 0.4 and ws[1] == 0.2

    def test_config_validation(self):
        with pytest.raises(ValueError, match="w0"):
            GuidanceConfig(w0=1.5)
        with pytest.raises(ValueError, match="decay"):
            GuidanceConfig(decay=0.0)


class TestCompletion:
    def test_stop_always_model_returns_input_unchanged(self, tiny_model, index, toy_scene, bounds):
        model = force_stop(tiny_model)
        out, trace = complete_scene(model, index, toy_scene, bounds)
        assert scene_to_json(out) == scene_to_json(toy_scene)
        assert len(trace.steps) == 1 and trace.steps[0].asset_id is None
        assert not trace.truncated

    def test_never_stopping_model_truncates_at_limit(self, tiny_model, index, toy_scene, bounds):
        model = force_stop(tiny_model, always=False)
        limits = SynthesisLimits(max_new=2, k=1)
        out, trace = complete_scene(
            model, index, toy_scene, bounds, rng=np.random.default_rng(0), limits=limits
        )
        assert len(out.instances) == len(toy_scene.instances) + 2
        assert trace.truncated

    def test_input_instances_never_mutated(self, tiny_model, index, toy_scene, bounds):
        model = force_stop(tiny_model, always=False)
        out, _ = complete_scene(
            model, index, toy_scene, bounds,
            rng=np.random.default_rng(1), limits=SynthesisLimits(max_new=3, k=1),
        )
        for a, b in zip(toy_scene.instances, out.instances):
            assert a == b

    def test_fixed_seed_is_deterministic(self, tiny_model, index, toy_scene, bounds):
        model = force_stop(tiny_model, always=False)
        limits = SynthesisLimits(max_new=3)
        a, _ = complete_scene(
            model, index, toy_scene, bounds, rng=np.random.default_rng(7), limits=limits
        )
        b, _ = complete_scene(
            model, index, toy_scene, bounds, rng=np.random.default_rng(7), limits=limits
        )
        assert json.dumps(scene_to_json(a), sort_keys=True) == json.dumps(
            scene_to_json(b), sort_keys=True
        )

    def test_placed_transforms_within_bounds(self, tiny_model, index, toy_scene, bounds, stub):
        model = force_stop(tiny_model, always=False)
        out, _ = complete_scene(
            model, index, toy_scene, bounds,
            rng=np.random.default_rng(2), limits=SynthesisLimits(max_new=4),
        )
        lo, hi = np.array(bounds.mins), np.array(bounds.maxs)
        for inst in out.instances[len(toy_scene.instances):]:
            v = inst.transform.to_vector()
            assert (v >= lo - 1e-6).all() and (v <= hi + 1e-6).all()

    def test_prompt_requires_encoder(self, tiny_model, index, toy_scene, bounds):
        with pytest.raises(ValueError, match="encoder"):
            complete_scene(
                tiny_model, index, toy_scene, bounds,
                guidance=GuidanceConfig(prompt="red"),
            )

    def test_unguided_equals_zero_weight_guidance(
        self, tiny_model, index, toy_scene, bounds, stub
    ):
        model = force_stop(tiny_model, always=False)
        limits = SynthesisLimits(max_new=3)
        plain, _ = complete_scene(
            model, index, toy_scene, bounds, rng=np.random.default_rng(3), limits=limits
        )
        guided, _ = complete_scene(
            model, index, toy_scene, bounds,
            guidance=GuidanceConfig(prompt="red box", w0=0.0),
            rng=np.random.default_rng(3), limits=limits, encoder=stub,
        )
        assert scene_to_json(plain) == scene_to_json(guided)

    def test_generate_ignores_existing_instances(self, tiny_model, index, toy_scene, bounds):
        model = force_stop(tiny_model)
        out, _ = generate_scene(model, index, toy_scene, bounds)
        assert out.instances == []
        assert out.floor == toy_scene.floor


class TestReplacement:
    def test_unknown_instance_rejected(self, tiny_model, index, toy_scene, bounds, stub):
        with pytest.raises(KeyError, match="unknown instance"):
            replace_instance(
                tiny_model, index, toy_scene, 99, "red box", bounds, stub
            )

    def test_one_for_one_swap(self, tiny_model, index, toy_scene, bounds, stub, library):
        out = replace_instance(
            tiny_model, index, toy_scene, 0, "blue cylinder", bounds, stub,
            rng=np.random.default_rng(0), k=1,
        )
        assert len(out.instances) == len(toy_scene.instances)
        want = next(a for a in library if a.color_name == "blue" and a.shape == "cylinder")
        assert out.instances[0].asset_id == want.id

    def test_other_instances_untouched(self, tiny_model, index, toy_scene, bounds, stub):
        out = replace_instance(
            tiny_model, index, toy_scene, 1, "red box", bounds, stub,
            rng=np.random.default_rng(0), k=1,
        )
        for i, (a, b) in enumerate(zip(toy_scene.instances, out.instances)):
            if i != 1:
                assert a == b

    def test_self_embedding_prompt_retrieves_same_asset(
        self, tiny_model, index, toy_scene, bounds, stub, library
    ):
        lookup = {a.id: a for a in library}
        target = lookup[toy_scene.instances[0].asset_id]
        prompt = f"{target.color_name} {target.shape}"
        out = replace_instance(
            tiny_model, index, toy_scene, 0, prompt, bounds, stub,
            rng=np.random.default_rng(0), k=1,
        )
        assert out.instances[0].asset_id == target.id
