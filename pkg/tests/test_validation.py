import numpy as np
import pytest

from scenesynth.validation import (
    check_embedding,
    check_is_fitted,
    check_room_type,
    check_scenes,
)


class TestCheckScenes:
    def test_passes_valid_scenes(self, scenes, index):
        assert check_scenes(scenes[:2], index) == scenes[:2]

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="non-empty"):
            check_scenes([])

    def test_rejects_non_scene(self):
        with pytest.raises(TypeError, match="expected Scene"):
            check_scenes([object()])

    def test_rejects_unknown_asset(self, scenes, index):
        import copy

        bad = copy.deepcopy(scenes[0])
        bad.instances[0] = type(bad.instances[0])(
            asset_id="nope", transform=bad.instances[0].transform
        )
        with pytest.raises(ValueError, match="absent from the index"):
            check_scenes([bad], index)


class TestOtherChecks:
    def test_room_type(self):
        assert check_room_type("toy") == "toy"
        with pytest.raises(ValueError, match="room_type"):
            check_room_type("garage")

    def test_embedding_shape(self):
        assert check_embedding(np.zeros(512)).shape == (512,)
        with pytest.raises(ValueError, match="shape"):
            check_embedding(np.zeros(7))
        with pytest.raises(ValueError, match="finite"):
            check_embedding(np.full(512, np.nan))

    def test_is_fitted(self):
        class Unfitted:
            pass

        with pytest.raises(RuntimeError, match="fit"):
            check_is_fitted(Unfitted())
