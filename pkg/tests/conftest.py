import numpy as np
import pytest
import torch

from scenesynth.embedding import StubEncoder, build_index
from scenesynth.model import ModelConfig, SceneModel
from scenesynth.scene import compute_bounds
from scenesynth.toyworld import generate_dataset, generate_library


# one human-readable verdict line per acceptance criterion, printed after the
# run (terminal summary is never swallowed by output capture)
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def stub():
    return StubEncoder()


@pytest.fixture(scope="session")
def library():
    return generate_library(n_shapes=3, n_colors=4, seed=7)


@pytest.fixture(scope="session")
def assets(library):
    return {a.id: a for a in library}


@pytest.fixture(scope="session")
def index(library, stub):
    return build_index(library, stub, room_types={a.id: ["toy"] for a in library})


@pytest.fixture(scope="session")
def scenes(library):
    return generate_dataset(12, seed=3, library=library)


@pytest.fixture(scope="session")
def bounds(scenes):
    return compute_bounds(scenes)


@pytest.fixture(scope="session")
def tiny_config():
    return ModelConfig(
        feature_dim=64,
        query_dim=64,
        n_layers=1,
        n_heads=2,
        ff_dim=128,
        mol_components=5,
        sinusoid_freqs=4,
        head_hidden=64,
        floor_encoder="conv4",
    )


@pytest.fixture()
def tiny_model(tiny_config):
    torch.manual_seed(0)
    model = SceneModel(tiny_config)
    model.eval()
    return model


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
