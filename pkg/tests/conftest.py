from pathlib import Path

import numpy as np
import pytest

ASSETS = Path(__file__).resolve().parent.parent / "assets"


@pytest.fixture(scope="session")
def cifar_file(tmp_path_factory) -> Path:
    """A 1000-image synthetic dataset in CIFAR-10 binary layout."""
    from axemu import write_synthetic_cifar10

    path = tmp_path_factory.mktemp("data") / "synthetic_test_batch.bin"
    write_synthetic_cifar10(path, 1000, seed=7)
    return path


@pytest.fixture(scope="session")
def smallnet_model() -> Path:
    path = ASSETS / "smallnet.json"
    assert path.exists(), "pretrained model missing from assets/"
    return path


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1)
