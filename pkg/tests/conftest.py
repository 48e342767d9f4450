import os

import numpy as np
import pytest

from qconvnet.idx import SPLIT_FILES, resolve_data_dir


def data_root() -> str:
    return os.environ.get("QCNV_DATA_DIR") or (
        "/root/data" if os.path.isdir("/root/data/mnist") else resolve_data_dir())


def have_dataset(dataset: str) -> bool:
    root = os.path.join(data_root(), dataset)
    return all(os.path.exists(os.path.join(root, name))
               for pair in SPLIT_FILES.values() for name in pair)


needs_mnist = pytest.mark.skipif(not have_dataset("mnist"), reason="mnist files not present")
needs_fashion = pytest.mark.skipif(not have_dataset("fashion"), reason="fashion files not present")


@pytest.fixture(scope="session")
def mnist_dir() -> str:
    if not have_dataset("mnist"):
        pytest.skip("mnist files not present")
    return data_root()


@pytest.fixture(scope="session")
def fashion_dir() -> str:
    if not have_dataset("fashion"):
        pytest.skip("fashion files not present")
    return data_root()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
