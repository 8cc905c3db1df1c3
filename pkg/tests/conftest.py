import numpy as np
import pytest

from eventsig.signature import PiecewisePath
from eventsig.tensor_algebra import TruncatedTensor
from eventsig.words import storage_size


def random_path(rng: np.random.Generator, dim: int, n_points: int | None = None) -> PiecewisePath:
    n = n_points or int(rng.integers(2, 9))
    return PiecewisePath(rng.normal(size=(n, dim)))


def random_tensor(rng: np.random.Generator, dim: int, level: int) -> TruncatedTensor:
    return TruncatedTensor(dim, level, rng.normal(size=storage_size(dim, level)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20160105)
