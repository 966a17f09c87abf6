import itertools
from pathlib import Path

import numpy as np
import pytest

from lib.config import Settings
from lib.geometry import PointPolytope


FIXTURES = Path(__file__).resolve().parent.parent / "polytopes"


@pytest.fixture
def settings() -> Settings:
    return Settings()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def cube(d: int, half: float = 1.0, center=None) -> PointPolytope:
    corners = np.array(list(itertools.product((-half, half), repeat=d)))
    if center is not None:
        corners = corners + np.asarray(center, dtype=float)
    return PointPolytope(corners)


def circle(n: int, radius: float = 1.0, center=(0.0, 0.0)) -> PointPolytope:
    t = 2.0 * np.pi * np.arange(n) / n
    return PointPolytope(np.column_stack([np.cos(t), np.sin(t)]) * radius + np.asarray(center))


@pytest.fixture
def square() -> PointPolytope:
    return cube(2)


@pytest.fixture
def disk() -> PointPolytope:
    return circle(400)
