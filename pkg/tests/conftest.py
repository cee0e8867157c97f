import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rankfield import Grid, PointPattern, WeightFunction, fit_csr, unit_window

# fixture seeds frozen once; the suite is a deterministic regression
REFERENCE_FIT_SEED = 777
REFERENCE_GRID = Grid(0.0, 0.5, 100)
REFERENCE_PHI = WeightFunction("indicator")


def seeded_pattern(seed: int, n: int, d: int = 2) -> PointPattern:
    rng = np.random.default_rng(seed)
    return PointPattern(rng.uniform(size=(n, d)), unit_window(d))


@pytest.fixture(scope="session")
def reference_models():
    """Full-scale CSR null models (n_mean=300, n_null=200, n=100) for k=0,1."""
    return {
        k: fit_csr(300, 200, 100, k, REFERENCE_GRID, REFERENCE_PHI, seed=REFERENCE_FIT_SEED)
        for k in (0, 1)
    }


@pytest.fixture()
def equilateral_triangle():
    return PointPattern([[0.0, 0.0], [2.0, 0.0], [1.0, np.sqrt(3.0)]])


@pytest.fixture()
def regular_tetrahedron():
    pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(2.0)
    return PointPattern(pts)


@pytest.fixture()
def regular_octahedron():
    s = np.sqrt(2.0)
    pts = np.array([[s, 0, 0], [-s, 0, 0], [0, s, 0], [0, -s, 0], [0, 0, s], [0, 0, -s]])
    return PointPattern(pts)
