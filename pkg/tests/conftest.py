import numpy as np
import pytest

from cdpr_shaping.config import load_robot

P1 = np.array([0.29, -0.047, 0.62])
P2 = np.array([0.29, -0.047, 1.62])
EXIT_POINTS = np.array([[-2.085, 0.651, 2.726], [2.085, 0.651, 2.735], [-1.079, -1.898, 2.733]])


@pytest.fixture(scope="session")
def creator_cfg():
    return load_robot("creator.json")


@pytest.fixture(scope="session")
def creator(creator_cfg):
    return creator_cfg.model


def random_inner_points(rng, count):
    """Points well inside the exit-point triangle, below the winches."""
    out = []
    while len(out) < count:
        w = rng.dirichlet([4.0, 4.0, 4.0])
        xy = w @ EXIT_POINTS[:, :2]
        z = rng.uniform(0.3, 2.0)
        out.append(np.array([xy[0], xy[1], z]))
    return out
