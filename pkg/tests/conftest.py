import numpy as np
import pytest

from pcq import BUILTIN_PROFILES, PointSet


@pytest.fixture
def lidar1():
    return BUILTIN_PROFILES["lidar1"]


@pytest.fixture
def lidar2():
    return BUILTIN_PROFILES["lidar2"]


def random_pointset(rng, n, az_span=(0.0, 360.0), el_span=(-20.0, 20.0),
                    r_span=(1.0, 80.0), i_span=(0.0, 1.0)):
    return PointSet(
        rng.uniform(*r_span, n),
        rng.uniform(*az_span, n),
        rng.uniform(*el_span, n),
        rng.uniform(*i_span, n),
    )


def rel_diff(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-12)
