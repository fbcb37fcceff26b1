import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def hausdorff(u, v):
    u = np.asarray(u).ravel()
    v = np.asarray(v).ravel()
    if len(u) == 0 and len(v) == 0:
        return 0.0
    d = np.abs(u[:, None] - v[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
