import numpy as np
import pytest

from f3a.cues import cue_set
from f3a.model import HyperParams, TokenGrid


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def random_grid(rng, rows, cols, d=32):
    return TokenGrid(rows, cols, rng.standard_normal((rows * cols, d)))


def random_cues(rng, d_t=16, n_targets=1, n_options=0):
    vecs = [unit(rng.standard_normal(d_t)) for _ in range(1 + n_targets)]
    opts = [unit(rng.standard_normal(d_t)) for _ in range(n_options)]
    return cue_set(vecs, opts)


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_hp():
    # fits d_v = 32, d_t = 16
    return HyperParams(heads=8, sensing_dim=64, nonzeros_v=8, nonzeros_t=4, mask_ones=16, active_heads=3)
