import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from f3a import kernels
from f3a.model import TokenGrid
from f3a.search import cosine_gram, kappa_table

BACKENDS = kernels.backends()
needs_ext = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")


def penalized_inputs(seed, rows, cols, quantize):
    rng = np.random.default_rng(seed)
    n = rows * cols
    tokens = rng.standard_normal((n, 6))
    if quantize:
        tokens = np.round(tokens)  # many exact ties
        tokens[np.all(tokens == 0, axis=1)] = 1.0
    grid = TokenGrid(rows, cols, tokens)
    gram = cosine_gram(grid)
    coords = grid.coords()
    perm = rng.permutation(n)
    n_init = int(rng.integers(0, n // 2))
    init = np.sort(perm[:n_init]).astype(np.int64)
    cand = np.sort(perm[n_init:]).astype(np.int64)
    base = rng.standard_normal(len(cand))
    if quantize:
        base = np.round(base)
    k = int(rng.integers(1, len(cand) + 1))
    return (base, cand, init, gram, np.ascontiguousarray(coords[:, 0]), np.ascontiguousarray(coords[:, 1]),
            kappa_table(grid, 2.0), float(rng.uniform(0, 1)), float(rng.uniform(0, 1)), float(rng.uniform(0, 2)), k)


def test_backend_selection():
    assert kernels.BACKEND in BACKENDS
    assert "python" in BACKENDS


@needs_ext
@given(st.integers(0, 10**6), st.integers(1, 8), st.integers(1, 8), st.booleans())
@settings(max_examples=80, deadline=None)
def test_penalized_backends_identical(seed, rows, cols, quantize):
    if rows * cols < 2:
        return
    args = penalized_inputs(seed, rows, cols, quantize)
    py = BACKENDS["python"].greedy_penalized(*args)
    cy = BACKENDS["cython"].greedy_penalized(*args)
    for a, b in zip(py, cy):
        assert np.array_equal(np.asarray(a), np.asarray(b))


@needs_ext
@given(st.integers(0, 10**6), st.integers(2, 40), st.booleans())
@settings(max_examples=80, deadline=None)
def test_maxmin_backends_identical(seed, n, quantize):
    rng = np.random.default_rng(seed)
    tokens = rng.standard_normal((n, 5))
    if quantize:
        tokens = np.round(tokens)
        tokens[np.all(tokens == 0, axis=1)] = 1.0
    gram = cosine_gram(TokenGrid(1, n, tokens))
    weight = rng.uniform(0.05, 1.05, n)
    k = int(rng.integers(1, n + 1))
    s = int(rng.integers(0, n))
    assert np.array_equal(BACKENDS["python"].greedy_maxmin(weight, gram, s, k),
                          BACKENDS["cython"].greedy_maxmin(weight, gram, s, k))


def test_penalized_first_pick_ignores_empty_penalty():
    gram = np.eye(3)
    z = np.zeros(3, dtype=np.int64)
    for mod in BACKENDS.values():
        picks, scores, _ = mod.greedy_penalized(np.array([0.1, 0.5, 0.5]), np.arange(3), np.empty(0, np.int64),
                                                gram, z, np.arange(3), kappa_table(TokenGrid(1, 3, np.eye(3)), 2.0),
                                                1.0, 1.0, 0.5, 1)
        assert picks.tolist() == [1] and scores[0] == 0.5


TRACE_SNIPPET = """
import json, numpy as np
from f3a import kernels
from f3a.harness import generate_task
from f3a.model import HyperParams, make_budget
from f3a.search import select
from f3a.sensing import build_bank
hp = HyperParams()
out = {"backend": kernels.BACKEND}
for sc in ("distributed", "option_discrimination"):
    t = generate_task(sc, 3, 16, 16, 64, 64, hp)
    tr = select(t.grid, t.cues, build_bank(hp, 64, 64), hp, make_budget(0.3, t.grid.n))
    out[sc] = tr.to_dict()
print(json.dumps(out, sort_keys=True))
"""


@needs_ext
def test_selection_traces_identical_across_backends():
    docs = {}
    for name in ("python", "cython"):
        env = dict(os.environ, F3A_KERNELS=name if name == "python" else "")
        res = subprocess.run([sys.executable, "-c", TRACE_SNIPPET], env=env, capture_output=True, text=True, check=True)
        doc = json.loads(res.stdout)
        assert doc.pop("backend") == name
        docs[name] = doc
    assert docs["python"] == docs["cython"]
