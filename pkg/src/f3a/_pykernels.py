"""NumPy implementations of the greedy selection kernels.

The compiled module ``_ckernels`` implements the same two functions with the
same floating-point operation order, so both backends return identical picks
and identical scores.
"""
from __future__ import annotations

import numpy as np


def greedy_penalized(base, cand, init, gram, rows, cols, kappa_tab, w_sim, w_kap, scale, k):
    """Greedy argmax of ``base - scale * pen`` with an online max-penalty.

    ``pen[t]`` is the max over the current set S of
    ``w_sim * gram[cand[t], j] + w_kap * kappa_tab[|dr|, |dc|]``; it counts as
    zero while S is empty. ``init`` seeds S without being picked. Ties go to
    the earlier candidate (callers pass ``cand`` sorted ascending).

    Returns (picks, pick_scores, last_scores) where last_scores holds every
    candidate's score against the final set (picked candidates keep the score
    they had when picked).
    """
    base = np.asarray(base, dtype=np.float64)
    cand = np.asarray(cand, dtype=np.int64)
    n = cand.shape[0]
    pen = np.full(n, -np.inf)
    has = False
    crow = rows[cand]
    ccol = cols[cand]

    def absorb(j):
        nonlocal pen
        term = w_sim * gram[cand, j] + w_kap * kappa_tab[np.abs(crow - rows[j]), np.abs(ccol - cols[j])]
        pen = np.maximum(pen, term)

    for j in np.asarray(init, dtype=np.int64):
        absorb(j)
        has = True

    alive = np.ones(n, dtype=bool)
    picks = np.empty(k, dtype=np.int64)
    pick_scores = np.empty(k)
    last = np.empty(n)
    for step in range(k):
        score = base - scale * pen if has else base.copy()
        score[~alive] = -np.inf
        t = int(np.argmax(score))
        picks[step] = cand[t]
        pick_scores[step] = score[t]
        last[t] = score[t]
        alive[t] = False
        absorb(cand[t])
        has = True
    if alive.any():
        score = base - scale * pen if has else base.copy()
        last[alive] = score[alive]
    return picks, pick_scores, last


def greedy_maxmin(weight, gram, seed, k):
    """Weighted farthest-point selection under cosine distance ``1 - gram``.

    Starts from ``seed``; each step adds the argmax of
    ``weight[i] * min_{j in S} (1 - gram[i, j])`` over unchosen tokens.
    """
    weight = np.asarray(weight, dtype=np.float64)
    n = weight.shape[0]
    picks = np.empty(k, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    picks[0] = seed
    alive[seed] = False
    mind = 1.0 - gram[:, seed]
    for step in range(1, k):
        gain = weight * mind
        gain[~alive] = -np.inf
        t = int(np.argmax(gain))
        picks[step] = t
        alive[t] = False
        mind = np.minimum(mind, 1.0 - gram[:, t])
    return picks
