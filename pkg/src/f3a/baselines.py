"""Reference pruners in the style of the usual training-free baselines.

These are algorithmic analogues run on the same grid and cue inputs; none of
them needs decoder attention or DPP machinery.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .cues import apply_cue_ablations
from .model import CueSet, HyperParams, InvalidArgument, TokenGrid, make_budget
from .search import cosine_gram, normalize, select
from .sensing import SensingBank, single_cue_field

PRUNER_KINDS = ("f3a", "score_rank", "diversity_maxmin", "similarity_merge", "conditional_diversity")


def _check_k(grid: TokenGrid, k: int) -> None:
    if not 1 <= k <= grid.n:
        raise InvalidArgument(f"K={k} outside [1, {grid.n}]")


def _top(scores: np.ndarray, k: int) -> np.ndarray:
    return np.argsort(-scores, kind="stable")[:k]


def score_rank_select(grid: TokenGrid, cues: CueSet, bank: SensingBank, hp: HyperParams, k: int) -> list[int]:
    """Top-K by global-cue response (stand-in for attention-score ranking)."""
    _check_k(grid, k)
    g = single_cue_field(bank, grid, cues.global_cue, hp)
    return sorted(int(i) for i in _top(g, k))


def diversity_maxmin_select(grid: TokenGrid, k: int) -> list[int]:
    _check_k(grid, k)
    norms = np.linalg.norm(grid.tokens, axis=1)
    seed = int(np.argmax(norms))
    picks = kernels.greedy_maxmin(np.ones(grid.n), cosine_gram(grid), seed, k)
    return sorted(int(i) for i in picks)


def similarity_merge_select(grid: TokenGrid, k: int, threshold: float = 0.95) -> list[int]:
    """Keep cluster centres: sweep by dominance, skipping near-duplicates of kept tokens."""
    _check_k(grid, k)
    gram = cosine_gram(grid)
    dominance = gram.sum(axis=1)
    order = np.argsort(-dominance, kind="stable")
    kept, skipped = [], []
    for i in order:
        if len(kept) == k:
            break
        if kept and gram[i, kept].max() > threshold:
            skipped.append(int(i))
        else:
            kept.append(int(i))
    if len(kept) < k:
        kept += skipped[: k - len(kept)]
    return sorted(kept)


def conditional_diversity_select(
    grid: TokenGrid, cues: CueSet, bank: SensingBank, hp: HyperParams, k: int
) -> list[int]:
    """Greedy relevance-weighted max-min diversity, seeded at the most relevant token."""
    _check_k(grid, k)
    rel = normalize(single_cue_field(bank, grid, cues.global_cue, hp)) + hp.relevance_floor
    seed = int(np.argmax(rel))
    picks = kernels.greedy_maxmin(rel, cosine_gram(grid), seed, k)
    return sorted(int(i) for i in picks)


def run_pruner(
    kind: str, grid: TokenGrid, cues: CueSet, bank: SensingBank, hp: HyperParams, ratio: float
) -> list[int]:
    budget = make_budget(ratio, grid.n)
    k = budget.k
    if kind == "f3a":
        return select(grid, cues, bank, hp, budget).final
    cues = apply_cue_ablations(cues, hp)
    if kind == "score_rank":
        return score_rank_select(grid, cues, bank, hp, k)
    if kind == "diversity_maxmin":
        return diversity_maxmin_select(grid, k)
    if kind == "similarity_merge":
        return similarity_merge_select(grid, k, hp.merge_threshold)
    if kind == "conditional_diversity":
        return conditional_diversity_select(grid, cues, bank, hp, k)
    raise InvalidArgument(f"unknown pruner {kind!r}; expected one of {PRUNER_KINDS}")
