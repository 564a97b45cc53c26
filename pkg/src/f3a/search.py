"""Three-stage budgeted token search: coarse windows, lock-on, rescue jump."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cues import apply_cue_ablations
from .model import (
    Budget,
    CueSet,
    HyperParams,
    InvalidArgument,
    SelectionTrace,
    TokenGrid,
    round_half_up,
)
from .sensing import FieldContext, OdorField, SensingBank

DEGENERATE_RANGE = 1e-12


def normalize(values) -> np.ndarray:
    """Min-max rescale to [0, 1]; a (near-)constant input maps to zeros."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise InvalidArgument("cannot normalize an empty domain")
    lo, hi = x.min(), x.max()
    if hi - lo <= DEGENERATE_RANGE:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


@dataclass(frozen=True)
class StageBudgets:
    k: int
    k_main: int
    k_jump: int


def stage_budgets(k: int, hp: HyperParams) -> StageBudgets:
    k_jump = min(max(round_half_up(hp.jump_fraction * k), 0), k - 1) if hp.use_rescue else 0
    return StageBudgets(k, k - k_jump, k_jump)


def window_partition(grid: TokenGrid, w: int) -> list[np.ndarray]:
    """Non-overlapping w x w windows in row-major window order; edge windows may be smaller."""
    if w < 1:
        raise InvalidArgument("window size must be >= 1")
    out = []
    for r0 in range(0, grid.rows, w):
        for c0 in range(0, grid.cols, w):
            rr, cc = np.meshgrid(
                np.arange(r0, min(r0 + w, grid.rows)), np.arange(c0, min(c0 + w, grid.cols)), indexing="ij"
            )
            out.append((rr * grid.cols + cc).ravel())
    return out


def _top_by_odor(a: np.ndarray, idx, count: int) -> list[int]:
    idx = np.asarray(sorted(int(i) for i in idx), dtype=np.int64)
    order = np.argsort(-a[idx], kind="stable")
    return sorted(int(i) for i in idx[order[:count]])


def select_windows(window_scores: np.ndarray, windows: list[np.ndarray], m: int, k_main: int) -> list[int]:
    """Window ids of the TopM by score (ties to lower id), grown until they hold >= k_main tokens."""
    order = np.argsort(-window_scores, kind="stable")
    size = sum(len(windows[w]) for w in order[:m])
    while size < k_main and m < len(windows):
        size += len(windows[order[m]])
        m += 1
    return [int(w) for w in order[:m]]


def coarse_search(a: np.ndarray, grid: TokenGrid, hp: HyperParams, k_main: int):
    windows = window_partition(grid, hp.window)
    scores = np.array([a[w].mean() for w in windows])
    m = min(len(windows), math.ceil(hp.pool_multiplier * k_main / hp.window**2))
    chosen = select_windows(scores, windows, m, k_main)
    pool = sorted(int(i) for w in chosen for i in windows[w])
    scaffold = sorted(i for w in chosen for i in _top_by_odor(a, windows[w], hp.scaffold_per_window))
    return pool, scaffold


def _shift_stack(values: np.ndarray, grid: TokenGrid, r: int):
    """Yield (shifted, valid) for every offset of a Chebyshev-r neighborhood."""
    img = values.reshape(grid.rows, grid.cols)
    for dr in range(-r, r + 1):
        for dc in range(-r, r + 1):
            if abs(dr) >= grid.rows or abs(dc) >= grid.cols:
                continue  # offset leaves the grid entirely
            shifted = np.zeros_like(img)
            valid = np.zeros(img.shape, dtype=bool)
            rs = slice(max(0, -dr), min(grid.rows, grid.rows - dr))
            cs = slice(max(0, -dc), min(grid.cols, grid.cols - dc))
            rt = slice(max(0, dr), min(grid.rows, grid.rows + dr))
            ct = slice(max(0, dc), min(grid.cols, grid.cols + dc))
            shifted[rs, cs] = img[rt, ct]
            valid[rs, cs] = True
            yield shifted, valid


def local_support_all(a: np.ndarray, s: np.ndarray, grid: TokenGrid, r: int) -> np.ndarray:
    total = np.zeros((grid.rows, grid.cols))
    count = np.zeros((grid.rows, grid.cols))
    best = np.full((grid.rows, grid.cols), -np.inf)
    for (sa, valid), (ss, _) in zip(_shift_stack(a, grid, r), _shift_stack(s, grid, r)):
        total += np.where(valid, sa, 0.0)
        count += valid
        best = np.where(valid, np.maximum(best, ss), best)
    return (0.5 * total / count + 0.5 * best).ravel()


def neighborhood(i: int, grid: TokenGrid, r: int) -> list[int]:
    ri, ci = divmod(i, grid.cols)
    return [
        rr * grid.cols + cc
        for rr in range(max(0, ri - r), min(grid.rows, ri + r + 1))
        for cc in range(max(0, ci - r), min(grid.cols, ci + r + 1))
    ]


def local_support(a: np.ndarray, grid: TokenGrid, hp: HyperParams, i: int, s: np.ndarray) -> float:
    nb = neighborhood(i, grid, hp.lock_radius)
    return 0.5 * float(np.mean(a[nb])) + 0.5 * float(np.max(s[nb]))


def detail_contrast(grid: TokenGrid) -> np.ndarray:
    """Mean Euclidean distance from each token to its (border-clipped) 4-neighbours."""
    v = grid.tokens.reshape(grid.rows, grid.cols, -1)
    total = np.zeros((grid.rows, grid.cols))
    count = np.zeros((grid.rows, grid.cols))
    if grid.rows > 1:
        d = np.linalg.norm(v[1:] - v[:-1], axis=2)
        total[1:] += d
        total[:-1] += d
        count[1:] += 1
        count[:-1] += 1
    if grid.cols > 1:
        d = np.linalg.norm(v[:, 1:] - v[:, :-1], axis=2)
        total[:, 1:] += d
        total[:, :-1] += d
        count[:, 1:] += 1
        count[:, :-1] += 1
    return np.divide(total, count, out=np.zeros_like(total), where=count > 0).ravel()


def option_support(ctx: FieldContext) -> np.ndarray:
    """Per token, the option-cue responses sorted descending along axis 0."""
    fields = np.stack([ctx.single(c) for c in ctx.cues.option_cues])
    return -np.sort(-fields, axis=0)


def task_scores(ctx: FieldContext, odor: OdorField) -> np.ndarray:
    parts = [normalize(odor.a)]
    if ctx.cues.option_cues:
        parts.append(normalize(option_support(ctx)[0]))
    parts.append(normalize(detail_contrast(ctx.grid)))
    return np.mean(parts, axis=0)


def uncertainty(ctx: FieldContext) -> np.ndarray:
    if ctx.cues.prompt_kind == "multiple_choice":
        if len(ctx.cues.option_cues) < 2:
            raise InvalidArgument("multiple-choice uncertainty needs at least two option cues")
        top = option_support(ctx)
        return 1.0 - normalize(top[0] - top[1])
    return 1.0 - normalize(ctx.single(ctx.cues.global_cue))


def kappa_table(grid: TokenGrid, sigma: float) -> np.ndarray:
    dr = np.arange(grid.rows)[:, None]
    dc = np.arange(grid.cols)[None, :]
    return np.exp(-(dr**2 + dc**2) / (2.0 * sigma**2))


def spatial_kernel(p, q, sigma: float) -> float:
    d2 = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
    return math.exp(-d2 / (2.0 * sigma**2))


def unit_rows(tokens: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(tokens, axis=1, keepdims=True)
    return np.divide(tokens, nrm, out=np.zeros_like(tokens), where=nrm > 0)


def cosine_gram(grid: TokenGrid) -> np.ndarray:
    u = unit_rows(grid.tokens)
    return u @ u.T


def redundancy(grid: TokenGrid, hp: HyperParams, i: int, selected) -> float:
    selected = list(selected)
    if not selected:
        return 0.0
    u = unit_rows(grid.tokens)
    pi = divmod(i, grid.cols)
    return max(
        float(u[i] @ u[j]) + spatial_kernel(pi, divmod(j, grid.cols), hp.spatial_bandwidth) for j in selected
    )


def coverage(grid: TokenGrid, hp: HyperParams, i: int, selected) -> float:
    selected = list(selected)
    if not selected:
        return 0.0
    u = unit_rows(grid.tokens)
    pi = divmod(i, grid.cols)
    ac = hp.coverage_balance
    return max(
        ac * float(u[i] @ u[j]) + (1 - ac) * spatial_kernel(pi, divmod(j, grid.cols), hp.spatial_bandwidth)
        for j in selected
    )


class _Geometry:
    def __init__(self, grid: TokenGrid, hp: HyperParams):
        self.gram = cosine_gram(grid)
        coords = grid.coords()
        self.rows = np.ascontiguousarray(coords[:, 0], dtype=np.int64)
        self.cols = np.ascontiguousarray(coords[:, 1], dtype=np.int64)
        self.ktab = kappa_table(grid, hp.spatial_bandwidth)


def lock_on(ctx: FieldContext, odor: OdorField, pool, scaffold, budgets: StageBudgets, geom=None):
    """Greedy lock-on inside the coarse pool. Returns (locked_pool, locked, scores)."""
    hp, grid = ctx.hp, ctx.grid
    a = odor.a
    pool = sorted(int(i) for i in pool)
    start = list(scaffold)
    if len(start) > budgets.k_main:
        start = _top_by_odor(a, start, budgets.k_main)
    start_set = set(start)
    cand = np.array([i for i in pool if i not in start_set], dtype=np.int64)
    need = budgets.k_main - len(start)
    if need > len(cand):
        raise InvalidArgument("coarse pool smaller than the main budget")
    if need == 0:
        return pool, sorted(start), {}
    if not hp.use_lockon:
        return pool, sorted(start + _top_by_odor(a, cand, need)), {}

    s = task_scores(ctx, odor)
    ell = local_support_all(a, s, grid, hp.lock_radius)
    pool_arr = np.array(pool, dtype=np.int64)
    na = np.empty(grid.n)
    nl = np.empty(grid.n)
    na[pool_arr] = normalize(a[pool_arr])
    nl[pool_arr] = normalize(ell[pool_arr])
    base = na[cand] + hp.local_weight * nl[cand]
    geom = geom or _Geometry(grid, hp)
    picks, _, last = kernels.greedy_penalized(
        base, cand, np.array(sorted(start), dtype=np.int64), geom.gram, geom.rows, geom.cols, geom.ktab,
        1.0, 1.0, hp.redundancy_weight / 2.0, need,
    )
    scores = {int(i): float(v) for i, v in zip(cand, last)}
    return pool, sorted(start + [int(p) for p in picks]), scores


def rescue_jump(ctx: FieldContext, odor: OdorField, locked, budgets: StageBudgets, geom=None):
    """Greedy rescue outside the locked set. Returns (rescue, scores)."""
    hp, grid = ctx.hp, ctx.grid
    if budgets.k_jump == 0:
        return [], {}
    locked_set = set(int(i) for i in locked)
    cand = np.array([i for i in range(grid.n) if i not in locked_set], dtype=np.int64)
    base = normalize(odor.a)[cand] + hp.uncertainty_weight * uncertainty(ctx)[cand]
    geom = geom or _Geometry(grid, hp)
    ac = hp.coverage_balance
    picks, _, last = kernels.greedy_penalized(
        base, cand, np.array(sorted(locked_set), dtype=np.int64), geom.gram, geom.rows, geom.cols, geom.ktab,
        ac, 1.0 - ac, hp.coverage_penalty, budgets.k_jump,
    )
    scores = {int(i): float(v) for i, v in zip(cand, last)}
    return sorted(int(p) for p in picks), scores


def select(grid: TokenGrid, cues: CueSet, bank: SensingBank, hp: HyperParams, budget: Budget) -> SelectionTrace:
    if budget.k > grid.n or budget.k < 1:
        raise InvalidArgument(f"budget K={budget.k} outside [1, {grid.n}]")
    ctx = FieldContext(bank, grid, apply_cue_ablations(cues, hp), hp)
    odor = ctx.odor()
    budgets = stage_budgets(budget.k, hp)
    geom = _Geometry(grid, hp)
    pool, scaffold = coarse_search(odor.a, grid, hp, budgets.k_main)
    locked_pool, locked, lock_scores = lock_on(ctx, odor, pool, scaffold, budgets, geom)
    rescue, rescue_scores = rescue_jump(ctx, odor, locked, budgets, geom)
    final = sorted(locked + rescue)
    return SelectionTrace(
        odor=odor.a,
        coarse_pool=pool,
        scaffold=scaffold,
        locked_pool=locked_pool,
        locked=locked,
        rescue=rescue,
        final=final,
        coords=[divmod(i, grid.cols) for i in final],
        k=budget.k,
        k_main=budgets.k_main,
        k_jump=budgets.k_jump,
        lock_scores=lock_scores,
        rescue_scores=rescue_scores,
    )
