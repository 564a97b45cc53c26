"""Planted-evidence tasks, selection metrics, token demand and the sign test."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .baselines import PRUNER_KINDS, run_pruner
from .model import Cue, CueSet, HyperParams, InvalidArgument, Rng, TokenGrid
from .sensing import build_bank, single_cue_field

SCENARIOS = ("single_region", "distributed", "peripheral_small", "option_discrimination")
NOISE = 0.3
ALIGN_CANDIDATES = 64
MIN_SIDE = 8

# one-group-at-a-time variations, in table order
DEFAULT_SWEEPS = (
    ("Sensing heads", "heads", 8),
    ("Sensing heads", "heads", 32),
    ("Coarse window", "window", 1),
    ("Coarse window", "window", 3),
    ("Rescue budget", "jump_fraction", 0.10),
    ("Rescue budget", "jump_fraction", 0.20),
    ("Random seed", "seed", 7),
    ("Random seed", "seed", 123),
)


@dataclass(frozen=True)
class SyntheticTask:
    grid: TokenGrid
    cues: CueSet
    evidence: tuple[int, ...]
    distractors: tuple[int, ...]
    scenario: str
    seed: int


def worker_count() -> int:
    raw = os.environ.get("F3A_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidArgument(f"F3A_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _rand_unit(rng: Rng, d: int) -> np.ndarray:
    return _unit(rng.gaussian_array(d))


def _aligned_direction(rng: Rng, bank, cue: np.ndarray, hp: HyperParams) -> np.ndarray:
    """Best of a batch of random visual directions by response to ``cue``."""
    d_v = bank.dim_v
    cands = np.stack([_rand_unit(rng, d_v) for _ in range(ALIGN_CANDIDATES)])
    resp = single_cue_field(bank, TokenGrid(1, ALIGN_CANDIDATES, cands), cue, hp)
    return cands[int(np.argmax(resp))]


def _rect(r0: int, c0: int, h: int, w: int, cols: int) -> list[int]:
    return [r * cols + c for r in range(r0, r0 + h) for c in range(c0, c0 + w)]


def _place(rng: Rng, rows: int, cols: int, h: int, w: int) -> tuple[int, int]:
    return rng.below(rows - h + 1), rng.below(cols - w + 1)


def _far_pair(rng: Rng, rows: int, cols: int, size: int, taken: set) -> tuple[list[int], list[int]]:
    min_sep = max(rows, cols) // 2
    for _ in range(1000):
        a = _place(rng, rows, cols, size, size)
        b = _place(rng, rows, cols, size, size)
        if max(abs(a[0] - b[0]), abs(a[1] - b[1])) >= min_sep:
            ba, bb = _rect(*a, size, size, cols), _rect(*b, size, size, cols)
            if not taken.intersection(ba + bb):
                return ba, bb
    raise InvalidArgument("could not place two far-apart blobs on this grid")


def _free_blob(rng: Rng, rows: int, cols: int, h: int, w: int, taken: set) -> list[int]:
    for _ in range(1000):
        r0, c0 = _place(rng, rows, cols, h, w)
        blob = _rect(r0, c0, h, w, cols)
        if not taken.intersection(blob):
            return blob
    raise InvalidArgument("could not place a blob clear of the evidence")


def _peripheral_blob(rng: Rng, rows: int, cols: int) -> list[int]:
    side = rng.below(4)
    if side in (0, 1):  # top / bottom band, horizontal pair
        r = rng.below(2) if side == 0 else rows - 1 - rng.below(2)
        c = rng.below(cols - 1)
        return [r * cols + c, r * cols + c + 1]
    c = rng.below(2) if side == 2 else cols - 1 - rng.below(2)
    r = rng.below(rows - 1)
    return [r * cols + c, (r + 1) * cols + c]


def generate_task(
    scenario: str,
    seed: int,
    rows: int = 24,
    cols: int = 24,
    d_v: int = 64,
    d_t: int = 64,
    hp: Optional[HyperParams] = None,
) -> SyntheticTask:
    """Build a grid with planted evidence that the sensing bank can smell.

    Evidence tokens are noisy copies of a visual direction picked, among
    random candidates, for its response to the task's cue under ``hp``'s
    bank. Distractors share a different direction nearly orthogonal to it;
    every other token is pure noise.
    """
    if scenario not in SCENARIOS:
        raise InvalidArgument(f"unknown scenario {scenario!r}")
    if min(d_v, d_t) < 1:
        raise InvalidArgument("dimensions must be positive")
    if rows < MIN_SIDE or cols < MIN_SIDE:
        raise InvalidArgument(f"scenario layouts need at least {MIN_SIDE}x{MIN_SIDE} grids, got {rows}x{cols}")
    hp = hp or HyperParams()
    bank = build_bank(hp, d_v, d_t)
    rng = Rng(seed)
    n = rows * cols

    c_global = _rand_unit(rng, d_t)
    option_vecs = []
    if scenario == "option_discrimination":
        option_vecs = [_unit(c_global + _rand_unit(rng, d_t)) for _ in range(2)]

    blobs: list[tuple[list[int], np.ndarray]] = []
    taken: set = set()
    if scenario == "single_region":
        r0, c0 = _place(rng, rows, cols, 2, 4)
        blobs.append((_rect(r0, c0, 2, 4, cols), c_global))
    elif scenario == "distributed":
        a, b = _far_pair(rng, rows, cols, 2, taken)
        blobs += [(a, c_global), (b, c_global)]
    elif scenario == "peripheral_small":
        blobs.append((_peripheral_blob(rng, rows, cols), c_global))
    else:
        a, b = _far_pair(rng, rows, cols, 2, taken)
        blobs += [(a, option_vecs[0]), (b, option_vecs[1])]
    evidence = sorted(i for blob, _ in blobs for i in blob)
    taken.update(evidence)

    if scenario == "peripheral_small":
        r0, c0 = (rows - 3) // 2, (cols - 4) // 2
        distractors = [i for i in _rect(r0, c0, 3, 4, cols) if i not in taken]
    else:
        distractors = _free_blob(rng, rows, cols, 2, 2, taken)

    directions = [_aligned_direction(rng, bank, cue, hp) for _, cue in blobs]
    u_main = directions[0]
    for _ in range(10000):
        u_other = _rand_unit(rng, d_v)
        if abs(float(u_main @ u_other)) < 0.2:
            break
    else:  # pragma: no cover - vanishingly unlikely for d_v >= 8
        raise InvalidArgument("could not draw a distractor direction")

    noise = rng.gaussian_array(n * d_v).reshape(n, d_v)
    tokens = noise.copy()
    for (blob, _), u in zip(blobs, directions):
        tokens[blob] = u + NOISE * noise[blob]
    tokens[distractors] = u_other + NOISE * noise[distractors]
    tokens /= np.linalg.norm(tokens, axis=1, keepdims=True)

    cues = CueSet(
        (Cue("global", c_global, "global"),),
        tuple(Cue("option", v, chr(ord("A") + i)) for i, v in enumerate(option_vecs)),
        "multiple_choice" if option_vecs else "open_ended",
    )
    return SyntheticTask(TokenGrid(rows, cols, tokens), cues, tuple(evidence), tuple(sorted(distractors)), scenario, seed)


@dataclass(frozen=True)
class MetricRow:
    scenario: str
    method: str
    ratio: float
    seed: int
    evidence_recall: float
    distractor_rate: float
    spatial_coverage: float
    runtime_ns: int


def selection_metrics(task: SyntheticTask, selected: Sequence[int]) -> tuple[float, float, float]:
    sel = set(int(i) for i in selected)
    ev = task.evidence
    recall = sum(i in sel for i in ev) / len(ev)
    rate = sum(i in sel for i in task.distractors) / len(sel)
    cols = task.grid.cols
    sel_rc = np.array([divmod(i, cols) for i in sorted(sel)])
    covered = 0
    for i in ev:
        r, c = divmod(i, cols)
        if np.any(np.maximum(np.abs(sel_rc[:, 0] - r), np.abs(sel_rc[:, 1] - c)) <= 1):
            covered += 1
    return recall, rate, covered / len(ev)


def evaluate(task: SyntheticTask, method: str, hp: HyperParams, ratio: float) -> MetricRow:
    if not 0.0 < ratio <= 1.0:
        raise InvalidArgument(f"retention ratio must lie in (0, 1], got {ratio}")
    bank = build_bank(hp, task.grid.dim_v, task.cues.dim_t)
    t0 = time.perf_counter_ns()
    selected = run_pruner(method, task.grid, task.cues, bank, hp, ratio)
    elapsed = time.perf_counter_ns() - t0
    recall, rate, cov = selection_metrics(task, selected)
    return MetricRow(task.scenario, method, float(ratio), task.seed, recall, rate, cov, elapsed)


@dataclass
class BatteryConfig:
    rows: int = 24
    cols: int = 24
    d_v: int = 64
    d_t: int = 64
    seeds: Sequence[int] = tuple(range(100))
    ratios: Sequence[float] = (0.2, 0.4, 0.6)
    scenarios: Sequence[str] = SCENARIOS
    methods: Sequence[str] = PRUNER_KINDS
    params: dict = field(default_factory=dict)
    sweeps: Sequence[tuple] = ()
    sweep_ratio: float = 0.4
    sweep_method: str = "f3a"

    def hyperparams(self) -> HyperParams:
        return HyperParams().with_overrides(self.params)


def _map(fn, items: list, threads: int) -> list:
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_battery(
    cfg: BatteryConfig,
    hp: Optional[HyperParams] = None,
    methods: Optional[Iterable[str]] = None,
    ratios: Optional[Iterable[float]] = None,
    threads: Optional[int] = None,
) -> list[MetricRow]:
    """Evaluate every (scenario, seed, method, ratio) cell; rows come back in key order."""
    hp = hp or cfg.hyperparams()
    methods = list(methods or cfg.methods)
    ratios = [float(r) for r in (ratios or cfg.ratios)]
    for m in methods:
        if m not in PRUNER_KINDS:
            raise InvalidArgument(f"unknown method {m!r}")
    threads = worker_count() if threads is None else threads

    keys = [(sc, int(sd)) for sc in cfg.scenarios for sd in cfg.seeds]
    tasks = _map(lambda k: generate_task(k[0], k[1], cfg.rows, cfg.cols, cfg.d_v, cfg.d_t, hp), keys, threads)
    jobs = [(t, m, r) for t in tasks for m in methods for r in ratios]
    rows = _map(lambda j: evaluate(j[0], j[1], hp, j[2]), jobs, threads)
    return sorted(rows, key=lambda r: (r.scenario, r.method, r.ratio, r.seed))


def summarize(rows: Iterable[MetricRow]) -> list[dict]:
    """Mean metrics per (scenario, method, ratio), sorted by key."""
    cells: dict = {}
    for r in rows:
        cells.setdefault((r.scenario, r.method, r.ratio), []).append(r)
    out = []
    for (sc, m, ratio), rs in sorted(cells.items()):
        out.append({
            "scenario": sc,
            "method": m,
            "ratio": ratio,
            "n_tasks": len(rs),
            "evidence_recall": float(np.mean([r.evidence_recall for r in rs])),
            "distractor_rate": float(np.mean([r.distractor_rate for r in rs])),
            "spatial_coverage": float(np.mean([r.spatial_coverage for r in rs])),
            "runtime_ns": int(sum(r.runtime_ns for r in rs)),
        })
    return out


def mean_recall(rows: Iterable[MetricRow]) -> float:
    return float(np.mean([r.evidence_recall for r in rows]))


def run_sweeps(cfg: BatteryConfig, threads: Optional[int] = None) -> list[dict]:
    """One hyperparameter group at a time, reported as mean recall and delta vs default."""
    base_hp = cfg.hyperparams()
    sweeps = list(cfg.sweeps) or list(DEFAULT_SWEEPS)

    def recall_for(hp):
        return mean_recall(run_battery(cfg, hp, [cfg.sweep_method], [cfg.sweep_ratio], threads))

    default = recall_for(base_hp)
    out = [{"group": "Default", "setting": "defaults", "mean_recall": default, "delta": 0.0}]
    for group, name, value in sweeps:
        hp = base_hp.with_overrides({name: value})
        r = default if hp == base_hp else recall_for(hp)
        out.append({"group": group, "setting": f"{name}={value}", "mean_recall": r, "delta": r - default})
    return out


@dataclass(frozen=True)
class RetentionCurve:
    model: str
    method: str
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple(sorted((float(r), float(a)) for r, a in self.points))
        if not pts:
            raise InvalidArgument("retention curve has no points")
        rhos = [r for r, _ in pts]
        if len(set(rhos)) != len(rhos):
            raise InvalidArgument(f"duplicate retention ratios in curve {self.model}/{self.method}")
        if any(not (0.0 < r <= 1.0) for r in rhos):
            raise InvalidArgument("retention ratios must lie in (0, 1]")
        if rhos[-1] != 1.0:
            raise InvalidArgument(f"curve {self.model}/{self.method} lacks the full-token point (rho=1)")
        if any(not math.isfinite(a) for _, a in pts):
            raise InvalidArgument("accuracies must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def full_accuracy(self) -> float:
        return self.points[-1][1]


def interpolate(curve: RetentionCurve, rho: float) -> float:
    pts = curve.points
    for (r0, a0), (r1, a1) in zip(pts, pts[1:]):
        if r0 <= rho <= r1:
            return a0 + (rho - r0) / (r1 - r0) * (a1 - a0)
    if rho <= pts[0][0]:
        return pts[0][1]
    return pts[-1][1]


def token_demand(curve: RetentionCurve, tau: float) -> float:
    """Smallest retention (in %) whose interpolated accuracy reaches tau x full.

    No extrapolation below the lowest measured ratio: if that point already
    meets the target, it is returned.
    """
    if not 0.0 < tau <= 1.0:
        raise InvalidArgument(f"tau must lie in (0, 1], got {tau}")
    target = tau * curve.full_accuracy
    pts = curve.points
    if pts[0][1] >= target:
        return 100.0 * pts[0][0]
    for (r0, a0), (r1, a1) in zip(pts, pts[1:]):
        if a1 >= target > a0:
            return 100.0 * (r0 + (target - a0) / (a1 - a0) * (r1 - r0))
    return 100.0


def sign_test(wins: int, trials: int) -> float:
    """Two-sided exact sign test at p0 = 1/2."""
    if isinstance(wins, bool) or isinstance(trials, bool):
        raise InvalidArgument("counts must be integers")
    if int(wins) != wins or int(trials) != trials:
        raise InvalidArgument("counts must be integers")
    wins, trials = int(wins), int(trials)
    if trials < 1 or not 0 <= wins <= trials:
        raise InvalidArgument(f"need 0 <= wins <= trials and trials >= 1, got {wins}/{trials}")
    total = 2**trials
    lower = Fraction(sum(math.comb(trials, i) for i in range(0, wins + 1)), total)
    upper = Fraction(sum(math.comb(trials, i) for i in range(wins, trials + 1)), total)
    return float(min(Fraction(1), 2 * min(lower, upper)))
