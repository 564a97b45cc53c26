"""Shared data model: grids, cues, budgets, hyperparameters, traces and the PRNG."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

CUE_KINDS = ("global", "target", "task", "option")
PROMPT_KINDS = ("open_ended", "multiple_choice")


class InvalidArgument(ValueError):
    """Raised when an operation receives inputs outside its domain."""


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


class Rng:
    """SplitMix64 generator.

    ``next_array`` draws a block of outputs at once; it produces exactly the
    values that repeated ``next`` calls would, since SplitMix64 output k depends
    only on ``seed + k * gamma``.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def next_array(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GOLDEN_GAMMA) & MASK64
        return z

    def uniform01(self) -> float:
        return self.next() * 2.0**-64

    def uniform_array(self, n: int) -> np.ndarray:
        return self.next_array(n).astype(np.float64) * 2.0**-64

    def below(self, bound: int) -> int:
        """Integer in [0, bound) by modulo reduction."""
        return self.next() % bound

    def gaussian(self) -> float:
        u1 = self.uniform01()
        u2 = self.uniform01()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def gaussian_array(self, n: int) -> np.ndarray:
        # interleaved (u1, u2) pairs, same consumption order as gaussian()
        u = self.uniform_array(2 * n).reshape(n, 2)
        return np.sqrt(-2.0 * np.log(1.0 - u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


def splitmix_next(rng: Rng) -> int:
    return rng.next()


@dataclass(frozen=True)
class TokenGrid:
    rows: int
    cols: int
    tokens: np.ndarray  # (N, dim_v), row-major over the grid

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidArgument(f"grid shape must be positive, got {self.rows}x{self.cols}")
        tokens = np.ascontiguousarray(self.tokens, dtype=np.float64)
        if tokens.ndim == 3:
            tokens = tokens.reshape(-1, tokens.shape[-1])
        if tokens.ndim != 2 or tokens.shape[0] != self.rows * self.cols:
            raise InvalidArgument(
                f"expected {self.rows * self.cols} token vectors, got array of shape {self.tokens.shape}"
            )
        if tokens.shape[1] < 1:
            raise InvalidArgument("token dimension must be positive")
        if not np.all(np.isfinite(tokens)):
            raise InvalidArgument("token vectors must be finite")
        tokens.setflags(write=False)
        object.__setattr__(self, "tokens", tokens)

    @property
    def n(self) -> int:
        return self.rows * self.cols

    @property
    def dim_v(self) -> int:
        return self.tokens.shape[1]

    def coords(self) -> np.ndarray:
        idx = np.arange(self.n)
        return np.stack([idx // self.cols, idx % self.cols], axis=1)

    def scaled(self, s: float) -> TokenGrid:
        return TokenGrid(self.rows, self.cols, self.tokens * s)


def grid_coord(i: int, grid: TokenGrid) -> tuple[int, int]:
    if not 0 <= i < grid.n:
        raise InvalidArgument(f"token index {i} out of range for {grid.n} tokens")
    return i // grid.cols, i % grid.cols


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0 or not math.isfinite(nrm):
        raise InvalidArgument("cannot normalize a zero or non-finite vector")
    return v / nrm


@dataclass(frozen=True)
class Cue:
    kind: str
    vector: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.kind not in CUE_KINDS:
            raise InvalidArgument(f"unknown cue kind {self.kind!r}")
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or abs(float(np.linalg.norm(vec)) - 1.0) > 1e-6:
            raise InvalidArgument("cue vector must be a unit-norm 1-D vector")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def dim_t(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class CueSet:
    cues: tuple[Cue, ...]
    option_cues: tuple[Cue, ...] = ()
    prompt_kind: str = "open_ended"

    def __post_init__(self):
        object.__setattr__(self, "cues", tuple(self.cues))
        object.__setattr__(self, "option_cues", tuple(self.option_cues))
        if not self.cues:
            raise InvalidArgument("a cue set needs at least one cue")
        if any(c.kind == "option" for c in self.cues):
            raise InvalidArgument("option cues belong in option_cues")
        if any(c.kind != "option" for c in self.option_cues):
            raise InvalidArgument("option_cues may only hold option cues")
        if self.prompt_kind not in PROMPT_KINDS:
            raise InvalidArgument(f"unknown prompt kind {self.prompt_kind!r}")
        if (self.prompt_kind == "multiple_choice") != bool(self.option_cues):
            raise InvalidArgument("prompt_kind must be multiple_choice exactly when option cues exist")
        dims = {c.dim_t for c in self.cues + self.option_cues}
        if len(dims) != 1:
            raise InvalidArgument("all cues must share one dimension")

    @property
    def dim_t(self) -> int:
        return self.cues[0].dim_t

    @property
    def global_cue(self) -> Cue:
        for c in self.cues:
            if c.kind == "global":
                return c
        return self.cues[0]


@dataclass(frozen=True)
class HyperParams:
    heads: int = 16
    sensing_dim: int = 128
    nonzeros_v: int = 32
    nonzeros_t: int = 8
    mask_ones: int = 16
    active_heads: int = 4
    gate_temperature: float = 0.5
    seed: int = 42
    window: int = 2
    scaffold_per_window: int = 1
    lock_radius: int = 1
    spatial_bandwidth: float = 2.0
    local_weight: float = 0.35
    redundancy_weight: float = 0.35
    jump_fraction: float = 0.15
    coverage_balance: float = 0.5
    uncertainty_weight: float = 0.25
    coverage_penalty: float = 0.50
    pool_multiplier: float = 2.0
    merge_threshold: float = 0.95
    relevance_floor: float = 0.05
    use_odor_cue: bool = True
    use_multi_cue: bool = True
    use_lockon: bool = True
    use_rescue: bool = True

    def __post_init__(self):
        if not 1 <= self.active_heads <= self.heads:
            raise InvalidArgument("need 1 <= active_heads <= heads")
        if not 0.0 < self.jump_fraction < 1.0:
            raise InvalidArgument("jump_fraction must lie in (0, 1)")
        if not 0.0 <= self.coverage_balance <= 1.0:
            raise InvalidArgument("coverage_balance must lie in [0, 1]")
        if self.mask_ones > self.sensing_dim or self.mask_ones < 1:
            raise InvalidArgument("mask_ones must lie in [1, sensing_dim]")
        if self.nonzeros_v < 1 or self.nonzeros_t < 1 or self.sensing_dim < 1:
            raise InvalidArgument("projection sizes must be positive")
        if self.window < 1 or self.scaffold_per_window < 1 or self.lock_radius < 0:
            raise InvalidArgument("window, scaffold_per_window must be >= 1 and lock_radius >= 0")
        if self.gate_temperature <= 0 or self.spatial_bandwidth <= 0:
            raise InvalidArgument("temperatures and bandwidths must be positive")
        if self.pool_multiplier < 1.0:
            raise InvalidArgument("pool_multiplier must be >= 1")
        if not 0 <= self.seed <= MASK64:
            raise InvalidArgument("seed must be an unsigned 64-bit integer")

    def with_overrides(self, overrides: dict) -> HyperParams:
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise InvalidArgument(f"unknown hyperparameters: {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Budget:
    ratio: float
    k: int


def make_budget(ratio: float, n: int) -> Budget:
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise InvalidArgument(f"token count must be a positive integer, got {n!r}")
    if not (0.0 < ratio <= 1.0):
        raise InvalidArgument(f"retention ratio must lie in (0, 1], got {ratio!r}")
    k = min(max(round_half_up(ratio * n), 1), int(n))
    return Budget(float(ratio), k)


@dataclass
class SelectionTrace:
    odor: np.ndarray
    coarse_pool: list[int]
    scaffold: list[int]
    locked_pool: list[int]
    locked: list[int]
    rescue: list[int]
    final: list[int]
    coords: list[tuple[int, int]]
    k: int
    k_main: int
    k_jump: int
    lock_scores: dict[int, float] = field(default_factory=dict)
    rescue_scores: dict[int, float] = field(default_factory=dict)

    def stage_sizes(self) -> dict:
        return {
            "coarse_pool": len(self.coarse_pool),
            "scaffold": len(self.scaffold),
            "locked_pool": len(self.locked_pool),
            "locked": len(self.locked),
            "rescue": len(self.rescue),
            "final": len(self.final),
        }

    def to_dict(self) -> dict:
        return {
            "K": self.k,
            "K_main": self.k_main,
            "K_jump": self.k_jump,
            "odor": [float(x) for x in self.odor],
            "coarse_pool": list(self.coarse_pool),
            "scaffold": list(self.scaffold),
            "locked_pool": list(self.locked_pool),
            "locked": list(self.locked),
            "rescue": list(self.rescue),
            "final": list(self.final),
            "coords": [list(c) for c in self.coords],
            "lock_scores": {str(k): float(v) for k, v in sorted(self.lock_scores.items())},
            "rescue_scores": {str(k): float(v) for k, v in sorted(self.rescue_scores.items())},
            "stage_sizes": self.stage_sizes(),
        }


def as_index_list(values: Sequence[int]) -> list[int]:
    return sorted(int(v) for v in values)
