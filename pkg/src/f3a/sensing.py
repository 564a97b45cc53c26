"""Frozen sparse sensing bank and the prompt-conditioned odor field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Cue, CueSet, HyperParams, InvalidArgument, Rng, TokenGrid

EPS_NORM = 1e-12


def _partial_shuffle(rng: Rng, n: int, k: int) -> np.ndarray:
    perm = list(range(n))
    for j in range(k):
        r = j + rng.below(n - j)
        perm[j], perm[r] = perm[r], perm[j]
    return np.array(perm[:k], dtype=np.int64)


def _sparse_sign_rows(rng: Rng, n_rows: int, n_cols: int, nnz: int) -> np.ndarray:
    mat = np.zeros((n_rows, n_cols))
    scale = 1.0 / np.sqrt(nnz)
    for r in range(n_rows):
        cols = _partial_shuffle(rng, n_cols, nnz)
        signs = np.array([1.0 if (rng.next() >> 63) == 0 else -1.0 for _ in range(nnz)])
        mat[r, cols] = signs * scale
    return mat


@dataclass(frozen=True, eq=False)
class SensingBank:
    proj_v: np.ndarray  # (d_s, d_v)
    proj_t: np.ndarray  # (d_s, d_t)
    masks: np.ndarray  # (H_s, d_s) of 0/1
    seed: int

    @property
    def heads(self) -> int:
        return self.masks.shape[0]

    @property
    def dim_v(self) -> int:
        return self.proj_v.shape[1]

    @property
    def dim_t(self) -> int:
        return self.proj_t.shape[1]

    def mask_indices(self, h: int) -> np.ndarray:
        return np.flatnonzero(self.masks[h])

    def __eq__(self, other):
        if not isinstance(other, SensingBank):
            return NotImplemented
        return (
            self.seed == other.seed
            and np.array_equal(self.proj_v, other.proj_v)
            and np.array_equal(self.proj_t, other.proj_t)
            and np.array_equal(self.masks, other.masks)
        )


_BANK_CACHE: dict = {}


def build_bank(hp: HyperParams, d_v: int, d_t: int) -> SensingBank:
    """Regenerate the frozen bank from ``hp.seed``.

    One SplitMix64 stream fills A_v rows, then A_t rows, then the head masks.
    Per row: a partial Fisher-Yates shuffle picks the support, then one draw
    per non-zero gives its sign (top bit).
    """
    if hp.nonzeros_v > d_v or hp.nonzeros_t > d_t:
        raise InvalidArgument(
            f"non-zeros per row ({hp.nonzeros_v}, {hp.nonzeros_t}) exceed dims ({d_v}, {d_t})"
        )
    if hp.mask_ones > hp.sensing_dim:
        raise InvalidArgument("mask_ones exceeds sensing_dim")
    key = (hp.seed, hp.heads, hp.sensing_dim, hp.nonzeros_v, hp.nonzeros_t, hp.mask_ones, d_v, d_t)
    bank = _BANK_CACHE.get(key)
    if bank is not None:
        return bank
    rng = Rng(hp.seed)
    a_v = _sparse_sign_rows(rng, hp.sensing_dim, d_v, hp.nonzeros_v)
    a_t = _sparse_sign_rows(rng, hp.sensing_dim, d_t, hp.nonzeros_t)
    masks = np.zeros((hp.heads, hp.sensing_dim))
    for h in range(hp.heads):
        masks[h, _partial_shuffle(rng, hp.sensing_dim, hp.mask_ones)] = 1.0
    for arr in (a_v, a_t, masks):
        arr.setflags(write=False)
    bank = SensingBank(a_v, a_t, masks, hp.seed)
    _BANK_CACHE[key] = bank
    return bank


def _cosine(x: np.ndarray, y: np.ndarray) -> float:
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx < EPS_NORM or ny < EPS_NORM:
        return 0.0
    return float(np.dot(x / nx, y / ny))


def head_response(bank: SensingBank, v: np.ndarray, c: np.ndarray, h: int) -> float:
    if not 0 <= h < bank.heads:
        raise InvalidArgument(f"head {h} out of range")
    idx = bank.mask_indices(h)
    return _cosine((bank.proj_v @ v)[idx], (bank.proj_t @ c)[idx])


def gate_heads(bank: SensingBank, c: np.ndarray, hp: HyperParams) -> tuple[np.ndarray, np.ndarray]:
    """Top-k_h heads by masked cue energy, softmax-weighted at temperature tau_h."""
    pt = bank.proj_t @ np.asarray(c, dtype=np.float64)
    act = np.sqrt(((bank.masks * pt) ** 2).sum(axis=1))
    # stable sort on -act keeps the lower head index first among ties
    active = np.argsort(-act, kind="stable")[: hp.active_heads]
    logits = act[active] / hp.gate_temperature
    w = np.exp(logits - logits.max())
    return active, w / w.sum()


@dataclass
class OdorField:
    a: np.ndarray
    per_cue: list[np.ndarray]
    active_heads: list[tuple[np.ndarray, np.ndarray]]


class _Projected:
    """Visual projections of a grid, reusable across cues."""

    def __init__(self, bank: SensingBank, grid: TokenGrid):
        if grid.dim_v != bank.dim_v:
            raise InvalidArgument(f"grid dim_v {grid.dim_v} does not match bank {bank.dim_v}")
        self.bank = bank
        self.pv = grid.tokens @ bank.proj_v.T  # (N, d_s)
        self._unit = {}

    def unit_head(self, h: int) -> np.ndarray:
        u = self._unit.get(h)
        if u is None:
            sub = self.pv[:, self.bank.mask_indices(h)]
            nrm = np.sqrt((sub * sub).sum(axis=1))
            ok = nrm >= EPS_NORM
            u = np.zeros_like(sub)
            u[ok] = sub[ok] / nrm[ok, None]
            self._unit[h] = u
        return u


def _cue_field(proj: _Projected, c: np.ndarray, hp: HyperParams):
    bank = proj.bank
    if c.shape[0] != bank.dim_t:
        raise InvalidArgument(f"cue dim {c.shape[0]} does not match bank {bank.dim_t}")
    active, w = gate_heads(bank, c, hp)
    pt = bank.proj_t @ c
    out = np.zeros(proj.pv.shape[0])
    for h, wh in zip(active, w):
        sub = pt[bank.mask_indices(h)]
        nrm = np.sqrt((sub * sub).sum())
        if nrm < EPS_NORM:
            continue
        out += wh * (proj.unit_head(int(h)) @ (sub / nrm))
    return out, (active, w)


def odor_field(bank: SensingBank, grid: TokenGrid, cues: CueSet, hp: HyperParams) -> OdorField:
    """Per-cue gated head sums; the field is their max over non-option cues."""
    return FieldContext(bank, grid, cues, hp).odor()


def single_cue_field(bank: SensingBank, grid: TokenGrid, cue, hp: HyperParams) -> np.ndarray:
    vec = cue.vector if isinstance(cue, Cue) else np.asarray(cue, dtype=np.float64)
    return _cue_field(_Projected(bank, grid), vec, hp)[0]


class FieldContext:
    """Bank, grid and cues bundled with a shared projection cache."""

    def __init__(self, bank: SensingBank, grid: TokenGrid, cues: CueSet, hp: HyperParams):
        if cues.dim_t != bank.dim_t:
            raise InvalidArgument(f"cue dim {cues.dim_t} does not match bank {bank.dim_t}")
        self.bank, self.grid, self.cues, self.hp = bank, grid, cues, hp
        self.proj = _Projected(bank, grid)
        self._single = {}

    def odor(self) -> OdorField:
        per_cue, heads = [], []
        for cue in self.cues.cues:
            f, ah = _cue_field(self.proj, cue.vector, self.hp)
            per_cue.append(f)
            heads.append(ah)
        return OdorField(np.max(np.stack(per_cue), axis=0), per_cue, heads)

    def single(self, cue: Cue) -> np.ndarray:
        key = id(cue)
        if key not in self._single:
            self._single[key] = _cue_field(self.proj, cue.vector, self.hp)[0]
        return self._single[key]
