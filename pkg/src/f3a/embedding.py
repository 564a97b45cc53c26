"""Text embeddings for cue construction.

Two providers: ``desk_hash`` derives each word vector from a SplitMix64 stream
seeded by the word's FNV-1a hash, so it is deterministic everywhere but
carries no meaning; ``file_backed`` looks templates up in an F3T container.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import InvalidArgument, Rng

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
DEFAULT_DIM_T = 64


class MissingEmbedding(KeyError):
    def __str__(self):
        return f"no embedding stored for key {self.args[0]!r}"


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def word_vector(word: str, dim_t: int) -> np.ndarray:
    rng = Rng(fnv1a64(word.encode("utf-8")))
    v = rng.gaussian_array(dim_t)
    return v / np.linalg.norm(v)


@dataclass
class EmbeddingProvider:
    mode: str = "desk_hash"
    dim_t: int = DEFAULT_DIM_T
    source_path: Path | None = None
    _table: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in ("desk_hash", "file_backed"):
            raise InvalidArgument(f"unknown embedding mode {self.mode!r}")
        if self.dim_t < 1:
            raise InvalidArgument("dim_t must be positive")

    @classmethod
    def from_file(cls, path) -> EmbeddingProvider:
        from .io import read_f3t

        table = {}
        dim = None
        for key, arr in read_f3t(path).items():
            vec = np.asarray(arr, dtype=np.float64).reshape(-1)
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise InvalidArgument(f"embedding {key!r} has dimension {vec.shape[0]}, expected {dim}")
            nrm = np.linalg.norm(vec)
            if nrm == 0:
                raise InvalidArgument(f"embedding {key!r} is the zero vector")
            table[key] = vec / nrm
        if dim is None:
            raise InvalidArgument(f"embedding file {path} holds no vectors")
        return cls(mode="file_backed", dim_t=dim, source_path=Path(path), _table=table)

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise InvalidArgument("cannot embed empty text")
        if self.mode == "file_backed":
            try:
                return self._table[text].copy()
            except KeyError:
                raise MissingEmbedding(text) from None
        # sorted so the pooled sum is order-independent bit for bit
        words = sorted(text.lower().split())
        pooled = np.mean([word_vector(w, self.dim_t) for w in words], axis=0)
        return pooled / np.linalg.norm(pooled)


def embed(provider: EmbeddingProvider, text: str) -> np.ndarray:
    return provider.embed(text)
