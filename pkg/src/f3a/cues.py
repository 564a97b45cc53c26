"""Prompt -> CueSet: fixed templates, target-phrase heuristic, option cues."""
from __future__ import annotations

import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Optional, Sequence

import numpy as np

from .embedding import EmbeddingProvider
from .model import Cue, CueSet, HyperParams, InvalidArgument

TASK_HINTS = ("ocr_detail", "counting", "spatial_relation", "verification")

GLOBAL_TEMPLATE = "describe the image region relevant to: {q}"
TARGET_TEMPLATE = "find {t} in the image"
OPTION_TEMPLATE = "the answer is {letter}: {text}"
TASK_TEMPLATES = MappingProxyType({
    "ocr_detail": "read the small text and fine details in the image",
    "counting": "count every instance of the objects in the image",
    "spatial_relation": "locate the objects and their relative positions in the image",
    "verification": "check whether the described content is present in the image",
})

STOP_WORDS = frozenset("""
what which who whom whose where when why how
a an the
is are was were be been being am do does did has have had
can could will would shall should may might must
in on at of to from by with for about into onto over under above below
behind between near beside inside outside through across around up down
it its this that these those there they them he she his her
""".split())

_PUNCT = re.compile(r"[^\w\s]")


@dataclass(frozen=True)
class PromptSpec:
    question: str
    options: Optional[tuple[tuple[str, str], ...]] = None
    task_hint: Optional[str] = None
    target_phrase: Optional[str] = None

    def __post_init__(self):
        if self.options is not None:
            opts = tuple((str(letter), str(text)) for letter, text in self.options)
            if len(opts) < 2:
                raise InvalidArgument("multiple-choice prompts need at least two options")
            if len({letter for letter, _ in opts}) != len(opts):
                raise InvalidArgument("option letters must be distinct")
            object.__setattr__(self, "options", opts)
        if self.task_hint is not None and self.task_hint not in TASK_HINTS:
            raise InvalidArgument(f"unknown task hint {self.task_hint!r}")


def extract_target_phrase(question: str) -> Optional[str]:
    words = _PUNCT.sub("", question.lower()).split()
    kept = [w for w in words if w not in STOP_WORDS]
    return " ".join(kept) if kept else None


def _constant_cue(kind: str, dim_t: int, label: str) -> Cue:
    return Cue(kind, np.full(dim_t, 1.0 / np.sqrt(dim_t)), label)


def build_cues(prompt: PromptSpec, provider: EmbeddingProvider, hp: HyperParams = HyperParams()) -> CueSet:
    q = prompt.question
    if not q or not q.strip():
        raise InvalidArgument("question must be non-empty")
    E = provider.embed

    g = 0.5 * (E(q) + E(GLOBAL_TEMPLATE.format(q=q)))
    cues = [Cue("global", g / np.linalg.norm(g), "global")]
    if hp.use_multi_cue:
        target = prompt.target_phrase or extract_target_phrase(q)
        if target:
            cues.append(Cue("target", E(TARGET_TEMPLATE.format(t=target)), "target"))
        if prompt.task_hint is not None:
            cues.append(Cue("task", E(TASK_TEMPLATES[prompt.task_hint]), prompt.task_hint))

    options = []
    for letter, text in prompt.options or ():
        options.append(Cue("option", E(OPTION_TEMPLATE.format(letter=letter, text=text)), letter))

    if not hp.use_odor_cue:
        cues = [_constant_cue("global", provider.dim_t, "constant")]
        options = [_constant_cue("option", provider.dim_t, c.label) for c in options]

    kind = "multiple_choice" if options else "open_ended"
    return CueSet(tuple(cues), tuple(options), kind)


def apply_cue_ablations(cues: CueSet, hp: HyperParams) -> CueSet:
    """Apply the cue ablation flags to an already-built cue set."""
    if hp.use_odor_cue and hp.use_multi_cue:
        return cues
    if not hp.use_odor_cue:
        dim_t = cues.dim_t
        return CueSet(
            (_constant_cue("global", dim_t, "constant"),),
            tuple(_constant_cue("option", dim_t, c.label) for c in cues.option_cues),
            cues.prompt_kind,
        )
    return CueSet((cues.global_cue,), cues.option_cues, cues.prompt_kind)


def cue_set(vectors: Sequence[np.ndarray], options: Sequence[np.ndarray] = ()) -> CueSet:
    """Cue set from raw vectors: the first is the global cue, the rest are targets."""
    cs = [Cue("global" if i == 0 else "target", v / np.linalg.norm(v), f"c{i}") for i, v in enumerate(vectors)]
    opts = [Cue("option", v / np.linalg.norm(v), chr(ord("A") + i)) for i, v in enumerate(options)]
    return CueSet(tuple(cs), tuple(opts), "multiple_choice" if opts else "open_ended")
