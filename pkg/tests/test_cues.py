import numpy as np
import pytest

from f3a.cues import (
    GLOBAL_TEMPLATE,
    OPTION_TEMPLATE,
    STOP_WORDS,
    TARGET_TEMPLATE,
    TASK_HINTS,
    TASK_TEMPLATES,
    PromptSpec,
    apply_cue_ablations,
    build_cues,
    extract_target_phrase,
)
from f3a.embedding import EmbeddingProvider
from f3a.model import HyperParams, InvalidArgument, TokenGrid
from f3a.sensing import build_bank, odor_field

P = EmbeddingProvider()


def test_target_phrase_examples():
    assert extract_target_phrase("What color cape is the woman wearing?") == "color cape woman wearing"
    assert extract_target_phrase("Is it?") is None
    assert extract_target_phrase("") is None


def test_stop_list_covers_required_classes():
    for w in ("what", "which", "the", "a", "is", "are", "in", "on", "of"):
        assert w in STOP_WORDS


def test_task_templates_fixed():
    assert set(TASK_TEMPLATES) == set(TASK_HINTS)
    with pytest.raises(TypeError):
        TASK_TEMPLATES["counting"] = "x"


def test_open_question_cues():
    cs = build_cues(PromptSpec("What color cape is the woman wearing?"), P)
    assert [c.kind for c in cs.cues] == ["global", "target"]
    assert cs.prompt_kind == "open_ended"
    assert np.array_equal(cs.cues[1].vector, P.embed(TARGET_TEMPLATE.format(t="color cape woman wearing")))


def test_global_cue_formula():
    q = "How many birds are there?"
    cs = build_cues(PromptSpec(q), P)
    g = 0.5 * (P.embed(q) + P.embed(GLOBAL_TEMPLATE.format(q=q)))
    assert np.allclose(cs.global_cue.vector, g / np.linalg.norm(g), atol=1e-12)
    assert abs(np.linalg.norm(cs.global_cue.vector) - 1) < 1e-9


def test_task_hint_and_override():
    cs = build_cues(PromptSpec("Is it?", task_hint="counting", target_phrase="red kite"), P)
    assert [c.kind for c in cs.cues] == ["global", "target", "task"]
    assert np.array_equal(cs.cues[1].vector, P.embed(TARGET_TEMPLATE.format(t="red kite")))
    assert np.array_equal(cs.cues[2].vector, P.embed(TASK_TEMPLATES["counting"]))


def test_multiple_choice_options():
    opts = (("A", "red"), ("B", "blue"), ("C", "green"), ("D", "white"))
    cs = build_cues(PromptSpec("What color is the car?", options=opts), P)
    assert len(cs.option_cues) == 4
    assert cs.prompt_kind == "multiple_choice"
    assert np.array_equal(cs.option_cues[2].vector, P.embed(OPTION_TEMPLATE.format(letter="C", text="green")))
    assert [c.label for c in cs.option_cues] == ["A", "B", "C", "D"]


def test_multi_cue_ablation_keeps_global_only():
    hp = HyperParams(use_multi_cue=False)
    cs = build_cues(PromptSpec("What color cape?", task_hint="ocr_detail"), P, hp)
    assert [c.kind for c in cs.cues] == ["global"]


def test_target_removal_does_not_change_global():
    a = build_cues(PromptSpec("Where is the dog?", target_phrase="dog"), P)
    b = build_cues(PromptSpec("Where is the dog?", target_phrase=None), P)
    c = build_cues(PromptSpec("Where is the dog?"), P, HyperParams(use_multi_cue=False))
    assert np.array_equal(a.global_cue.vector, b.global_cue.vector)
    assert np.array_equal(a.global_cue.vector, c.global_cue.vector)


def test_prompt_validation():
    with pytest.raises(InvalidArgument):
        PromptSpec("q", options=(("A", "x"),))
    with pytest.raises(InvalidArgument):
        PromptSpec("q", options=(("A", "x"), ("A", "y")))
    with pytest.raises(InvalidArgument):
        PromptSpec("q", task_hint="poetry")
    with pytest.raises(InvalidArgument):
        build_cues(PromptSpec("  "), P)


def test_odor_ablation_field_is_prompt_agnostic():
    hp = HyperParams(use_odor_cue=False)
    grid = TokenGrid(5, 5, np.random.default_rng(0).standard_normal((25, 64)))
    bank = build_bank(hp, 64, 64)
    f1 = odor_field(bank, grid, build_cues(PromptSpec("Where is the cat?"), P, hp), hp).a
    f2 = odor_field(bank, grid, build_cues(PromptSpec("Read the sign text", task_hint="ocr_detail"), P, hp), hp).a
    assert np.array_equal(f1, f2)


def test_apply_ablations_idempotent():
    cs = build_cues(PromptSpec("What is on the table?", options=(("A", "x"), ("B", "y"))), P)
    for hp in (HyperParams(use_odor_cue=False), HyperParams(use_multi_cue=False), HyperParams()):
        once = apply_cue_ablations(cs, hp)
        twice = apply_cue_ablations(once, hp)
        assert [c.kind for c in once.cues] == [c.kind for c in twice.cues]
        for x, y in zip(once.cues + once.option_cues, twice.cues + twice.option_cues):
            assert np.array_equal(x.vector, y.vector)
