from __future__ import annotations

import json

import pytest

from layoutloop.core import LayoutDoc, serialize_layout_code
from layoutloop.prompts import (
    DIRECT_BUDGET,
    IMAGE_TOKEN_ALLOWANCE,
    MULTI_BUDGET,
    DecodingParams,
    PartKind,
    PromptBudgetError,
    PromptBundle,
    PromptPart,
    build_direct_prompt,
    build_revision_prompt,
    prefix_tokens,
    render_prompt_text,
)

from conftest import make_doc


class TestDirectTemplate:
    def test_golden_parts(self):
        bundle = build_direct_prompt("a music player", LayoutDoc(360, 800, ()), "img0")
        assert [(p.kind.value, p.payload) for p in bundle.parts] == [
            ("text", "Your are improving the layout design of an app."),
            ("text", "a music player"),
            ("text", "The initial layout is:"),
            ("code", "CANVAS 360 800\n"),
            ("text", "Now, improve the layout based on the initial layout's screenshot:"),
            ("image_ref", "img0"),
        ]

    def test_golden_rendered_text(self):
        bundle = build_direct_prompt("a music player", LayoutDoc(360, 800, ()), "img0")
        assert render_prompt_text(bundle) == (
            "Your are improving the layout design of an app. a music player "
            "The initial layout is: CANVAS 360 800\n "
            "Now, improve the layout based on the initial layout's screenshot: <image:img0>"
        )

    def test_decoding_defaults(self):
        bundle = build_direct_prompt("p", LayoutDoc(360, 800, ()), "i")
        assert bundle.decoding == DecodingParams(max_tokens=400, temperature=0.0)
        assert bundle.budget == DIRECT_BUDGET

    def test_typo_fix_flag(self):
        bundle = build_direct_prompt("p", LayoutDoc(360, 800, ()), "i", fix_typos=True)
        assert bundle.parts[0].payload == "You are improving the layout design of an app."

    def test_deterministic(self):
        a = build_direct_prompt("p", make_doc(("BUTTON", 0, 0, 8, 8)), "i")
        b = build_direct_prompt("p", make_doc(("BUTTON", 0, 0, 8, 8)), "i")
        assert a == b

    def test_budget_exceeded(self):
        big = make_doc(*[("BUTTON", 0, 0, 8, 8)] * 1700)  # 5 tokens per line
        with pytest.raises(PromptBudgetError):
            build_direct_prompt("p", big, "i")


class TestRevisionTemplate:
    def test_golden_parts_single_edit(self):
        s0 = make_doc(("BUTTON", 0, 0, 8, 8))
        edit = make_doc(("BUTTON", 8, 0, 8, 8))
        bundle = build_revision_prompt("a chat app", s0, [edit], "img0")
        kinds = [(p.kind.value, p.payload) for p in bundle.parts]
        assert kinds == [
            ("text", "Your are improving the layout design of an app."),
            ("text", "a chat app"),
            ("text", "The initial layout is:"),
            ("code", serialize_layout_code(s0)),
            ("text", "You made some edits to the initial layout:"),
            ("code", serialize_layout_code(edit)),
            (
                "text",
                "Now, follow the edits and make further improvements. "
                "As a reference, here is the screenshot of the initial layout:",
            ),
            ("image_ref", "img0"),
        ]
        assert bundle.budget == DIRECT_BUDGET  # single edit: standard window

    def test_duplicated_s0_slot(self):
        s0 = make_doc(("BUTTON", 0, 0, 8, 8))
        bundle = build_revision_prompt("p", s0, [s0], "img0")
        codes = bundle.code_parts()
        assert codes == [serialize_layout_code(s0)] * 2

    def test_twenty_edits_in_order(self):
        s0 = make_doc(("BUTTON", 0, 0, 8, 8))
        edits = [make_doc(("BUTTON", 8 * k, 0, 8, 8)) for k in range(1, 21)]
        bundle = build_revision_prompt("p", s0, edits, "img0")
        assert bundle.code_parts()[1:] == [serialize_layout_code(e) for e in edits]
        assert bundle.budget == MULTI_BUDGET
        assert len(bundle.image_parts()) == 1  # only the initial screenshot

    def test_empty_edits_rejected(self):
        with pytest.raises(ValueError, match="at least one edit"):
            build_revision_prompt("p", make_doc(), [], "img0")


class TestBundleMechanics:
    def test_budget_counts_image_allowance(self):
        parts = (PromptPart(PartKind.TEXT, "a b"), PromptPart(PartKind.IMAGE_REF, "x"))
        assert prefix_tokens(parts) == 2 + IMAGE_TOKEN_ALLOWANCE

    def test_budget_monotone_in_edits(self):
        s0 = make_doc(("BUTTON", 0, 0, 8, 8))
        edits = [make_doc(("BUTTON", 8 * k, 0, 8, 8)) for k in range(1, 6)]
        previous = 0
        for k in range(1, 6):
            bundle = build_revision_prompt("p", s0, edits[:k], "i", budget=MULTI_BUDGET)
            tokens = prefix_tokens(bundle.parts)
            assert tokens > previous
            previous = tokens

    def test_render_text_trivials(self):
        bundle = PromptBundle((PromptPart(PartKind.TEXT, "a"), PromptPart(PartKind.TEXT, "b")))
        assert render_prompt_text(bundle) == "a b"
        with_image = PromptBundle((PromptPart(PartKind.IMAGE_REF, "z"),))
        assert render_prompt_text(with_image).count("<image:") == 1
        assert render_prompt_text(with_image) == render_prompt_text(with_image)

    def test_wire_json(self):
        bundle = build_direct_prompt("p", LayoutDoc(360, 800, ()), "i")
        wire = json.loads(bundle.to_json())
        assert set(wire) == {"parts", "decoding"}
        assert wire["decoding"] == {"max_tokens": 400, "temperature": 0.0}
        assert wire["parts"][0] == {"kind": "text", "payload": "Your are improving the layout design of an app."}

    def test_decoding_validation(self):
        with pytest.raises(ValueError):
            DecodingParams(max_tokens=0)
        with pytest.raises(ValueError):
            DecodingParams(temperature=-0.1)
