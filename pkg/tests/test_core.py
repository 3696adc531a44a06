from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from layoutloop.core import (
    ClassRegistry,
    Element,
    ElementClass,
    LayoutDoc,
    ParseError,
    clip_layout,
    default_registry,
    parse_class_config,
    parse_layout_code,
    serialize_layout_code,
    snap_coord,
    token_count,
    validate_layout,
)

from conftest import make_doc, random_valid_doc


class TestRegistry:
    def test_default_has_twenty_distinct_classes(self, registry):
        assert len(registry) == 20
        assert registry.by_name("BUTTON").id == 0
        assert registry.by_id(19).name == "AVATAR"

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate class id"):
            ClassRegistry([ElementClass(1, "A"), ElementClass(1, "B")])

    def test_bad_name_rejected(self):
        with pytest.raises(ValueError, match="invalid class name"):
            ElementClass(0, "button")

    def test_config_round_trip(self):
        text = "0\tBUTTON\t1f77b4\n1\tTEXT\taec7e8\n# comment\n"
        registry, colors = parse_class_config(text)
        assert len(registry) == 2
        assert colors[0] == (0x1F, 0x77, 0xB4)

    def test_config_errors(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_class_config("0,BUTTON,1f77b4\n")
        with pytest.raises(ValueError, match="bad color"):
            parse_class_config("0\tBUTTON\tzzzzzz\n")


class TestParse:
    def test_single_element(self, registry):
        doc = parse_layout_code("CANVAS 360 800\nBUTTON 10 20 100 40")
        assert doc == make_doc(("BUTTON", 10, 20, 100, 40))

    def test_empty_layout(self):
        doc = parse_layout_code("CANVAS 360 800\n")
        assert doc == LayoutDoc(360, 800, ())

    def test_nonpositive_width_rejected_strict(self):
        with pytest.raises(ParseError, match="nonpositive width") as err:
            parse_layout_code("CANVAS 360 800\nBUTTON 10 20 -5 40")
        assert err.value.line == 2

    def test_raw_mode_keeps_invalid_geometry(self):
        doc = parse_layout_code("CANVAS 360 800\nBUTTON -4 20 100 40", strict=False)
        assert doc.elements[0].x == -4
        report = validate_layout(doc)
        assert not report.ok

    def test_unknown_class(self):
        with pytest.raises(ParseError, match="unknown class 'BLOB'") as err:
            parse_layout_code("CANVAS 360 800\nBLOB 1 2 3 4")
        assert err.value.line == 2

    def test_non_integer_coordinate(self):
        with pytest.raises(ParseError, match="non-integer"):
            parse_layout_code("CANVAS 360 800\nBUTTON a 2 3 4")

    def test_arity_mismatch(self):
        with pytest.raises(ParseError, match="expected CLASS X Y W H"):
            parse_layout_code("CANVAS 360 800\nBUTTON 1 2 3")

    def test_missing_canvas_header(self):
        with pytest.raises(ParseError, match="missing CANVAS header"):
            parse_layout_code("BUTTON 1 2 3 4")
        with pytest.raises(ParseError, match="missing CANVAS header"):
            parse_layout_code("")

    def test_comments_and_blank_lines(self):
        doc = parse_layout_code("# header\n\nCANVAS 360 800\n# elements\nBUTTON 1 2 3 4\n\n")
        assert len(doc.elements) == 1

    def test_labels_round_trip_escapes(self):
        doc = make_doc(("TEXT", 0, 0, 10, 10, 'say "hi" \\ back'))
        assert parse_layout_code(serialize_layout_code(doc)) == doc

    def test_overflow_rejected_strict(self):
        with pytest.raises(ParseError, match="overflows"):
            parse_layout_code("CANVAS 360 800\nBUTTON 300 0 100 40")


class TestSerialize:
    def test_empty_doc(self):
        assert serialize_layout_code(LayoutDoc(360, 800, ())) == "CANVAS 360 800\n"

    def test_element_order_significant(self):
        a = make_doc(("BUTTON", 0, 0, 10, 10), ("TEXT", 0, 0, 20, 20))
        b = make_doc(("TEXT", 0, 0, 20, 20), ("BUTTON", 0, 0, 10, 10))
        assert serialize_layout_code(a) != serialize_layout_code(b)

    def test_canonical_form(self):
        doc = parse_layout_code("CANVAS 360 800\n\n  BUTTON   10  20 100 40  \n# c\n")
        assert serialize_layout_code(doc) == "CANVAS 360 800\nBUTTON 10 20 100 40\n"


class TestValidate:
    def test_in_bounds_ok(self):
        assert validate_layout(make_doc(("BUTTON", 0, 0, 360, 800))).ok

    def test_negative_coordinate(self):
        report = validate_layout(make_doc(("BUTTON", -4, 0, 100, 40)))
        assert not report.ok
        assert [v.rule for v in report.violations] == ["negative-x"]

    def test_overflow_by_one(self):
        report = validate_layout(make_doc(("BUTTON", 261, 0, 100, 40)))
        assert not report.ok
        assert [v.rule for v in report.violations] == ["overflow-x"]

    def test_ok_iff_no_violations(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            doc = random_valid_doc(rng)
            report = validate_layout(doc)
            assert report.ok == (not report.violations)
            assert report.ok


class TestTokenCount:
    def test_empty(self):
        assert token_count("") == 0

    def test_canvas_header(self):
        assert token_count("CANVAS 360 800") == 3

    def test_one_element_doc(self):
        # Oracle: hand-count of "CANVAS 360 800\nBUTTON 10 20 100 40\n"
        code = serialize_layout_code(make_doc(("BUTTON", 10, 20, 100, 40)))
        assert token_count(code) == 8


class TestClip:
    def test_clip_drops_fully_outside(self):
        doc = LayoutDoc(100, 100, (Element(default_registry().by_name("BUTTON"), 200, 0, 10, 10),))
        assert clip_layout(doc).elements == ()

    def test_clip_intersects_partial(self):
        doc = LayoutDoc(100, 100, (Element(default_registry().by_name("BUTTON"), -10, 90, 30, 30),))
        el = clip_layout(doc).elements[0]
        assert (el.x, el.y, el.w, el.h) == (0, 90, 20, 10)

    def test_valid_doc_unchanged(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            doc = random_valid_doc(rng)
            assert clip_layout(doc) == doc


def test_snap_coord_ties_toward_lower():
    assert snap_coord(10, 8) == 8
    assert snap_coord(12, 8) == 8
    assert snap_coord(13, 8) == 16
    assert snap_coord(-3, 8) == 0
    assert snap_coord(16, 8) == 16


# ---- properties ------------------------------------------------------------

_LABEL_ALPHABET = st.characters(
    codec="utf-8", exclude_characters="\n\r", exclude_categories=("Cs",)
)


@st.composite
def _docs(draw):
    registry = default_registry()
    w_cap = draw(st.integers(1, 400))
    h_cap = draw(st.integers(1, 900))
    count = draw(st.integers(0, 8))
    elements = []
    for _ in range(count):
        cls = registry.classes[draw(st.integers(0, len(registry) - 1))]
        w = draw(st.integers(1, w_cap))
        h = draw(st.integers(1, h_cap))
        x = draw(st.integers(0, w_cap - w))
        y = draw(st.integers(0, h_cap - h))
        label = draw(st.none() | st.text(_LABEL_ALPHABET, max_size=12))
        elements.append(Element(cls, x, y, w, h, label))
    return LayoutDoc(w_cap, h_cap, tuple(elements))


@given(_docs())
@settings(max_examples=300, deadline=None)
def test_round_trip_identity(doc):
    assert parse_layout_code(serialize_layout_code(doc)) == doc


@given(_docs())
@settings(max_examples=150, deadline=None)
def test_canonical_idempotence(doc):
    text = serialize_layout_code(doc)
    once = serialize_layout_code(parse_layout_code(text))
    twice = serialize_layout_code(parse_layout_code(once))
    assert once == twice == text


@given(_docs(), _docs())
@settings(max_examples=150, deadline=None)
def test_equality_matches_canonical_text(a, b):
    assert (a == b) == (serialize_layout_code(a) == serialize_layout_code(b))


@given(st.text(max_size=200) | st.binary(max_size=200).map(lambda b: b.decode("utf-8", "replace")))
@settings(max_examples=400, deadline=None)
def test_parse_then_validate_never_panics(text):
    try:
        doc = parse_layout_code(text, strict=False)
    except ParseError:
        return
    validate_layout(doc)
