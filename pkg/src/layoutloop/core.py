"""Layout design code: element classes, documents, the line-based DSL, validation.

The DSL is line-based and canonical by construction:

    CANVAS 360 800
    BUTTON 16 32 120 48
    TEXT 16 96 320 24 "Song title"

First significant line must be the ``CANVAS <w> <h>`` header; every other
significant line is one element, ``<CLASS> <x> <y> <w> <h> ["label"]``.
Lines starting with ``#`` are comments; blank lines are ignored. All
coordinates are integers in canvas units.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Iterator

DEFAULT_CANVAS_W = 360
DEFAULT_CANVAS_H = 800

_CLASS_NAME_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")
_INT_RE = re.compile(r"-?\d+\Z")
_HEX_RGB_RE = re.compile(r"[0-9a-fA-F]{6}\Z")
# optional trailing quoted label; backslash escapes \\ and \"
_LABEL_RE = re.compile(r'\s+"((?:[^"\\\n]|\\.)*)"\s*\Z')


class ParseError(ValueError):
    """DSL text violates the grammar (or, in strict mode, element invariants)."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class ElementClass:
    """One element type: a small integer id plus an uppercase identifier."""

    id: int
    name: str

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"class id must be nonnegative, got {self.id}")
        if not _CLASS_NAME_RE.match(self.name):
            raise ValueError(f"invalid class name {self.name!r}")


class ClassRegistry:
    """Immutable set of element classes, indexed by id and by name."""

    def __init__(self, classes: Iterable[ElementClass]) -> None:
        ordered = tuple(sorted(classes, key=lambda c: c.id))
        by_id: dict[int, ElementClass] = {}
        by_name: dict[str, ElementClass] = {}
        for cls in ordered:
            if cls.id in by_id:
                raise ValueError(f"duplicate class id {cls.id}")
            if cls.name in by_name:
                raise ValueError(f"duplicate class name {cls.name!r}")
            by_id[cls.id] = cls
            by_name[cls.name] = cls
        self._classes = ordered
        self._by_id = by_id
        self._by_name = by_name

    @property
    def classes(self) -> tuple[ElementClass, ...]:
        return self._classes

    def by_id(self, class_id: int) -> ElementClass:
        return self._by_id[class_id]

    def by_name(self, name: str) -> ElementClass:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self) -> Iterator[ElementClass]:
        return iter(self._classes)

    def __len__(self) -> int:
        return len(self._classes)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ClassRegistry) and other._classes == self._classes

    def __repr__(self) -> str:
        return f"ClassRegistry({len(self)} classes)"


def parse_class_config(text: str) -> tuple[ClassRegistry, dict[int, tuple[int, int, int]]]:
    """Parse a ``class_id<TAB>NAME<TAB>rgb_hex`` config into a registry and color map."""
    classes: list[ElementClass] = []
    colors: dict[int, tuple[int, int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected id<TAB>NAME<TAB>rgb_hex")
        id_text, name, hex_rgb = (p.strip() for p in parts)
        if not _INT_RE.match(id_text):
            raise ValueError(f"line {lineno}: non-integer class id {id_text!r}")
        if not _HEX_RGB_RE.match(hex_rgb):
            raise ValueError(f"line {lineno}: bad color {hex_rgb!r}")
        cls = ElementClass(int(id_text), name)
        classes.append(cls)
        colors[cls.id] = tuple(int(hex_rgb[i : i + 2], 16) for i in (0, 2, 4))  # type: ignore[assignment]
    return ClassRegistry(classes), colors


def load_class_config(path) -> tuple[ClassRegistry, dict[int, tuple[int, int, int]]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_class_config(fh.read())


def _default_config_text() -> str:
    return resources.files("layoutloop.data").joinpath("classes.tsv").read_text("utf-8")


_DEFAULT_REGISTRY: ClassRegistry | None = None
_DEFAULT_COLORS: dict[int, tuple[int, int, int]] | None = None


def default_registry() -> ClassRegistry:
    global _DEFAULT_REGISTRY, _DEFAULT_COLORS
    if _DEFAULT_REGISTRY is None:
        _DEFAULT_REGISTRY, _DEFAULT_COLORS = parse_class_config(_default_config_text())
    return _DEFAULT_REGISTRY


def default_colors() -> dict[int, tuple[int, int, int]]:
    default_registry()
    assert _DEFAULT_COLORS is not None
    return dict(_DEFAULT_COLORS)


@dataclass(frozen=True)
class Element:
    """A positioned, sized element. Geometry may be invalid for raw-parsed docs;
    strict parsing and :func:`validate_layout` enforce the bounds rules."""

    cls: ElementClass
    x: int
    y: int
    w: int
    h: int
    label: str | None = None

    def __post_init__(self) -> None:
        if self.label is not None and ("\n" in self.label or "\r" in self.label):
            raise ValueError("label must not contain newlines")


@dataclass(frozen=True)
class LayoutDoc:
    """A design-code document: canvas size plus z-ordered elements."""

    canvas_w: int
    canvas_h: int
    elements: tuple[Element, ...] = ()

    def __post_init__(self) -> None:
        if self.canvas_w < 1 or self.canvas_h < 1:
            raise ValueError("canvas dimensions must be positive")
        if not isinstance(self.elements, tuple):
            object.__setattr__(self, "elements", tuple(self.elements))


@dataclass(frozen=True)
class Violation:
    index: int
    rule: str
    message: str

    def to_dict(self) -> dict:
        return {"index": self.index, "rule": self.rule, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_layout(doc: LayoutDoc) -> ValidationReport:
    """Report every bounds/size violation; never mutates, never raises."""
    violations: list[Violation] = []
    for idx, el in enumerate(doc.elements):
        if el.w < 1:
            violations.append(Violation(idx, "nonpositive-width", f"nonpositive width {el.w}"))
        if el.h < 1:
            violations.append(Violation(idx, "nonpositive-height", f"nonpositive height {el.h}"))
        if el.x < 0:
            violations.append(Violation(idx, "negative-x", f"negative coordinate x={el.x}"))
        if el.y < 0:
            violations.append(Violation(idx, "negative-y", f"negative coordinate y={el.y}"))
        if el.w >= 1 and el.x >= 0 and el.x + el.w > doc.canvas_w:
            violations.append(
                Violation(idx, "overflow-x", f"x+w={el.x + el.w} overflows canvas width {doc.canvas_w}")
            )
        if el.h >= 1 and el.y >= 0 and el.y + el.h > doc.canvas_h:
            violations.append(
                Violation(idx, "overflow-y", f"y+h={el.y + el.h} overflows canvas height {doc.canvas_h}")
            )
    return ValidationReport(ok=not violations, violations=tuple(violations))


def _unescape_label(raw: str, lineno: int) -> str:
    out: list[str] = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\":
            if i + 1 >= len(raw) or raw[i + 1] not in ('"', "\\"):
                raise ParseError(lineno, f"bad escape in label: {raw!r}")
            out.append(raw[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _escape_label(label: str) -> str:
    return label.replace("\\", "\\\\").replace('"', '\\"')


def _parse_int(token: str, lineno: int, what: str) -> int:
    if not _INT_RE.match(token):
        raise ParseError(lineno, f"non-integer {what} {token!r}")
    return int(token)


def parse_layout_code(
    text: str,
    registry: ClassRegistry | None = None,
    *,
    strict: bool = True,
) -> LayoutDoc:
    """Parse DSL text into a :class:`LayoutDoc`.

    In strict mode (the default) element invariants are enforced and a
    violating line raises :class:`ParseError`. With ``strict=False`` the
    grammar is still enforced (header, known classes, integer fields,
    positive canvas) but element geometry is taken as-is, so the result
    can be inspected with :func:`validate_layout` or clipped.
    """
    registry = registry or default_registry()
    canvas: tuple[int, int] | None = None
    elements: list[Element] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if canvas is None:
            parts = line.split()
            if parts[0] != "CANVAS":
                raise ParseError(lineno, f"missing CANVAS header, got {parts[0]!r}")
            if len(parts) != 3:
                raise ParseError(lineno, f"CANVAS takes 2 fields, got {len(parts) - 1}")
            w = _parse_int(parts[1], lineno, "canvas width")
            h = _parse_int(parts[2], lineno, "canvas height")
            if w < 1 or h < 1:
                raise ParseError(lineno, f"canvas dimensions must be positive, got {w}x{h}")
            canvas = (w, h)
            continue

        label: str | None = None
        head = line
        if '"' in line:
            m = _LABEL_RE.search(line)
            if not m:
                raise ParseError(lineno, "malformed label quoting")
            label = _unescape_label(m.group(1), lineno)
            head = line[: m.start()]
        parts = head.split()
        if len(parts) != 5:
            raise ParseError(lineno, f"expected CLASS X Y W H, got {len(parts)} fields")
        name = parts[0]
        if name not in registry:
            raise ParseError(lineno, f"unknown class {name!r}")
        x = _parse_int(parts[1], lineno, "coordinate")
        y = _parse_int(parts[2], lineno, "coordinate")
        w = _parse_int(parts[3], lineno, "size")
        h = _parse_int(parts[4], lineno, "size")
        try:
            el = Element(registry.by_name(name), x, y, w, h, label)
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from exc
        if strict:
            if el.w < 1:
                raise ParseError(lineno, f"nonpositive width {el.w}")
            if el.h < 1:
                raise ParseError(lineno, f"nonpositive height {el.h}")
            if el.x < 0 or el.y < 0:
                raise ParseError(lineno, f"negative coordinates ({el.x}, {el.y})")
            if el.x + el.w > canvas[0] or el.y + el.h > canvas[1]:
                raise ParseError(lineno, "element overflows canvas")
        elements.append(el)

    if canvas is None:
        raise ParseError(max(1, text.count("\n") + 1), "missing CANVAS header")
    return LayoutDoc(canvas[0], canvas[1], tuple(elements))


def serialize_layout_code(doc: LayoutDoc) -> str:
    """Canonical DSL form: single spaces, stored element order, newline-terminated."""
    lines = [f"CANVAS {doc.canvas_w} {doc.canvas_h}"]
    for el in doc.elements:
        line = f"{el.cls.name} {el.x} {el.y} {el.w} {el.h}"
        if el.label is not None:
            line += f' "{_escape_label(el.label)}"'
        lines.append(line)
    return "\n".join(lines) + "\n"


def clip_layout(doc: LayoutDoc) -> LayoutDoc:
    """Clip raw elements to the canvas (intersection semantics): elements with
    no in-bounds area are dropped, the rest are cut at the canvas edges."""
    kept: list[Element] = []
    for el in doc.elements:
        x0 = max(el.x, 0)
        y0 = max(el.y, 0)
        x1 = min(el.x + el.w, doc.canvas_w)
        y1 = min(el.y + el.h, doc.canvas_h)
        if x1 - x0 < 1 or y1 - y0 < 1:
            continue
        kept.append(Element(el.cls, x0, y0, x1 - x0, y1 - y0, el.label))
    return LayoutDoc(doc.canvas_w, doc.canvas_h, tuple(kept))


def snap_coord(value: int, grid: int) -> int:
    """Snap to the nearest multiple of ``grid``, ties toward the lower multiple."""
    base = (value // grid) * grid
    return base if value - base <= grid - (value - base) else base + grid


def token_count(text: str) -> int:
    """Whitespace-token count; the build-wide proxy for backbone tokenization."""
    return len(text.split())


def code_hash(text: str, *extra: str, length: int = 16) -> str:
    """Stable content id for code strings (render cache keys, image ids)."""
    h = hashlib.sha256(text.encode("utf-8"))
    for part in extra:
        h.update(b"\x00")
        h.update(part.encode("utf-8"))
    return h.hexdigest()[:length]
