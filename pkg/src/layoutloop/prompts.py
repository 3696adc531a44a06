"""Multimodal prompt construction: interleaved text/code/image parts with token budgets.

The two templates below are pinned verbatim (including the source material's
"Your are" typo, kept behind a ``fix_typos`` flag) and realized as ordered
parts so backends can consume text, code, and image slots separately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .core import LayoutDoc, serialize_layout_code, token_count

IMAGE_TOKEN_ALLOWANCE = 256
DIRECT_BUDGET = 8192
MULTI_BUDGET = 16384

INTRO = "Your are improving the layout design of an app."
INTRO_FIXED = "You are improving the layout design of an app."
INITIAL_HEADER = "The initial layout is:"
DIRECT_IMAGE_INSTRUCTION = "Now, improve the layout based on the initial layout's screenshot:"
EDITS_HEADER = "You made some edits to the initial layout:"
REVISION_IMAGE_INSTRUCTION = (
    "Now, follow the edits and make further improvements. "
    "As a reference, here is the screenshot of the initial layout:"
)


class PartKind(str, Enum):
    TEXT = "text"
    CODE = "code"
    IMAGE_REF = "image_ref"


class PromptBudgetError(ValueError):
    """Prompt prefix exceeds the configured token budget."""

    def __init__(self, tokens: int, budget: int) -> None:
        super().__init__(f"prompt prefix is {tokens} tokens, budget is {budget}")
        self.tokens = tokens
        self.budget = budget


@dataclass(frozen=True)
class PromptPart:
    kind: PartKind
    payload: str

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "payload": self.payload}


@dataclass(frozen=True)
class DecodingParams:
    max_tokens: int = 400
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")

    def to_dict(self) -> dict:
        return {"max_tokens": self.max_tokens, "temperature": self.temperature}


def prefix_tokens(parts: Sequence[PromptPart]) -> int:
    """Budget charge: whitespace tokens of text/code parts plus a fixed
    allowance per image reference."""
    total = 0
    for part in parts:
        if part.kind == PartKind.IMAGE_REF:
            total += IMAGE_TOKEN_ALLOWANCE
        else:
            total += token_count(part.payload)
    return total


@dataclass(frozen=True)
class PromptBundle:
    parts: tuple[PromptPart, ...]
    decoding: DecodingParams = field(default_factory=DecodingParams)
    budget: int = DIRECT_BUDGET

    def __post_init__(self) -> None:
        if not isinstance(self.parts, tuple):
            object.__setattr__(self, "parts", tuple(self.parts))
        used = prefix_tokens(self.parts)
        if used > self.budget:
            raise PromptBudgetError(used, self.budget)

    def code_parts(self) -> list[str]:
        return [p.payload for p in self.parts if p.kind == PartKind.CODE]

    def image_parts(self) -> list[str]:
        return [p.payload for p in self.parts if p.kind == PartKind.IMAGE_REF]

    def to_wire(self) -> dict:
        return {
            "parts": [p.to_dict() for p in self.parts],
            "decoding": self.decoding.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_wire(), sort_keys=True, separators=(",", ":"))


def build_direct_prompt(
    prompt: str,
    state: LayoutDoc,
    image_id: str,
    decoding: DecodingParams | None = None,
    *,
    fix_typos: bool = False,
    budget: int = DIRECT_BUDGET,
) -> PromptBundle:
    """Direct/Hop template: intro, task text, initial code, screenshot reference."""
    code = serialize_layout_code(state)
    parts = (
        PromptPart(PartKind.TEXT, INTRO_FIXED if fix_typos else INTRO),
        PromptPart(PartKind.TEXT, prompt),
        PromptPart(PartKind.TEXT, INITIAL_HEADER),
        PromptPart(PartKind.CODE, code),
        PromptPart(PartKind.TEXT, DIRECT_IMAGE_INSTRUCTION),
        PromptPart(PartKind.IMAGE_REF, image_id),
    )
    return PromptBundle(parts, decoding or DecodingParams(), budget)


def build_revision_prompt(
    prompt: str,
    initial: LayoutDoc,
    edits: Sequence[LayoutDoc],
    image_id: str,
    decoding: DecodingParams | None = None,
    *,
    fix_typos: bool = False,
    budget: int | None = None,
) -> PromptBundle:
    """Single/Multi-revision template: initial code, one code part per edit
    (edit images are never included), then the initial screenshot reference.

    Budget defaults to the multi-revision window (16k) when more than one edit
    is supplied, the standard window (8k) otherwise; pass ``budget`` to pin it.
    """
    if not edits:
        raise ValueError("revision prompt needs at least one edit (duplicate S0 upstream)")
    if budget is None:
        budget = MULTI_BUDGET if len(edits) > 1 else DIRECT_BUDGET
    parts = [
        PromptPart(PartKind.TEXT, INTRO_FIXED if fix_typos else INTRO),
        PromptPart(PartKind.TEXT, prompt),
        PromptPart(PartKind.TEXT, INITIAL_HEADER),
        PromptPart(PartKind.CODE, serialize_layout_code(initial)),
        PromptPart(PartKind.TEXT, EDITS_HEADER),
    ]
    parts.extend(PromptPart(PartKind.CODE, serialize_layout_code(edit)) for edit in edits)
    parts.append(PromptPart(PartKind.TEXT, REVISION_IMAGE_INSTRUCTION))
    parts.append(PromptPart(PartKind.IMAGE_REF, image_id))
    return PromptBundle(tuple(parts), decoding or DecodingParams(), budget)


def render_prompt_text(bundle: PromptBundle) -> str:
    """Flat wire form for text-only backends: parts joined by single spaces,
    image references replaced by ``<image:ID>`` sentinels."""
    chunks = []
    for part in bundle.parts:
        if part.kind == PartKind.IMAGE_REF:
            chunks.append(f"<image:{part.payload}>")
        else:
            chunks.append(part.payload)
    return " ".join(chunks)
