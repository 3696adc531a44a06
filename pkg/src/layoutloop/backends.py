"""Pluggable reviser backends: prompt bundle in, design code out.

Ships a deterministic heuristic reviser (grid snapping, size unification,
left-alignment, dedup, clipping), an echo baseline that reproduces the
self-revision duplication failure mode exactly, and an HTTP client for an
external generative service.
"""

from __future__ import annotations

import base64
import re
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np
import requests

from .core import (
    ClassRegistry,
    Element,
    LayoutDoc,
    ParseError,
    Violation,
    clip_layout,
    default_registry,
    parse_layout_code,
    serialize_layout_code,
    snap_coord,
    token_count,
)
from .prompts import PromptBundle

_TOKEN_RE = re.compile(r"\S+")


class BackendError(RuntimeError):
    """Backend could not produce a generation (network, config, refusal)."""


@dataclass(frozen=True)
class BackendCapabilities:
    supports_temperature: bool = False
    supports_images: bool = False


@dataclass(frozen=True)
class GenerationResult:
    """One generation: raw code text plus its lenient parse.

    ``doc`` is present whenever the text parses structurally; bounds/size
    problems are recorded in ``violations`` instead of discarding the output.
    Grammar-level failures leave ``doc`` as None with ``parse_error`` set.
    """

    code_text: str
    doc: LayoutDoc | None
    parse_error: str | None
    violations: tuple[Violation, ...]
    latency_s: float
    backend: str

    @property
    def parsed_ok(self) -> bool:
        return self.doc is not None

    def to_dict(self) -> dict:
        return {
            "code_text": self.code_text,
            "parse_error": self.parse_error,
            "violations": [v.to_dict() for v in self.violations],
            "latency_s": self.latency_s,
            "backend": self.backend,
        }


def truncate_tokens(text: str, max_tokens: int) -> str:
    """Cut after the ``max_tokens``-th whitespace token, preserving the
    original separators (line structure survives where it can)."""
    count = 0
    for match in _TOKEN_RE.finditer(text):
        count += 1
        if count == max_tokens:
            return text[: match.end()]
    return text


def _finish(name: str, code_text: str, bundle: PromptBundle, registry: ClassRegistry, started: float) -> GenerationResult:
    if token_count(code_text) > bundle.decoding.max_tokens:
        code_text = truncate_tokens(code_text, bundle.decoding.max_tokens)
    doc: LayoutDoc | None = None
    parse_error: str | None = None
    violations: tuple[Violation, ...] = ()
    try:
        doc = parse_layout_code(code_text, registry, strict=False)
    except ParseError as exc:
        parse_error = str(exc)
    else:
        from .core import validate_layout

        violations = validate_layout(doc).violations
    return GenerationResult(
        code_text=code_text,
        doc=doc,
        parse_error=parse_error,
        violations=violations,
        latency_s=time.perf_counter() - started,
        backend=name,
    )


class ReviserBackend(ABC):
    """A reviser f: prompt bundle -> design code. Implementations must be safe
    for concurrent revise() calls and must respect decoding.max_tokens."""

    name: str
    capabilities: BackendCapabilities

    @abstractmethod
    def revise(self, bundle: PromptBundle) -> GenerationResult: ...


def _working_code(bundle: PromptBundle) -> str:
    codes = bundle.code_parts()
    if not codes:
        raise BackendError("bundle contains no code part")
    return codes[-1]


class EchoReviser(ReviserBackend):
    """Returns the last code part verbatim: the echo-chamber failure mode as a backend."""

    def __init__(self, registry: ClassRegistry | None = None) -> None:
        self.name = "echo"
        self.capabilities = BackendCapabilities(supports_temperature=False, supports_images=False)
        self._registry = registry or default_registry()

    def revise(self, bundle: PromptBundle) -> GenerationResult:
        started = time.perf_counter()
        return _finish(self.name, _working_code(bundle), bundle, self._registry, started)


class HeuristicReviser(ReviserBackend):
    """Deterministic desk-scale reviser: tidy the working layout.

    Passes, in order: snap x/y to the grid (ties toward the lower multiple),
    unify same-class sizes within tolerance to the group minimum, left-align
    x positions within tolerance, drop exact duplicates, clip to the canvas.
    The passes are iterated to a fixed point so the whole revise() is
    idempotent at temperature 0. Temperature > 0 jitters a seeded 10% of
    elements by up to one grid unit before the first pass.
    """

    MAX_PASSES = 64

    def __init__(
        self,
        registry: ClassRegistry | None = None,
        grid: int = 8,
        tolerance: int = 8,
        jitter_fraction: float = 0.1,
        seed: int = 0,
    ) -> None:
        self.name = "heuristic"
        self.capabilities = BackendCapabilities(supports_temperature=True, supports_images=False)
        self._registry = registry or default_registry()
        self.grid = grid
        self.tolerance = tolerance
        self.jitter_fraction = jitter_fraction
        self.seed = seed

    # ---- passes ----------------------------------------------------------

    def _snap(self, els: list[Element]) -> list[Element]:
        return [
            Element(e.cls, snap_coord(e.x, self.grid), snap_coord(e.y, self.grid), e.w, e.h, e.label)
            for e in els
        ]

    @staticmethod
    def _cluster_min(values: list[int], tolerance: int) -> dict[int, int]:
        """Map each value to the minimum of its chained cluster (gap <= tolerance)."""
        mapping: dict[int, int] = {}
        current_min: int | None = None
        prev: int | None = None
        for v in sorted(set(values)):
            if prev is None or v - prev > tolerance:
                current_min = v
            mapping[v] = current_min  # type: ignore[assignment]
            prev = v
        return mapping

    def _unify_sizes(self, els: list[Element]) -> list[Element]:
        out = list(els)
        class_ids = {e.cls.id for e in els}
        for cid in class_ids:
            idxs = [k for k, e in enumerate(out) if e.cls.id == cid]
            for attr in ("w", "h"):
                mapping = self._cluster_min([getattr(out[k], attr) for k in idxs], self.tolerance)
                for k in idxs:
                    e = out[k]
                    value = mapping[getattr(e, attr)]
                    if attr == "w":
                        out[k] = Element(e.cls, e.x, e.y, value, e.h, e.label)
                    else:
                        out[k] = Element(e.cls, e.x, e.y, e.w, value, e.label)
        return out

    def _left_align(self, els: list[Element]) -> list[Element]:
        mapping = self._cluster_min([e.x for e in els], self.tolerance)
        return [Element(e.cls, mapping[e.x], e.y, e.w, e.h, e.label) for e in els]

    @staticmethod
    def _dedupe(els: list[Element]) -> list[Element]:
        seen: set[tuple] = set()
        out = []
        for e in els:
            key = (e.cls.id, e.x, e.y, e.w, e.h, e.label)
            if key in seen:
                continue
            seen.add(key)
            out.append(e)
        return out

    def _clip(self, els: list[Element], w_cap: int, h_cap: int) -> list[Element]:
        # Grid-respecting clip: floor displaced origins back onto the grid so the
        # pinned pass order converges (a plain clamp can oscillate with snapping).
        out = []
        for e in els:
            w = max(1, min(e.w, w_cap))
            h = max(1, min(e.h, h_cap))
            x = max(0, min(e.x, w_cap - w))
            y = max(0, min(e.y, h_cap - h))
            if x % self.grid and x != e.x:
                x = (x // self.grid) * self.grid
            if y % self.grid and y != e.y:
                y = (y // self.grid) * self.grid
            out.append(Element(e.cls, x, y, w, h, e.label))
        return out

    # ----------------------------------------------------------------------

    def _revise_doc(self, doc: LayoutDoc, temperature: float) -> LayoutDoc:
        els = list(doc.elements)
        if temperature > 0 and els:
            rng = np.random.default_rng(
                np.random.SeedSequence([self.seed, hash_code(serialize_layout_code(doc))])
            )
            count = max(1, int(round(self.jitter_fraction * len(els))))
            picks = rng.choice(len(els), size=min(count, len(els)), replace=False)
            for k in picks:
                e = els[k]
                dx = int(rng.integers(-self.grid, self.grid + 1))
                dy = int(rng.integers(-self.grid, self.grid + 1))
                els[k] = Element(e.cls, e.x + dx, e.y + dy, e.w, e.h, e.label)

        for _ in range(self.MAX_PASSES):
            before = els
            els = self._snap(els)
            els = self._unify_sizes(els)
            els = self._left_align(els)
            els = self._dedupe(els)
            els = self._clip(els, doc.canvas_w, doc.canvas_h)
            if els == before:
                break
        else:
            raise RuntimeError("heuristic passes failed to converge")
        return LayoutDoc(doc.canvas_w, doc.canvas_h, tuple(els))

    def _fit_budget(self, doc: LayoutDoc, max_tokens: int) -> LayoutDoc:
        # Drop trailing elements rather than emitting a truncated, unparseable line.
        els = list(doc.elements)
        while els and token_count(serialize_layout_code(LayoutDoc(doc.canvas_w, doc.canvas_h, tuple(els)))) > max_tokens:
            els.pop()
        return LayoutDoc(doc.canvas_w, doc.canvas_h, tuple(els))

    def revise(self, bundle: PromptBundle) -> GenerationResult:
        started = time.perf_counter()
        code = _working_code(bundle)
        try:
            doc = parse_layout_code(code, self._registry, strict=False)
        except ParseError as exc:
            raise BackendError(f"working layout does not parse: {exc}") from exc
        revised = self._revise_doc(clip_layout(doc), bundle.decoding.temperature)
        revised = self._fit_budget(revised, bundle.decoding.max_tokens)
        return _finish(self.name, serialize_layout_code(revised), bundle, self._registry, started)


def hash_code(text: str) -> int:
    """Stable non-negative integer hash for seeding (Python's hash() is salted)."""
    value = 0
    for b in text.encode("utf-8"):
        value = (value * 131 + b) % (2**31 - 1)
    return value


@dataclass(frozen=True)
class RemoteConfig:
    url: str
    auth_token: str | None = None
    timeout_s: float = 30.0
    max_attempts: int = 3
    backoff_base_s: float = 0.5
    concurrency: int = 4

    @staticmethod
    def from_env(env: dict | None = None) -> "RemoteConfig":
        import os

        env = env if env is not None else dict(os.environ)
        url = env.get("LAYOUTLOOP_REMOTE_URL", "").strip()
        if not url:
            raise BackendError("LAYOUTLOOP_REMOTE_URL is not set")
        timeout_text = env.get("LAYOUTLOOP_REMOTE_TIMEOUT", "30")
        try:
            timeout_s = float(timeout_text)
        except ValueError as exc:
            raise BackendError(f"bad LAYOUTLOOP_REMOTE_TIMEOUT {timeout_text!r}") from exc
        return RemoteConfig(url=url, auth_token=env.get("LAYOUTLOOP_REMOTE_TOKEN"), timeout_s=timeout_s)


_TRANSIENT_STATUS = {429, 500, 502, 503, 504}


class RemoteReviser(ReviserBackend):
    """HTTP client for a hosted generation service.

    Request: ``{"parts": [...], "decoding": {...}, "images": [{"id", "png_base64"}]}``.
    Response: JSON object with a ``"text"`` field carrying the design code.
    Transient failures retry with exponential backoff; in-flight requests are
    bounded by a semaphore.
    """

    def __init__(
        self,
        config: RemoteConfig,
        registry: ClassRegistry | None = None,
        image_provider: Callable[[str], bytes] | None = None,
    ) -> None:
        self.name = "remote"
        self.capabilities = BackendCapabilities(
            supports_temperature=True, supports_images=image_provider is not None
        )
        self.config = config
        self._registry = registry or default_registry()
        self._image_provider = image_provider
        self._semaphore = threading.Semaphore(config.concurrency)

    def _payload(self, bundle: PromptBundle) -> dict:
        payload = bundle.to_wire()
        if self._image_provider is not None:
            images = []
            for image_id in bundle.image_parts():
                png = self._image_provider(image_id)
                images.append({"id": image_id, "png_base64": base64.b64encode(png).decode("ascii")})
            payload["images"] = images
        return payload

    def revise(self, bundle: PromptBundle) -> GenerationResult:
        started = time.perf_counter()
        headers = {"Content-Type": "application/json"}
        if self.config.auth_token:
            headers["Authorization"] = f"Bearer {self.config.auth_token}"
        payload = self._payload(bundle)

        last_error: str | None = None
        with self._semaphore:
            for attempt in range(self.config.max_attempts):
                if attempt:
                    time.sleep(self.config.backoff_base_s * (2 ** (attempt - 1)))
                try:
                    response = requests.post(
                        self.config.url, json=payload, headers=headers, timeout=self.config.timeout_s
                    )
                except requests.RequestException as exc:
                    last_error = f"request failed: {exc}"
                    continue
                if response.status_code in _TRANSIENT_STATUS:
                    last_error = f"transient status {response.status_code}"
                    continue
                if response.status_code != 200:
                    # Non-transient service answer (e.g. refusal): surface verbatim.
                    raise BackendError(
                        f"service returned {response.status_code}: {response.text.strip()}"
                    )
                try:
                    body = response.json()
                    text = body["text"]
                except (ValueError, KeyError, TypeError) as exc:
                    raise BackendError(f"malformed service response: {exc}") from exc
                return _finish(self.name, text, bundle, self._registry, started)
        raise BackendError(
            f"remote backend failed after {self.config.max_attempts} attempts: {last_error}"
        )


class RecordingBackend(ReviserBackend):
    """Wraps a backend and records every bundle it sees (prompt inspection hook)."""

    def __init__(self, inner: ReviserBackend) -> None:
        self.inner = inner
        self.name = inner.name
        self.capabilities = inner.capabilities
        self.bundles: list[PromptBundle] = []

    def revise(self, bundle: PromptBundle) -> GenerationResult:
        self.bundles.append(bundle)
        return self.inner.revise(bundle)
