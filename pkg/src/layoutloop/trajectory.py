"""Revision trajectories: storage (JSONL), synthesis, and the stage-FID profile."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .core import (
    ClassRegistry,
    Element,
    LayoutDoc,
    DEFAULT_CANVAS_H,
    DEFAULT_CANVAS_W,
    default_registry,
    parse_layout_code,
    serialize_layout_code,
    snap_coord,
    validate_layout,
)
from .metrics import embed_population, fid


class Source(str, Enum):
    HUMAN = "human"
    SYNTHETIC = "synthetic"
    MODEL = "model"


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


class CorpusError(ValueError):
    """Malformed corpus file or embedded design code."""


@dataclass(frozen=True)
class RevisionTrajectory:
    """A prompt plus the ordered revision states S0..Sn; the last state is the final design."""

    id: str
    prompt: str
    states: tuple[LayoutDoc, ...]
    source: Source = Source.SYNTHETIC

    def __post_init__(self) -> None:
        if len(self.states) < 2:
            raise ValueError(f"trajectory {self.id!r} needs >= 2 states, got {len(self.states)}")
        if not isinstance(self.states, tuple):
            object.__setattr__(self, "states", tuple(self.states))
        for idx, state in enumerate(self.states):
            report = validate_layout(state)
            if not report.ok:
                first = report.violations[0]
                raise ValueError(f"trajectory {self.id!r} state {idx} invalid: {first.message}")

    @property
    def n(self) -> int:
        """Number of revision edits; states are indexed 0..n."""
        return len(self.states) - 1

    @property
    def final(self) -> LayoutDoc:
        return self.states[-1]


@dataclass(frozen=True)
class Corpus:
    trajectories: tuple[RevisionTrajectory, ...]
    split: Split = Split.TRAIN

    def __post_init__(self) -> None:
        if not isinstance(self.trajectories, tuple):
            object.__setattr__(self, "trajectories", tuple(self.trajectories))
        ids = [t.id for t in self.trajectories]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate trajectory ids: {dupes}")

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self) -> Iterator[RevisionTrajectory]:
        return iter(self.trajectories)

    def finals(self) -> list[LayoutDoc]:
        return [t.final for t in self.trajectories]


def _trajectory_to_record(traj: RevisionTrajectory) -> dict:
    return {
        "id": traj.id,
        "prompt": traj.prompt,
        "source": traj.source.value,
        "states": [serialize_layout_code(s) for s in traj.states],
    }


def _trajectory_from_record(record: dict, lineno: int, registry: ClassRegistry) -> RevisionTrajectory:
    for key in ("id", "prompt", "source", "states"):
        if key not in record:
            raise CorpusError(f"line {lineno}: record missing key {key!r}")
    states: list[LayoutDoc] = []
    for idx, code in enumerate(record["states"]):
        try:
            states.append(parse_layout_code(code, registry))
        except ValueError as exc:
            raise CorpusError(
                f"trajectory {record['id']!r} state {idx}: invalid design code ({exc})"
            ) from exc
    try:
        return RevisionTrajectory(
            id=record["id"], prompt=record["prompt"], states=tuple(states), source=Source(record["source"])
        )
    except ValueError as exc:
        raise CorpusError(f"line {lineno}: {exc}") from exc


def dumps_corpus(corpus: Corpus) -> str:
    """Canonical JSONL text: one trajectory per line, sorted keys, compact separators."""
    lines = [
        json.dumps(_trajectory_to_record(t), sort_keys=True, separators=(",", ":")) for t in corpus
    ]
    return "".join(line + "\n" for line in lines)


def loads_corpus(text: str, registry: ClassRegistry | None = None, split: Split = Split.TRAIN) -> Corpus:
    registry = registry or default_registry()
    trajectories: list[RevisionTrajectory] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed record ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise CorpusError(f"line {lineno}: record must be a JSON object")
        trajectories.append(_trajectory_from_record(record, lineno, registry))
    return Corpus(tuple(trajectories), split)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_corpus(corpus))


def load_corpus(path, registry: ClassRegistry | None = None, split: Split = Split.TRAIN) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_corpus(fh.read(), registry, split)


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic revision generator.

    ``noise`` is the master scale: 0 collapses every state onto the final
    design. The defaults are tuned so that mid-trajectory experimentation
    (large inserted elements, later reverted) makes intermediate stages
    measurably worse than S0 while the tail converges to the final design.
    """

    canvas_w: int = DEFAULT_CANVAS_W
    canvas_h: int = DEFAULT_CANVAS_H
    element_count: tuple[int, int] = (6, 12)
    length: tuple[int, int] = (10, 16)
    noise: float = 1.0
    jitter_start: int = 24
    drop_prob: float = 0.12
    duplicate_prob: float = 0.08
    extra_max: int = 5
    revert_prob: float = 0.3
    align_pass_prob: float = 0.25
    grid: int = 8

    def validate(self) -> None:
        if self.canvas_w < 64 or self.canvas_h < 64:
            raise ValueError("canvas must be at least 64x64 for synthesis")
        lo, hi = self.element_count
        if lo < 1 or hi < lo:
            raise ValueError(f"bad element_count range {self.element_count}")
        llo, lhi = self.length
        if llo < 2 or lhi < llo:
            raise ValueError(f"bad length range {self.length}")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        for name in ("drop_prob", "duplicate_prob", "revert_prob", "align_pass_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {value}")
        if self.extra_max < 0 or self.jitter_start < 0:
            raise ValueError("extra_max and jitter_start must be nonnegative")


_PROMPT_TOPICS = (
    "a music player",
    "a food delivery app",
    "a fitness tracker",
    "a travel booking app",
    "a chat messenger",
    "a photo gallery",
    "a podcast app",
    "a note taking app",
    "a banking dashboard",
    "a weather app",
    "an online store",
    "a recipe browser",
)


def _make_final_layout(rng: np.random.Generator, cfg: SynthConfig, registry: ClassRegistry) -> LayoutDoc:
    """A clean final design: 16-grid positions, one shared size per class, no duplicates.

    By construction the result is a fixed point of the grid/unify/align/dedupe
    heuristics (positions on a coarse grid, same-class sizes identical).
    """
    w_cap, h_cap = cfg.canvas_w, cfg.canvas_h
    count = int(rng.integers(cfg.element_count[0], cfg.element_count[1] + 1))
    classes = registry.classes
    class_size: dict[int, tuple[int, int]] = {}
    used: set[tuple[int, int, int]] = set()
    elements: list[Element] = []
    for _ in range(count):
        cls = classes[int(rng.integers(0, len(classes)))]
        if cls.id not in class_size:
            ew = 8 * int(rng.integers(4, max(5, min(20, w_cap // 16)) + 1))
            eh = 8 * int(rng.integers(3, max(4, min(13, h_cap // 24)) + 1))
            class_size[cls.id] = (min(ew, w_cap), min(eh, h_cap))
        ew, eh = class_size[cls.id]
        for _attempt in range(24):
            ex = 16 * int(rng.integers(0, (w_cap - ew) // 16 + 1))
            ey = 16 * int(rng.integers(0, (h_cap - eh) // 16 + 1))
            if (cls.id, ex, ey) not in used:
                used.add((cls.id, ex, ey))
                elements.append(Element(cls, ex, ey, ew, eh))
                break
    return LayoutDoc(w_cap, h_cap, tuple(elements))


def _clamp_element(el: Element, w_cap: int, h_cap: int) -> Element:
    ew = max(1, min(el.w, w_cap))
    eh = max(1, min(el.h, h_cap))
    ex = max(0, min(el.x, w_cap - ew))
    ey = max(0, min(el.y, h_cap - eh))
    return Element(el.cls, ex, ey, ew, eh, el.label)


def synthesize_trajectory(
    rng: np.random.Generator,
    cfg: SynthConfig,
    traj_id: str = "synth-0",
    registry: ClassRegistry | None = None,
    prompt: str | None = None,
) -> RevisionTrajectory:
    """Generate one revision trajectory ending in a clean final design.

    S0 perturbs the final design (position/size jitter, dropped and duplicated
    elements); the middle of the path adds experimental elements that are later
    reverted, with corrective drift and occasional alignment passes, so that
    affinity to the final design is non-monotone along the way.
    """
    cfg.validate()
    registry = registry or default_registry()
    if prompt is None:
        prompt = _PROMPT_TOPICS[int(rng.integers(0, len(_PROMPT_TOPICS)))]
    n_states = int(rng.integers(cfg.length[0], cfg.length[1] + 1))
    n = n_states - 1
    final = _make_final_layout(rng, cfg, registry)

    if cfg.noise <= 0.0:
        return RevisionTrajectory(traj_id, prompt, tuple([final] * n_states), Source.SYNTHETIC)

    w_cap, h_cap = cfg.canvas_w, cfg.canvas_h
    classes = registry.classes

    # Per-element schedule against the final design.
    settle_t = rng.uniform(0.35, 0.95, size=len(final.elements))
    appear_at = np.zeros(len(final.elements), dtype=int)
    for idx in range(len(final.elements)):
        if rng.random() < cfg.drop_prob * cfg.noise:
            appear_at[idx] = int(rng.integers(1, n + 1))

    # Stray duplicates present early, removed at vanish_at.
    ghosts: list[tuple[Element, int]] = []
    for el in final.elements:
        if rng.random() < cfg.duplicate_prob * cfg.noise:
            ghost = Element(el.cls, el.x + 16, min(el.y + 16, h_cap - el.h), el.w, el.h)
            ghosts.append((_clamp_element(ghost, w_cap, h_cap), int(rng.integers(1, n + 1))))

    # Experimental insertions: spawn in the first half, die by revert_prob per step.
    extras: list[tuple[Element, int, int]] = []  # (element, born_at, dies_at)
    spawn_lo = max(1, round(0.1 * n))
    spawn_hi = max(spawn_lo + 1, round(0.55 * n))
    for _ in range(int(round(cfg.extra_max * cfg.noise))):
        born = int(rng.integers(spawn_lo, spawn_hi))
        dies = born + 1
        while dies < n and rng.random() > cfg.revert_prob:
            dies += 1
        ew = 8 * int(rng.integers(6, max(7, min(31, w_cap // 12)) + 1))
        eh = 8 * int(rng.integers(6, max(7, min(21, h_cap // 40)) + 1))
        ew, eh = min(ew, w_cap), min(eh, h_cap)
        ex = int(rng.integers(0, w_cap - ew + 1))
        ey = int(rng.integers(0, h_cap - eh + 1))
        cls = classes[int(rng.integers(0, len(classes)))]
        extras.append((Element(cls, ex, ey, ew, eh), born, dies))

    states: list[LayoutDoc] = []
    for i in range(n):
        t = i / n
        amp = cfg.noise * cfg.jitter_start * (1.0 - t)
        current: list[Element] = []
        for idx, el in enumerate(final.elements):
            if appear_at[idx] > i:
                continue
            if t >= settle_t[idx] or amp <= 0:
                current.append(el)
                continue
            jx = el.x + int(round(amp * rng.uniform(-1, 1)))
            jy = el.y + int(round(amp * rng.uniform(-1, 1)))
            jw = el.w + int(round(amp / 3 * rng.uniform(-1, 1)))
            jh = el.h + int(round(amp / 3 * rng.uniform(-1, 1)))
            current.append(_clamp_element(Element(el.cls, jx, jy, jw, jh, el.label), w_cap, h_cap))
        for ghost, vanish in ghosts:
            if i < vanish:
                current.append(ghost)
        for extra, born, dies in extras:
            if born <= i < dies:
                current.append(extra)
        if i > 0 and rng.random() < cfg.align_pass_prob:
            current = [
                _clamp_element(
                    Element(el.cls, snap_coord(el.x, cfg.grid), snap_coord(el.y, cfg.grid), el.w, el.h, el.label),
                    w_cap,
                    h_cap,
                )
                for el in current
            ]
        states.append(LayoutDoc(w_cap, h_cap, tuple(current)))

    states.append(final)
    return RevisionTrajectory(traj_id, prompt, tuple(states), Source.SYNTHETIC)


def synthesize_corpus(
    count: int,
    seed: int = 0,
    cfg: SynthConfig | None = None,
    registry: ClassRegistry | None = None,
    split: Split = Split.TRAIN,
    id_prefix: str = "synth",
) -> Corpus:
    """Generate ``count`` trajectories with independent per-index RNG streams,
    so results are reproducible and order-independent."""
    cfg = cfg or SynthConfig()
    registry = registry or default_registry()
    trajectories = []
    for idx in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx]))
        trajectories.append(
            synthesize_trajectory(rng, cfg, traj_id=f"{id_prefix}-{idx:06d}", registry=registry)
        )
    return Corpus(tuple(trajectories), split)


@dataclass(frozen=True)
class StageProfile:
    """Bucket-wise FID of trajectory stages against the final-design population."""

    bucket_fids: tuple[float, ...]
    sample_counts: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"bucket_fids": list(self.bucket_fids), "sample_counts": list(self.sample_counts)}


def bucket_of(index: int, n: int, bucket_count: int) -> int:
    """Stage bucket for state index ``index`` of a trajectory with n edits (n+1 states).

    The final state always lands in the last bucket, even for trajectories
    shorter than ``bucket_count`` (where some buckets stay unpopulated).
    """
    if index >= n:
        return bucket_count - 1
    return index * bucket_count // (n + 1)


def stage_profile(
    corpus: Corpus,
    bucket_count: int = 5,
    reference: Sequence[LayoutDoc] | None = None,
    registry: ClassRegistry | None = None,
    seed: int = 0,
    eps: float = 1e-6,
    min_samples: int = 2,
) -> StageProfile:
    """Quantize each trajectory into ``bucket_count`` stages and FID each stage
    population against the final-design population.

    One state is sampled per trajectory per bucket (uniformly within the
    bucket) to keep bucket populations equal-sized; trajectories shorter than
    ``bucket_count`` simply skip the buckets they do not reach.
    """
    if len(corpus) == 0:
        raise ValueError("stage_profile over an empty corpus")
    registry = registry or default_registry()
    rng = np.random.default_rng(seed)

    buckets: list[list[LayoutDoc]] = [[] for _ in range(bucket_count)]
    for traj in corpus:
        per_bucket: dict[int, list[int]] = {}
        for i in range(traj.n + 1):
            per_bucket.setdefault(bucket_of(i, traj.n, bucket_count), []).append(i)
        for b, indices in per_bucket.items():
            pick = indices[int(rng.integers(0, len(indices)))]
            buckets[b].append(traj.states[pick])

    reference_docs = list(reference) if reference is not None else corpus.finals()
    ref_feats = embed_population(reference_docs, registry)
    fids: list[float] = []
    counts: list[int] = []
    for b, docs in enumerate(buckets):
        if len(docs) < min_samples:
            raise ValueError(f"bucket {b} has {len(docs)} samples, fewer than the FID minimum {min_samples}")
        feats = embed_population(docs, registry)
        fids.append(fid(feats, ref_feats, eps).score)
        counts.append(len(docs))
    return StageProfile(tuple(fids), tuple(counts))
