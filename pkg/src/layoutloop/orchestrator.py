"""Inference orchestration: direct/guided inference, the iterative self-revision
chain, human-in-the-loop injection, echo-chamber detection, and run evaluation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .backends import BackendError, GenerationResult, ReviserBackend
from .core import (
    ClassRegistry,
    LayoutDoc,
    Violation,
    clip_layout,
    code_hash,
    default_registry,
    parse_layout_code,
    serialize_layout_code,
)
from .metrics import TextMetrics, embed_population, fid, identical_rate, text_metrics
from .prompts import (
    DecodingParams,
    MULTI_BUDGET,
    PromptBundle,
    build_direct_prompt,
    build_revision_prompt,
)
from .sampler import Setup

_REVISION_SETUPS = (Setup.SINGLE_REV, Setup.MULTI_REV)


class SessionStatus(str, Enum):
    ACTIVE = "active"
    ECHO_FLAGGED = "echo_flagged"
    DONE = "done"


@dataclass(frozen=True)
class ChainConfig:
    rounds: int = 3
    setup: Setup = Setup.MULTI_REV
    temperature: float = 0.0
    echo_rouge_threshold: float = 99.0
    echo_window: int = 1
    max_context_revisions: int = 20
    max_tokens: int = 400
    fix_typos: bool = False

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.echo_window < 1:
            raise ValueError("echo_window must be >= 1")

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "setup": self.setup.value,
            "temperature": self.temperature,
            "echo_rouge_threshold": self.echo_rouge_threshold,
            "echo_window": self.echo_window,
            "max_context_revisions": self.max_context_revisions,
            "max_tokens": self.max_tokens,
            "fix_typos": self.fix_typos,
        }

    @staticmethod
    def from_dict(data: dict) -> "ChainConfig":
        return ChainConfig(
            rounds=data["rounds"],
            setup=Setup(data["setup"]),
            temperature=data["temperature"],
            echo_rouge_threshold=data["echo_rouge_threshold"],
            echo_window=data["echo_window"],
            max_context_revisions=data["max_context_revisions"],
            max_tokens=data["max_tokens"],
            fix_typos=data.get("fix_typos", False),
        )


@dataclass(frozen=True)
class RoundRecord:
    """One chain round: the bundle's code parts, the generation, and the
    round-over-round text metrics (previous round's code as reference)."""

    index: int
    input_codes: tuple[str, ...]
    output_text: str
    output_code: str
    parse_error: str | None
    violations: tuple[Violation, ...]
    metrics: TextMetrics
    latency_s: float
    backend: str
    human_injected: bool = False

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "input_codes": list(self.input_codes),
            "output_text": self.output_text,
            "output_code": self.output_code,
            "parse_error": self.parse_error,
            "violations": [v.to_dict() for v in self.violations],
            "metrics": self.metrics.to_dict(),
            "latency_s": self.latency_s,
            "backend": self.backend,
            "human_injected": self.human_injected,
        }

    @staticmethod
    def from_dict(data: dict) -> "RoundRecord":
        return RoundRecord(
            index=data["index"],
            input_codes=tuple(data["input_codes"]),
            output_text=data["output_text"],
            output_code=data["output_code"],
            parse_error=data["parse_error"],
            violations=tuple(Violation(**v) for v in data["violations"]),
            metrics=TextMetrics(**data["metrics"]),
            latency_s=data["latency_s"],
            backend=data["backend"],
            human_injected=data["human_injected"],
        )


@dataclass
class SessionState:
    """Serializable state of one refinement session."""

    prompt: str
    s0_code: str
    config: ChainConfig
    rounds: list[RoundRecord] = field(default_factory=list)
    revision_codes: list[str] = field(default_factory=list)  # the running revision set
    state_code: str = ""  # current chained layout, canonical
    status: SessionStatus = SessionStatus.ACTIVE
    echo_round: int | None = None
    echo_streak: int = 0
    human_injections: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.state_code:
            self.state_code = self.s0_code

    @property
    def echo_flagged(self) -> bool:
        return self.echo_round is not None

    def to_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "s0_code": self.s0_code,
            "config": self.config.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "revision_codes": list(self.revision_codes),
            "state_code": self.state_code,
            "status": self.status.value,
            "echo_round": self.echo_round,
            "echo_streak": self.echo_streak,
            "human_injections": [{"round": r, "code": c} for r, c in self.human_injections],
        }

    @staticmethod
    def from_dict(data: dict) -> "SessionState":
        return SessionState(
            prompt=data["prompt"],
            s0_code=data["s0_code"],
            config=ChainConfig.from_dict(data["config"]),
            rounds=[RoundRecord.from_dict(r) for r in data["rounds"]],
            revision_codes=list(data["revision_codes"]),
            state_code=data["state_code"],
            status=SessionStatus(data["status"]),
            echo_round=data["echo_round"],
            echo_streak=data["echo_streak"],
            human_injections=[(h["round"], h["code"]) for h in data["human_injections"]],
        )


@dataclass
class ChainReport:
    """Per-session outcome of the iterative loop; JSON-serializable."""

    trajectory_id: str
    state: SessionState
    error: str | None = None

    def to_dict(self) -> dict:
        return {"trajectory_id": self.trajectory_id, "error": self.error, **self.state.to_dict()}

    @staticmethod
    def from_dict(data: dict) -> "ChainReport":
        return ChainReport(
            trajectory_id=data["trajectory_id"], state=SessionState.from_dict(data), error=data["error"]
        )

    @property
    def rounds(self) -> list[RoundRecord]:
        return self.state.rounds


class ChainSession:
    """Runs one session round-by-round; owns the chaining semantics per setup.

    Round 1 of a self-chain duplicates S0 into the revision slot for the
    single/multi setups; subsequent rounds feed the model its own outputs
    (single: the latest; multi: all accumulated, most recent first capped).
    Echo detection compares consecutive model outputs, so it starts at round 2.
    """

    def __init__(
        self,
        backend: ReviserBackend,
        state: SessionState,
        registry: ClassRegistry | None = None,
    ) -> None:
        self.backend = backend
        self.state = state
        self.registry = registry or default_registry()
        self.last_result: GenerationResult | None = None

    # -- prompt assembly ----------------------------------------------------

    def _doc(self, code: str) -> LayoutDoc:
        return parse_layout_code(code, self.registry)

    def _decoding(self) -> DecodingParams:
        return DecodingParams(max_tokens=self.state.config.max_tokens, temperature=self.state.config.temperature)

    def _build_bundle(self, edit_codes: Sequence[str] | None = None) -> PromptBundle:
        cfg = self.state.config
        s0 = self._doc(self.state.s0_code)
        if cfg.setup in _REVISION_SETUPS:
            if edit_codes is None:
                if cfg.setup == Setup.SINGLE_REV:
                    codes = [self.state.revision_codes[-1]] if self.state.revision_codes else [self.state.s0_code]
                else:
                    codes = list(self.state.revision_codes[-cfg.max_context_revisions :]) or [self.state.s0_code]
            else:
                codes = list(edit_codes)
            edits = [self._doc(c) for c in codes]
            budget = MULTI_BUDGET if cfg.setup == Setup.MULTI_REV else None
            return build_revision_prompt(
                self.state.prompt,
                s0,
                edits,
                image_id=code_hash(self.state.s0_code),
                decoding=self._decoding(),
                fix_typos=cfg.fix_typos,
                budget=budget,
            )
        current = self._doc(self.state.state_code)
        return build_direct_prompt(
            self.state.prompt,
            current,
            image_id=code_hash(self.state.state_code),
            decoding=self._decoding(),
            fix_typos=cfg.fix_typos,
        )

    # -- round execution ----------------------------------------------------

    def _chain_output(self, result: GenerationResult) -> str:
        """Next chained state: lenient-clip invalid output; on a grammar
        failure keep the previous state so the protocol stays total."""
        if result.doc is None:
            return self.state.state_code
        doc = result.doc if not result.violations else clip_layout(result.doc)
        return serialize_layout_code(doc)

    def _append_round(self, bundle: PromptBundle, result: GenerationResult, human: bool) -> RoundRecord:
        cfg = self.state.config
        self.last_result = result
        prev_code = self.state.state_code
        next_code = self._chain_output(result)
        record = RoundRecord(
            index=len(self.state.rounds) + 1,
            input_codes=tuple(bundle.code_parts()),
            output_text=result.code_text,
            output_code=next_code,
            parse_error=result.parse_error,
            violations=result.violations,
            metrics=text_metrics(prev_code, next_code),
            latency_s=result.latency_s,
            backend=result.backend,
            human_injected=human,
        )
        self.state.rounds.append(record)
        self.state.state_code = next_code
        self.state.revision_codes.append(next_code)
        if len(self.state.revision_codes) > cfg.max_context_revisions:
            del self.state.revision_codes[: -cfg.max_context_revisions]
        # Echo detection: consecutive output-to-output comparisons only.
        if record.index >= 2:
            if record.metrics.rouge_l_f1 >= cfg.echo_rouge_threshold:
                self.state.echo_streak += 1
            else:
                self.state.echo_streak = 0
            if self.state.echo_streak >= cfg.echo_window and self.state.echo_round is None:
                self.state.echo_round = record.index
                self.state.status = SessionStatus.ECHO_FLAGGED
        return record

    def step(self) -> RoundRecord:
        """One self-revision round."""
        if not self.state.revision_codes and self.state.config.setup in _REVISION_SETUPS:
            self.state.revision_codes.append(self.state.s0_code)  # round-1 duplication rule
        bundle = self._build_bundle()
        result = self.backend.revise(bundle)
        return self._append_round(bundle, result, human=False)

    def step_human(self, edit: LayoutDoc) -> RoundRecord:
        """One guided round: the human edit joins the revision set and drives the prompt."""
        if self.state.config.setup not in _REVISION_SETUPS:
            raise ValueError("human-guided rounds require a single/multi revision setup")
        edit_code = serialize_layout_code(edit)
        self.state.revision_codes.append(edit_code)
        cfg = self.state.config
        if cfg.setup == Setup.SINGLE_REV:
            codes = [edit_code]
        else:
            codes = list(self.state.revision_codes[-cfg.max_context_revisions :])
        bundle = self._build_bundle(codes)
        result = self.backend.revise(bundle)
        self.state.human_injections.append((len(self.state.rounds) + 1, edit_code))
        return self._append_round(bundle, result, human=True)


def _new_state(prompt: str, s0: LayoutDoc, cfg: ChainConfig) -> SessionState:
    return SessionState(prompt=prompt, s0_code=serialize_layout_code(s0), config=cfg)


def direct_infer(
    backend: ReviserBackend,
    prompt: str,
    s0: LayoutDoc,
    setup: Setup = Setup.DIRECT_S0,
    registry: ClassRegistry | None = None,
    temperature: float = 0.0,
    fix_typos: bool = False,
) -> GenerationResult:
    """Single inference from S0 regardless of setup; revision setups duplicate
    S0 into the edit slot."""
    cfg = ChainConfig(rounds=1, setup=setup, temperature=temperature, fix_typos=fix_typos)
    session = ChainSession(backend, _new_state(prompt, s0, cfg), registry)
    session.step()
    assert session.last_result is not None
    return session.last_result


def guided_infer(
    backend: ReviserBackend,
    prompt: str,
    s0: LayoutDoc,
    edits: Sequence[LayoutDoc],
    setup: Setup = Setup.MULTI_REV,
    registry: ClassRegistry | None = None,
    temperature: float = 0.0,
    fix_typos: bool = False,
) -> GenerationResult:
    """Single inference with provided human edits in the revision slots."""
    if not edits:
        raise ValueError("guided_infer requires at least one edit")
    if setup not in _REVISION_SETUPS:
        raise ValueError("guided_infer requires a single/multi revision setup")
    registry = registry or default_registry()
    cfg = ChainConfig(rounds=1, setup=setup, temperature=temperature, fix_typos=fix_typos)
    session = ChainSession(backend, _new_state(prompt, s0, cfg), registry)
    session.state.revision_codes.extend(serialize_layout_code(e) for e in edits[:-1])
    session.step_human(edits[-1])
    assert session.last_result is not None
    return session.last_result


def run_chain(
    backend: ReviserBackend,
    prompt: str,
    s0: LayoutDoc,
    cfg: ChainConfig | None = None,
    registry: ClassRegistry | None = None,
    trajectory_id: str = "",
) -> ChainReport:
    """Run the iterative self-revision protocol for cfg.rounds rounds.

    A backend failure aborts the loop but preserves the partial report.
    """
    cfg = cfg or ChainConfig()
    session = ChainSession(backend, _new_state(prompt, s0, cfg), registry)
    report = ChainReport(trajectory_id=trajectory_id, state=session.state)
    for _ in range(cfg.rounds):
        try:
            session.step()
        except BackendError as exc:
            report.error = str(exc)
            return report
    session.state.status = (
        SessionStatus.ECHO_FLAGGED if session.state.echo_flagged else SessionStatus.DONE
    )
    return report


def run_chain_with_human(
    backend: ReviserBackend,
    prompt: str,
    s0: LayoutDoc,
    human_edit: LayoutDoc,
    cfg: ChainConfig | None = None,
    registry: ClassRegistry | None = None,
    trajectory_id: str = "",
) -> ChainReport:
    """Round 1 is guided by the human edit; later rounds self-revise with the
    edit retained in the revision set."""
    cfg = cfg or ChainConfig()
    session = ChainSession(backend, _new_state(prompt, s0, cfg), registry)
    report = ChainReport(trajectory_id=trajectory_id, state=session.state)
    try:
        session.step_human(human_edit)
        for _ in range(cfg.rounds - 1):
            session.step()
    except BackendError as exc:
        report.error = str(exc)
        return report
    session.state.status = (
        SessionStatus.ECHO_FLAGGED if session.state.echo_flagged else SessionStatus.DONE
    )
    return report


def evaluate_run(
    reports: Sequence[ChainReport],
    reference: Sequence[LayoutDoc],
    registry: ClassRegistry | None = None,
    fid_sample_size: int = 512,
    seed: int = 0,
    eps: float = 1e-6,
) -> list[dict]:
    """Per-round FID against the reference population plus mean ROUGE-L and
    identical rate; the table shape of the chain-mode analyses.

    Populations larger than ``fid_sample_size`` are subsampled with the given
    seed; smaller ones are used as-is with a warning.
    """
    if not reports:
        raise ValueError("evaluate_run over an empty report list")
    registry = registry or default_registry()
    rng = np.random.default_rng(seed)
    ref_feats = embed_population(reference, registry)

    max_rounds = max(len(r.rounds) for r in reports)
    rows: list[dict] = []
    for round_index in range(1, max_rounds + 1):
        docs: list[LayoutDoc] = []
        pairs: list[tuple[str, str]] = []
        rouges: list[float] = []
        for report in reports:
            if len(report.rounds) < round_index:
                continue
            record = report.rounds[round_index - 1]
            docs.append(parse_layout_code(record.output_code, registry))
            prev = report.state.s0_code if round_index == 1 else report.rounds[round_index - 2].output_code
            pairs.append((prev, record.output_code))
            rouges.append(record.metrics.rouge_l_f1)
        if len(docs) > fid_sample_size:
            picks = rng.choice(len(docs), size=fid_sample_size, replace=False)
            docs = [docs[int(k)] for k in picks]
        elif len(docs) < fid_sample_size:
            warnings.warn(
                f"round {round_index}: only {len(docs)} samples for FID (wanted {fid_sample_size})",
                RuntimeWarning,
                stacklevel=2,
            )
        feats = embed_population(docs, registry)
        rows.append(
            {
                "round": round_index,
                "n": len(docs),
                "fid": fid(feats, ref_feats, eps).score,
                "identical_rate": identical_rate(pairs),
                "rouge_l": sum(rouges) / len(rouges),
            }
        )
    return rows
