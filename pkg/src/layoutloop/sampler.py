"""Training-example sampling over revision trajectories.

Five input constructions are supported: direct from S0, direct from a random
intermediate, hop (j-then-i Gaussian or quantized-bucket pairs), single
revision, and multi revision with a uniformly sized context subset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .trajectory import Corpus, RevisionTrajectory, bucket_of


class Setup(str, Enum):
    """Model input construction; also the chain-mode semantics tag."""

    DIRECT_S0 = "direct_s0"
    DIRECT_SI = "direct_si"
    HOP = "hop"
    SINGLE_REV = "single_rev"
    MULTI_REV = "multi_rev"


class Strategy(str, Enum):
    """Sampling strategy names as exposed on the CLI."""

    DIRECT = "direct"
    DIRECT_SI = "direct-si"
    HOP_JTI = "hop-jti"
    HOP_QUANT = "hop-quant"
    SINGLE = "single"
    MULTI = "multi"

    @property
    def setup(self) -> Setup:
        return {
            Strategy.DIRECT: Setup.DIRECT_S0,
            Strategy.DIRECT_SI: Setup.DIRECT_SI,
            Strategy.HOP_JTI: Setup.HOP,
            Strategy.HOP_QUANT: Setup.HOP,
            Strategy.SINGLE: Setup.SINGLE_REV,
            Strategy.MULTI: Setup.MULTI_REV,
        }[self]


@dataclass(frozen=True)
class TrainingExample:
    setup: Setup
    trajectory_id: str
    input_state_indices: tuple[int, ...]
    target_index: int

    def to_dict(self) -> dict:
        return {
            "setup": self.setup.value,
            "trajectory_id": self.trajectory_id,
            "input_indices": list(self.input_state_indices),
            "target_index": self.target_index,
        }


@dataclass(frozen=True)
class SamplerConfig:
    strategy: Strategy = Strategy.MULTI
    repeats: int = 10
    gaussian_center_quantile: float = 0.9
    gaussian_sigma_fraction: float = 0.05
    bucket_count: int = 5
    multi_rev_max: int = 20
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.gaussian_center_quantile <= 1.0:
            raise ValueError("gaussian_center_quantile must be in (0, 1]")
        if self.gaussian_sigma_fraction <= 0.0:
            raise ValueError("gaussian_sigma_fraction must be positive")
        if self.multi_rev_max < 0:
            raise ValueError("multi_rev_max must be nonnegative")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.bucket_count < 2:
            raise ValueError("bucket_count must be >= 2")


def sample_direct(
    traj: RevisionTrajectory, rng: np.random.Generator, use_intermediate: bool = False
) -> TrainingExample:
    """Direct setup: predict the final design from S0 (or a random earlier state)."""
    n = traj.n
    if use_intermediate:
        i = int(rng.integers(0, n))  # uniform over [0, n)
        return TrainingExample(Setup.DIRECT_SI, traj.id, (i,), n)
    return TrainingExample(Setup.DIRECT_S0, traj.id, (0,), n)


def sample_hop_j_then_i(
    traj: RevisionTrajectory, rng: np.random.Generator, cfg: SamplerConfig | None = None
) -> TrainingExample:
    """Hop setup, j-then-i: draw the target j from a Gaussian centered at the
    90th percentile of [0, n] (clamped to [1, n] after rounding), then the
    source i uniformly from [0, j)."""
    cfg = cfg or SamplerConfig(strategy=Strategy.HOP_JTI)
    cfg.validate()
    n = traj.n
    center = cfg.gaussian_center_quantile * n
    sigma = cfg.gaussian_sigma_fraction * n
    j = int(np.clip(round(float(rng.normal(center, sigma))), 1, n))
    i = int(rng.integers(0, j))
    return TrainingExample(Setup.HOP, traj.id, (i,), j)


def _bucket_members(n: int, bucket_count: int) -> list[list[int]]:
    buckets: list[list[int]] = [[] for _ in range(bucket_count)]
    for i in range(n + 1):
        buckets[bucket_of(i, n, bucket_count)].append(i)
    return buckets


def sample_hop_quantized(
    traj: RevisionTrajectory, rng: np.random.Generator, cfg: SamplerConfig | None = None
) -> TrainingExample:
    """Hop setup, quantized: pick two distinct ordered stage buckets, then one
    index uniformly inside each; i < j holds because buckets are contiguous."""
    cfg = cfg or SamplerConfig(strategy=Strategy.HOP_QUANT)
    cfg.validate()
    n = traj.n
    if n + 1 < cfg.bucket_count:
        raise ValueError(
            f"trajectory {traj.id!r} has {n + 1} states, fewer than bucket_count={cfg.bucket_count}"
        )
    buckets = _bucket_members(n, cfg.bucket_count)
    ordered_pairs = [
        (bi, bj) for bi in range(cfg.bucket_count) for bj in range(bi + 1, cfg.bucket_count)
    ]
    bi, bj = ordered_pairs[int(rng.integers(0, len(ordered_pairs)))]
    i = buckets[bi][int(rng.integers(0, len(buckets[bi])))]
    j = buckets[bj][int(rng.integers(0, len(buckets[bj])))]
    return TrainingExample(Setup.HOP, traj.id, (i,), j)


def sample_single_revision(traj: RevisionTrajectory, rng: np.random.Generator) -> TrainingExample:
    """Single-revision setup: input (S0, Si) with i uniform over the intermediates;
    trajectories without intermediates duplicate S0."""
    n = traj.n
    if n >= 2:
        i = int(rng.integers(1, n))  # uniform over [1, n-1]
    else:
        i = 0
    return TrainingExample(Setup.SINGLE_REV, traj.id, (0, i), n)


def sample_multi_revision(
    traj: RevisionTrajectory, rng: np.random.Generator, cfg: SamplerConfig | None = None
) -> TrainingExample:
    """Multi-revision setup: input (S0, C) where C is a sorted subset of the
    intermediates with size uniform in [0, min(multi_rev_max, n-1)]."""
    cfg = cfg or SamplerConfig(strategy=Strategy.MULTI)
    cfg.validate()
    n = traj.n
    k_max = min(cfg.multi_rev_max, n - 1)
    k = int(rng.integers(0, k_max + 1))
    if k:
        context = sorted(int(v) for v in rng.choice(np.arange(1, n), size=k, replace=False))
    else:
        context = []
    return TrainingExample(Setup.MULTI_REV, traj.id, (0, *context), n)


def sample_example(
    traj: RevisionTrajectory, rng: np.random.Generator, cfg: SamplerConfig
) -> TrainingExample:
    strategy = cfg.strategy
    if strategy == Strategy.DIRECT:
        return sample_direct(traj, rng, use_intermediate=False)
    if strategy == Strategy.DIRECT_SI:
        return sample_direct(traj, rng, use_intermediate=True)
    if strategy == Strategy.HOP_JTI:
        return sample_hop_j_then_i(traj, rng, cfg)
    if strategy == Strategy.HOP_QUANT:
        return sample_hop_quantized(traj, rng, cfg)
    if strategy == Strategy.SINGLE:
        return sample_single_revision(traj, rng)
    if strategy == Strategy.MULTI:
        return sample_multi_revision(traj, rng, cfg)
    raise ValueError(f"unknown strategy {strategy!r}")


def expand_corpus(corpus: Corpus, cfg: SamplerConfig) -> list[TrainingExample]:
    """Emit ``repeats`` examples per trajectory with per-(trajectory, repeat)
    RNG streams, so expansion is deterministic and parallelizable."""
    cfg.validate()
    if len(corpus) == 0:
        raise ValueError("expand_corpus over an empty corpus")
    examples: list[TrainingExample] = []
    for t_idx, traj in enumerate(corpus):
        for r_idx in range(cfg.repeats):
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, t_idx, r_idx]))
            examples.append(sample_example(traj, rng, cfg))
    return examples


def dumps_examples(examples: list[TrainingExample]) -> str:
    return "".join(
        json.dumps(ex.to_dict(), sort_keys=True, separators=(",", ":")) + "\n" for ex in examples
    )


def validate_example(example: TrainingExample, n: int) -> None:
    """Assert the per-setup index contract; raises AssertionError on violation."""
    indices = example.input_state_indices
    assert all(0 <= i <= n for i in indices), f"indices out of range: {indices}"
    assert 0 <= example.target_index <= n
    if example.setup == Setup.HOP:
        assert len(indices) == 1 and indices[0] < example.target_index
    else:
        assert example.target_index == n
    if example.setup in (Setup.DIRECT_S0, Setup.DIRECT_SI):
        assert len(indices) == 1
        if example.setup == Setup.DIRECT_S0:
            assert indices == (0,)
        else:
            assert indices[0] < n
    if example.setup == Setup.SINGLE_REV:
        assert len(indices) == 2 and indices[0] == 0
        assert (indices[1] == 0 and n == 1) or 1 <= indices[1] <= n - 1
    if example.setup == Setup.MULTI_REV:
        assert indices[0] == 0
        context = indices[1:]
        assert all(1 <= i <= n - 1 for i in context)
        assert list(context) == sorted(set(context)), "context must be strictly increasing"
