"""Evaluation metrics: layout feature embedding, Frechet distance, ROUGE-L, identical rate.

The feature embedding is layout-native (per-class counts plus per-class grid
occupancy) rather than a pretrained vision network, so absolute Frechet scores
are not comparable to image-feature pipelines; trends and oracle checks are.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import ClassRegistry, LayoutDoc, clip_layout, default_registry

GRID = 4
COUNT_CAP = 16


def feature_dim(registry: ClassRegistry | None = None) -> int:
    registry = registry or default_registry()
    return len(registry) * (1 + GRID * GRID)


def embed(doc: LayoutDoc, registry: ClassRegistry | None = None) -> np.ndarray:
    """Embed one layout as a vector in [0,1]^d, d = |classes| * (1 + GRID^2).

    Per class, in registry id order: one normalized count channel
    (``min(count/16, 1)``) followed by GRID x GRID cell-coverage fractions
    (union of that class's rectangles, exact at integer resolution).
    """
    registry = registry or default_registry()
    doc = clip_layout(doc)
    w, h = doc.canvas_w, doc.canvas_h
    xs = [i * w // GRID for i in range(GRID + 1)]
    ys = [i * h // GRID for i in range(GRID + 1)]

    by_class: dict[int, list] = {}
    for el in doc.elements:
        by_class.setdefault(el.cls.id, []).append(el)

    vec = np.zeros(feature_dim(registry), dtype=np.float64)
    for ci, cls in enumerate(registry.classes):
        els = by_class.get(cls.id)
        if not els:
            continue
        base = ci * (1 + GRID * GRID)
        vec[base] = min(len(els) / COUNT_CAP, 1.0)
        mask = np.zeros((h, w), dtype=bool)
        for el in els:
            mask[el.y : el.y + el.h, el.x : el.x + el.w] = True
        for gy in range(GRID):
            for gx in range(GRID):
                cell = mask[ys[gy] : ys[gy + 1], xs[gx] : xs[gx + 1]]
                if cell.size:
                    vec[base + 1 + gy * GRID + gx] = cell.mean()
    return vec


def embed_population(docs: Iterable[LayoutDoc], registry: ClassRegistry | None = None) -> np.ndarray:
    registry = registry or default_registry()
    rows = [embed(doc, registry) for doc in docs]
    if not rows:
        return np.zeros((0, feature_dim(registry)))
    return np.vstack(rows)


@dataclass(frozen=True)
class FidResult:
    score: float
    n1: int
    n2: int
    eps: float
    mean_term: float
    trace_term: float

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "n1": self.n1,
            "n2": self.n2,
            "eps": self.eps,
            "mean_term": self.mean_term,
            "trace_term": self.trace_term,
        }


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root by eigendecomposition, negative eigenvalues clamped to 0."""
    sym = (mat + mat.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(sym)
    eigvals = np.clip(eigvals, 0.0, None)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return (root + root.T) / 2.0


def _empirical_stats(pop: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = pop.mean(axis=0)
    n, d = pop.shape
    if n == 1:
        return mu, np.zeros((d, d))
    cov = np.atleast_2d(np.cov(pop, rowvar=False, ddof=1))
    return mu, cov


def fid(
    pop_a: Sequence[np.ndarray] | np.ndarray,
    pop_b: Sequence[np.ndarray] | np.ndarray,
    eps: float = 1e-6,
) -> FidResult:
    """Frechet distance between Gaussian fits of two feature populations.

    score = |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa Sb)^(1/2)), with covariances
    regularized by ``eps * I`` and the matrix square root taken over the
    symmetric product A Sb A (A = Sa^(1/2)), which shares its spectrum with
    Sa Sb. Small populations (n <= d) get a stronger ridge and a warning.
    """
    a = np.asarray(pop_a, dtype=np.float64)
    b = np.asarray(pop_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("populations must be 2-D arrays of shape (n, d)")
    if a.shape[0] < 1 or b.shape[0] < 1:
        raise ValueError("populations must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("populations contain non-finite values")

    d = a.shape[1]
    n1, n2 = a.shape[0], b.shape[0]
    if min(n1, n2) <= d and eps < 1e-3:
        warnings.warn(
            f"sample sizes ({n1}, {n2}) <= feature dim {d}; raising covariance ridge to 1e-3",
            RuntimeWarning,
            stacklevel=2,
        )
        eps = 1e-3

    mu_a, cov_a = _empirical_stats(a)
    mu_b, cov_b = _empirical_stats(b)
    sigma_a = cov_a + eps * np.eye(d)
    sigma_b = cov_b + eps * np.eye(d)

    root_a = psd_sqrt(sigma_a)
    product = root_a @ sigma_b @ root_a
    eigvals = np.linalg.eigvalsh((product + product.T) / 2.0)
    trace_sqrt = float(np.sqrt(np.clip(eigvals, 0.0, None)).sum())

    mean_term = float(((mu_a - mu_b) ** 2).sum())
    trace_term = float(np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * trace_sqrt)
    score = mean_term + trace_term
    if score < -1e-6:
        warnings.warn(f"FID score {score} below numerical floor; clamping to 0", RuntimeWarning, stacklevel=2)
    return FidResult(score=max(score, 0.0), n1=n1, n2=n2, eps=eps, mean_term=mean_term, trace_term=trace_term)


def lcs_length(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> int:
    """Longest common subsequence length, classic O(m*n) dynamic program."""
    m, n = len(ref_tokens), len(hyp_tokens)
    if m == 0 or n == 0:
        return 0
    prev = [0] * (n + 1)
    for i in range(1, m + 1):
        cur = [0] * (n + 1)
        ri = ref_tokens[i - 1]
        for j in range(1, n + 1):
            if ri == hyp_tokens[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = prev[j] if prev[j] >= cur[j - 1] else cur[j - 1]
        prev = cur
    return prev[n]


def rouge_l(reference: str, hypothesis: str) -> float:
    """ROUGE-L F1 on whitespace tokens, scaled to [0, 100]."""
    ref = reference.split()
    hyp = hypothesis.split()
    if ref and ref == hyp:
        return 100.0
    lcs = lcs_length(ref, hyp)
    precision = lcs / len(hyp) if hyp else 0.0
    recall = lcs / len(ref) if ref else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 100.0 * (2.0 * precision * recall / (precision + recall))


def identical_rate(pairs: Sequence[tuple[str, str]]) -> float:
    """Percentage of (previous, next) code pairs whose canonical texts are equal."""
    if not pairs:
        raise ValueError("identical_rate over an empty pair list")
    same = sum(1 for prev, nxt in pairs if prev == nxt)
    return 100.0 * same / len(pairs)


@dataclass(frozen=True)
class TextMetrics:
    rouge_l_f1: float
    identical: bool

    def to_dict(self) -> dict:
        return {"rouge_l_f1": self.rouge_l_f1, "identical": self.identical}


def text_metrics(previous_code: str, next_code: str) -> TextMetrics:
    """Round-over-round text metrics: previous round is the reference, next the hypothesis."""
    return TextMetrics(rouge_l_f1=rouge_l(previous_code, next_code), identical=previous_code == next_code)
