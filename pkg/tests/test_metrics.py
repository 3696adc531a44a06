from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from layoutloop.core import serialize_layout_code
from layoutloop.metrics import (
    COUNT_CAP,
    GRID,
    embed,
    embed_population,
    feature_dim,
    fid,
    identical_rate,
    lcs_length,
    psd_sqrt,
    rouge_l,
    text_metrics,
)

from conftest import make_doc, random_valid_doc


def brute_force_lcs(ref: list[str], hyp: list[str]) -> int:
    """Independent oracle: enumerate every subsequence of the shorter sequence."""
    short, long_ = (ref, hyp) if len(ref) <= len(hyp) else (hyp, ref)

    def is_subsequence(sub, seq):
        it = iter(seq)
        return all(tok in it for tok in sub)

    best = 0
    for mask in range(1 << len(short)):
        sub = [short[k] for k in range(len(short)) if mask >> k & 1]
        if len(sub) > best and is_subsequence(sub, long_):
            best = len(sub)
    return best


class TestEmbed:
    def test_empty_layout_zero_vector(self, registry):
        vec = embed(make_doc(), registry)
        assert vec.shape == (feature_dim(registry),)
        assert not vec.any()

    def test_full_cover_hand_computed(self, registry):
        # one BUTTON covering the whole canvas: count channel 1/16, all 16 cells 1
        vec = embed(make_doc(("BUTTON", 0, 0, 360, 800)), registry)
        block = 1 + GRID * GRID
        assert vec[0] == pytest.approx(1 / COUNT_CAP)
        assert (vec[1 : 1 + GRID * GRID] == 1.0).all()
        assert not vec[block:].any()

    def test_half_cover_hand_computed(self, registry):
        # left half: columns 0-1 of the 4x4 grid fully covered, columns 2-3 empty
        vec = embed(make_doc(("BUTTON", 0, 0, 180, 800)), registry)
        grid = vec[1 : 1 + GRID * GRID].reshape(GRID, GRID)
        assert (grid[:, :2] == 1.0).all()
        assert (grid[:, 2:] == 0.0).all()

    def test_translation_sensitive(self, registry):
        a = embed(make_doc(("BUTTON", 0, 0, 90, 200)), registry)
        b = embed(make_doc(("BUTTON", 90, 0, 90, 200)), registry)
        assert (a != b).any()

    def test_overlap_saturates(self, registry):
        # two stacked same-class rects cover the same cell once (union semantics)
        one = embed(make_doc(("BUTTON", 0, 0, 90, 200)), registry)
        two = embed(make_doc(("BUTTON", 0, 0, 90, 200), ("BUTTON", 0, 0, 90, 200)), registry)
        assert (two[1:] == one[1:]).all()
        assert two[0] == pytest.approx(2 / COUNT_CAP)

    def test_range_and_determinism(self, registry):
        rng = np.random.default_rng(9)
        for _ in range(20):
            doc = random_valid_doc(rng)
            vec = embed(doc, registry)
            assert (vec >= 0).all() and (vec <= 1).all()
            assert (vec == embed(doc, registry)).all()


class TestFid:
    def test_identity_is_zero(self):
        rng = np.random.default_rng(0)
        pop = rng.random((64, 12))
        assert fid(pop, pop).score <= 1e-6

    def test_one_dimensional_closed_form(self):
        # empirical mean/var exactly (0,1) and (2,1): score = (0-2)^2 + 0 = 4.0
        a = np.array([[-1.0], [0.0], [1.0]])
        b = np.array([[1.0], [2.0], [3.0]])
        assert fid(a, b).score == pytest.approx(4.0, abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((40, 6)), rng.random((50, 6))
        assert abs(fid(a, b).score - fid(b, a).score) <= 1e-6

    def test_gaussian_oracle(self):
        # independent closed form via scipy.linalg.sqrtm on the true parameters
        from scipy import linalg

        rng = np.random.default_rng(123)
        d = 6
        mu1, mu2 = rng.normal(size=d), rng.normal(size=d)
        m1, m2 = rng.normal(size=(d, d)), rng.normal(size=(d, d))
        s1 = m1 @ m1.T + 0.5 * np.eye(d)
        s2 = m2 @ m2.T + 0.5 * np.eye(d)
        exact = float(
            ((mu1 - mu2) ** 2).sum() + np.trace(s1 + s2 - 2 * linalg.sqrtm(s1 @ s2).real)
        )
        n = 4096
        pop1 = rng.multivariate_normal(mu1, s1, size=n)
        pop2 = rng.multivariate_normal(mu2, s2, size=n)
        result = fid(pop1, pop2)
        assert result.score == pytest.approx(exact, rel=0.05)

    def test_decomposition_and_floor(self):
        rng = np.random.default_rng(2)
        a, b = rng.random((30, 4)), rng.random((30, 4))
        result = fid(a, b)
        assert result.score == pytest.approx(result.mean_term + result.trace_term)
        assert result.score >= 0
        assert (result.n1, result.n2) == (30, 30)

    def test_small_sample_ridge_warns(self):
        rng = np.random.default_rng(3)
        a, b = rng.random((4, 8)), rng.random((4, 8))
        with pytest.warns(RuntimeWarning, match="raising covariance ridge"):
            result = fid(a, b)
        assert result.eps == pytest.approx(1e-3)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            fid(np.zeros((3, 2)), np.zeros((3, 3)))

    def test_non_finite_rejected(self):
        bad = np.array([[np.nan, 0.0]])
        with pytest.raises(ValueError, match="non-finite"):
            fid(bad, np.zeros((2, 2)))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            fid(np.zeros((0, 2)), np.zeros((2, 2)))

    def test_matrix_sqrt_residual(self):
        rng = np.random.default_rng(4)
        for d in (2, 5, 9):
            m = rng.normal(size=(d, d))
            spd = m @ m.T + np.eye(d)
            root = psd_sqrt(spd)
            residual = np.linalg.norm(root @ root - spd) / np.linalg.norm(spd)
            assert residual <= 1e-6


class TestRougeL:
    def test_identity_is_100(self):
        assert rouge_l("CANVAS 360 800", "CANVAS 360 800") == 100.0

    def test_hand_derived_example(self):
        # LCS("a b c d", "a c d e") = 3 -> P = R = 0.75 -> F1 = 75.0 (brute-force verified)
        assert brute_force_lcs("a b c d".split(), "a c d e".split()) == 3
        assert rouge_l("a b c d", "a c d e") == pytest.approx(75.0)

    def test_disjoint_is_zero(self):
        assert rouge_l("a b c", "x y z") == 0.0

    def test_empty_sides(self):
        assert rouge_l("", "") == 0.0
        assert rouge_l("a", "") == 0.0
        assert rouge_l("", "a") == 0.0

    @given(
        st.lists(st.sampled_from("abcd"), max_size=10),
        st.lists(st.sampled_from("abcd"), max_size=10),
    )
    @settings(max_examples=250, deadline=None)
    def test_dp_matches_brute_force(self, ref, hyp):
        assert lcs_length(ref, hyp) == brute_force_lcs(ref, hyp)


class TestIdenticalRate:
    def test_all_identical(self):
        assert identical_rate([("a", "a"), ("b", "b")]) == 100.0

    def test_half(self):
        pairs = [("a", "a"), ("b", "b"), ("c", "x"), ("d", "y")]
        assert identical_rate(pairs) == 50.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            identical_rate([])

    def test_identical_implies_rouge_100(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            code = serialize_layout_code(random_valid_doc(rng))
            tm = text_metrics(code, code)
            assert tm.identical and tm.rouge_l_f1 == 100.0


def test_embed_population_shape(registry):
    rng = np.random.default_rng(12)
    docs = [random_valid_doc(rng) for _ in range(5)]
    pop = embed_population(docs, registry)
    assert pop.shape == (5, feature_dim(registry))
