"""Collapsed Gibbs LDA: invariants, alpha optimization, synthetic recovery."""

import numpy as np
import pytest
from scipy.special import gammaln
from scipy.stats import chisquare

from topicbench.corpus import EncodedCorpus
from topicbench.lda import (
    GibbsLda,
    LdaError,
    block_topic_matrix,
    fit_gibbs_lda,
    optimize_alpha,
    sample_synthetic_corpus,
)

from conftest import permutation_match_overlap


def small_corpus(seed=0, n_docs=30, doc_len=20, vocab=15):
    rng = np.random.default_rng(seed)
    return EncodedCorpus(docs=[
        (f"d{i}", rng.integers(0, vocab, size=doc_len).tolist())
        for i in range(n_docs)
    ])


class TestFitInvariants:
    def test_count_conservation(self):
        model = fit_gibbs_lda(small_corpus(), n_topics=3, n_iter=5, seed=1)
        assert model.check_count_conservation()
        assert model.doc_topic_counts_.sum(axis=1).tolist() == [20] * 30

    def test_seed_determinism(self):
        m1 = fit_gibbs_lda(small_corpus(), n_topics=3, n_iter=5, seed=7)
        m2 = fit_gibbs_lda(small_corpus(), n_topics=3, n_iter=5, seed=7)
        assert np.array_equal(m1.assignments_, m2.assignments_)
        assert np.array_equal(m1.topic_word_counts_, m2.topic_word_counts_)

    def test_different_seeds_differ(self):
        m1 = fit_gibbs_lda(small_corpus(), n_topics=3, n_iter=5, seed=1)
        m2 = fit_gibbs_lda(small_corpus(), n_topics=3, n_iter=5, seed=2)
        assert not np.array_equal(m1.assignments_, m2.assignments_)

    def test_alpha_untouched_when_interval_zero(self):
        model = fit_gibbs_lda(small_corpus(), n_topics=3, n_iter=10,
                              alpha=0.25, optimize_interval=0, seed=0)
        assert np.allclose(model.alpha_, 0.25)

    def test_alpha_reestimated_when_interval_positive(self):
        model = fit_gibbs_lda(small_corpus(), n_topics=3, n_iter=10,
                              alpha=0.25, optimize_interval=3, seed=0)
        assert not np.allclose(model.alpha_, 0.25)
        assert np.all(model.alpha_ > 0)

    def test_empty_corpus_rejected(self):
        with pytest.raises(LdaError):
            fit_gibbs_lda(EncodedCorpus(docs=[]), n_topics=2)

    def test_k_exceeding_vocab_rejected(self):
        corpus = EncodedCorpus(docs=[("d", [0, 1, 0, 1, 0])])
        with pytest.raises(LdaError, match="vocabulary"):
            fit_gibbs_lda(corpus, n_topics=10, n_iter=1)

    def test_conditional_normalizes(self):
        """The sampling weights sum to the normalizer used by the sweep."""
        rng = np.random.default_rng(0)
        K, V = 4, 9
        ndk = rng.integers(0, 10, size=(3, K)).astype(np.int32)
        nkw = rng.integers(0, 10, size=(K, V)).astype(np.int32)
        nk = nkw.sum(axis=1)
        alpha = np.full(K, 0.3)
        beta = 0.05
        d, w = 1, 4
        p = (ndk[d] + alpha) * (nkw[:, w] + beta) / (nk + V * beta)
        assert np.sum(p / p.sum()) == pytest.approx(1.0, abs=1e-12)


class TestOptimizeAlpha:
    def test_symmetric_counts_stay_symmetric(self):
        ndk = np.full((10, 4), 5.0)
        out = optimize_alpha(ndk, np.full(4, 0.5))
        assert np.allclose(out, out[0])
        assert np.all(out > 0)

    def test_unused_topic_alpha_shrinks(self):
        ndk = np.zeros((5, 3))
        ndk[:, 0] = 20  # all mass on topic 0
        out = optimize_alpha(ndk, np.full(3, 0.5))
        assert out[1] < 0.5 and out[2] < 0.5
        assert out[0] > out[1]

    def test_fixed_point_matches_likelihood_gradient(self):
        """At a near-fixed point the Dirichlet-multinomial gradient vanishes."""
        rng = np.random.default_rng(4)
        ndk = rng.integers(0, 30, size=(40, 3)).astype(float)
        alpha = np.full(3, 1.0)
        for _ in range(500):
            alpha = optimize_alpha(ndk, alpha)

        def loglik(a):
            a = np.asarray(a)
            return float(
                np.sum(gammaln(a.sum()) - gammaln(ndk.sum(axis=1) + a.sum()))
                + np.sum(gammaln(ndk + a) - gammaln(a))
            )

        eps = 1e-6
        for k in range(3):
            da = np.zeros(3)
            da[k] = eps
            grad = (loglik(alpha + da) - loglik(alpha - da)) / (2 * eps)
            assert abs(grad) < 1e-3

        moved = optimize_alpha(ndk, alpha)
        assert np.abs(moved - alpha).max() < 1e-8


class TestTopWords:
    def build(self, counts):
        counts = np.asarray(counts)
        model = GibbsLda(n_topics=counts.shape[0], beta=0.01)
        model.topic_word_counts_ = counts
        model.topic_counts_ = model.topic_word_counts_.sum(axis=1).astype(np.int64)
        model.vocab_size_ = counts.shape[1]
        return model

    def test_ordering(self):
        model = self.build([[5, 9, 1]])
        topic = model.top_words(0, 3, terms=["x", "y", "z"])
        assert topic.words == ["y", "x", "z"]

    def test_tie_break_by_term_id(self):
        model = self.build([[4, 4, 4]])
        topic = model.top_words(0, 3, terms=["x", "y", "z"])
        assert topic.words == ["x", "y", "z"]

    def test_weights_nonincreasing_and_smoothed(self):
        model = self.build([[5, 9, 1]])
        topic = model.top_words(0, 3)
        assert topic.weights == sorted(topic.weights, reverse=True)
        assert topic.weights[0] == pytest.approx((9 + 0.01) / (15 + 3 * 0.01))

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(5)
        counts = rng.integers(0, 100, size=(1, 50))
        model = self.build(counts)
        topic = model.top_words(0, 10)
        order = sorted(range(50), key=lambda i: (-counts[0][i], i))[:10]
        assert topic.words == [str(i) for i in order]

    def test_n_exceeding_vocab_rejected(self):
        model = self.build([[1, 2, 3]])
        with pytest.raises(LdaError):
            model.top_words(0, 4)


class TestSyntheticCorpus:
    def test_shapes_and_determinism(self):
        c1, tw1, th1 = sample_synthetic_corpus(3, 20, 10, 15, seed=9)
        c2, tw2, th2 = sample_synthetic_corpus(3, 20, 10, 15, seed=9)
        assert [len(ids) for _, ids in c1.docs] == [15] * 10
        assert c1.docs == c2.docs
        assert np.array_equal(tw1, tw2) and np.array_equal(th1, th2)

    def test_token_marginals_match_mixture(self):
        K, V, D, L = 3, 10, 400, 50
        corpus, tw, theta = sample_synthetic_corpus(K, V, D, L, alpha=1.0, seed=2)
        expected = (theta @ tw).mean(axis=0)
        observed = np.zeros(V)
        for _, ids in corpus.docs:
            for t in ids:
                observed[t] += 1
        stat, p = chisquare(observed, expected * observed.sum())
        assert p > 1e-4  # law-of-large-numbers sanity, not a tight bound

    def test_invalid_params_rejected(self):
        with pytest.raises(LdaError):
            sample_synthetic_corpus(0, 10, 10, 10)
        with pytest.raises(LdaError):
            sample_synthetic_corpus(2, 10, 10, 10, alpha=-1)


def test_block_topic_matrix_rows_normalized():
    mat = block_topic_matrix(5, 100)
    assert mat.shape == (5, 100)
    assert np.allclose(mat.sum(axis=1), 1.0)
    # each topic's top-10 words live in its own block
    blocks = np.array_split(np.arange(100), 5)
    for k in range(5):
        top10 = np.argsort(-mat[k])[:10]
        assert set(top10) <= set(blocks[k])


def test_synthetic_recovery_small():
    """Smaller/faster version of the acceptance recovery check."""
    K, V = 4, 60
    tw = block_topic_matrix(K, V, seed=3)
    corpus, _, _ = sample_synthetic_corpus(K, V, 300, 40, alpha=0.1,
                                           topic_word=tw, seed=3)
    model = fit_gibbs_lda(corpus, n_topics=K, n_iter=200, seed=3)
    true_topics = [np.argsort(-tw[k])[:10].tolist() for k in range(K)]
    est_topics = [[int(w) for w in model.top_words(k, 10).words] for k in range(K)]
    assert permutation_match_overlap(true_topics, est_topics) >= 0.7
    assert model.check_count_conservation()


def test_checkpoint_roundtrip(tmp_path):
    model = fit_gibbs_lda(small_corpus(), n_topics=3, n_iter=5,
                          optimize_interval=2, seed=0)
    path = tmp_path / "model.npz"
    model.save(path)
    loaded = GibbsLda.load(path)
    assert loaded.n_topics == 3
    assert np.array_equal(loaded.topic_word_counts_, model.topic_word_counts_)
    assert np.array_equal(loaded.alpha_, model.alpha_)
    assert loaded.check_count_conservation()


def test_estimator_get_params():
    model = GibbsLda(n_topics=7, alpha=0.2)
    params = model.get_params()
    assert params["n_topics"] == 7 and params["alpha"] == 0.2
    model.set_params(n_topics=9)
    assert model.n_topics == 9
