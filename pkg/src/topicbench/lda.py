"""Collapsed Gibbs sampler for LDA with periodic asymmetric-alpha re-estimation.

One chain is strictly sequential and deterministic for a fixed seed; the
token-level sweep is JIT-compiled. Alpha is re-estimated with Minka's
fixed-point update on the Dirichlet-multinomial likelihood every
``optimize_interval`` sweeps (after a burn-in of one interval).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from numba import njit
from scipy.special import psi
from sklearn.base import BaseEstimator

from .cooc import Topic
from .corpus import EncodedCorpus

ALPHA_FLOOR = 1e-8
CHECKPOINT_VERSION = 1


class LdaError(ValueError):
    pass


@njit(cache=True)
def _gibbs_sweep(tokens, doc_of, z, ndk, nkw, nk, alpha, beta, uniforms):
    K = nkw.shape[0]
    V = nkw.shape[1]
    vbeta = V * beta
    probs = np.empty(K)
    for t in range(tokens.shape[0]):
        w = tokens[t]
        d = doc_of[t]
        k_old = z[t]
        ndk[d, k_old] -= 1
        nkw[k_old, w] -= 1
        nk[k_old] -= 1
        total = 0.0
        for k in range(K):
            p = (ndk[d, k] + alpha[k]) * (nkw[k, w] + beta) / (nk[k] + vbeta)
            total += p
            probs[k] = total
        u = uniforms[t] * total
        k_new = 0
        while k_new < K - 1 and probs[k_new] < u:
            k_new += 1
        z[t] = k_new
        ndk[d, k_new] += 1
        nkw[k_new, w] += 1
        nk[k_new] += 1


def optimize_alpha(
    doc_topic_counts: np.ndarray,
    alpha: np.ndarray,
    n_iter: int = 1,
) -> np.ndarray:
    """Minka fixed-point update of asymmetric alpha given document-topic counts.

    alpha_k <- alpha_k * sum_d [psi(n_dk + alpha_k) - psi(alpha_k)]
                       / sum_d [psi(n_d + sum(alpha)) - psi(sum(alpha))]
    Non-finite or non-positive updates are clamped to a small floor.
    """
    ndk = np.asarray(doc_topic_counts, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64).copy()
    n_d = ndk.sum(axis=1)
    D = ndk.shape[0]
    for _ in range(n_iter):
        a0 = alpha.sum()
        denom = np.sum(psi(n_d + a0)) - D * psi(a0)
        if denom <= 0:
            break
        numer = psi(ndk + alpha).sum(axis=0) - D * psi(alpha)
        new = alpha * numer / denom
        bad = ~np.isfinite(new) | (new <= 0)
        new[bad] = ALPHA_FLOOR
        alpha = new
    return alpha


class GibbsLda(BaseEstimator):
    """Collapsed Gibbs LDA, sklearn-style.

    Parameters mirror the classical baseline configuration: `alpha` is the
    initial symmetric topic-density parameter (re-estimated asymmetrically
    when `optimize_interval` > 0), `beta` the fixed word-density parameter.
    """

    def __init__(
        self,
        n_topics: int = 50,
        alpha: float = 0.1,
        beta: float = 0.01,
        n_iter: int = 1000,
        optimize_interval: int = 0,
        seed: int = 0,
    ):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.n_iter = n_iter
        self.optimize_interval = optimize_interval
        self.seed = seed

    def fit(self, corpus: EncodedCorpus, y=None):
        if len(corpus) == 0:
            raise LdaError("empty corpus")
        if self.n_topics < 2:
            raise LdaError("n_topics must be >= 2")
        if self.n_iter < 1:
            raise LdaError("n_iter must be >= 1")
        if self.optimize_interval < 0:
            raise LdaError("optimize_interval must be >= 0")
        V = max(max(ids) for _, ids in corpus.docs if ids) + 1
        if self.n_topics > V:
            raise LdaError(f"n_topics={self.n_topics} exceeds vocabulary size {V}")

        tokens = np.concatenate([np.asarray(ids, dtype=np.int32) for _, ids in corpus.docs])
        doc_of = np.concatenate(
            [np.full(len(ids), d, dtype=np.int32) for d, (_, ids) in enumerate(corpus.docs)]
        )
        D = len(corpus.docs)
        K = self.n_topics
        rng = np.random.default_rng(self.seed)
        z = rng.integers(0, K, size=tokens.shape[0]).astype(np.int32)
        ndk = np.zeros((D, K), dtype=np.int32)
        nkw = np.zeros((K, V), dtype=np.int32)
        nk = np.zeros(K, dtype=np.int64)
        np.add.at(ndk, (doc_of, z), 1)
        np.add.at(nkw, (z, tokens), 1)
        np.add.at(nk, z, 1)

        alpha = np.full(K, float(self.alpha))
        interval = self.optimize_interval
        for sweep in range(1, self.n_iter + 1):
            uniforms = rng.random(tokens.shape[0])
            _gibbs_sweep(tokens, doc_of, z, ndk, nkw, nk, alpha, float(self.beta), uniforms)
            # burn-in of one interval before the first re-estimation
            if interval > 0 and sweep % interval == 0 and sweep > interval:
                alpha = optimize_alpha(ndk, alpha)

        self.vocab_size_ = V
        self.alpha_ = alpha
        self.assignments_ = z
        self.doc_topic_counts_ = ndk
        self.topic_word_counts_ = nkw
        self.topic_counts_ = nk
        self.doc_ids_ = [doc_id for doc_id, _ in corpus.docs]
        return self

    def check_count_conservation(self) -> bool:
        total = int(self.topic_counts_.sum())
        return (
            int(self.doc_topic_counts_.sum()) == total
            and int(self.topic_word_counts_.sum()) == total
            and total == len(self.assignments_)
        )

    def top_words(self, k: int, n: int, terms: Optional[Sequence[str]] = None) -> Topic:
        """Top-n words of topic k; ties broken by ascending term id."""
        if not 0 <= k < self.n_topics:
            raise LdaError(f"topic index {k} out of range")
        counts = self.topic_word_counts_[k]
        V = counts.shape[0]
        if n > V:
            raise LdaError(f"n={n} exceeds vocabulary size {V}")
        # stable sort on (-count, id): lexsort's last key dominates
        order = np.lexsort((np.arange(V), -counts))[:n]
        denom = self.topic_counts_[k] + V * self.beta
        weights = [(float(counts[i]) + self.beta) / denom for i in order]
        words = [terms[i] if terms is not None else str(i) for i in order]
        return Topic(words=words, weights=weights, source_tag=f"topic_{k}")

    def topics(self, n: int, terms: Optional[Sequence[str]] = None) -> list[Topic]:
        return [self.top_words(k, n, terms) for k in range(self.n_topics)]

    def save(self, path) -> None:
        np.savez_compressed(
            path,
            version=CHECKPOINT_VERSION,
            n_topics=self.n_topics,
            beta=self.beta,
            seed=self.seed,
            alpha=self.alpha_,
            topic_word_counts=self.topic_word_counts_,
            doc_topic_counts=self.doc_topic_counts_,
            assignments=self.assignments_,
        )

    @classmethod
    def load(cls, path) -> "GibbsLda":
        data = np.load(path, allow_pickle=False)
        if int(data["version"]) != CHECKPOINT_VERSION:
            raise LdaError(f"unsupported checkpoint version {data['version']}")
        model = cls(
            n_topics=int(data["n_topics"]),
            beta=float(data["beta"]),
            seed=int(data["seed"]),
        )
        model.alpha_ = data["alpha"]
        model.topic_word_counts_ = data["topic_word_counts"]
        model.doc_topic_counts_ = data["doc_topic_counts"]
        model.assignments_ = data["assignments"]
        model.topic_counts_ = model.topic_word_counts_.sum(axis=1).astype(np.int64)
        model.vocab_size_ = model.topic_word_counts_.shape[1]
        return model


def fit_gibbs_lda(
    corpus: EncodedCorpus,
    n_topics: int,
    alpha: float = 0.1,
    beta: float = 0.01,
    n_iter: int = 1000,
    optimize_interval: int = 0,
    seed: int = 0,
) -> GibbsLda:
    return GibbsLda(
        n_topics=n_topics,
        alpha=alpha,
        beta=beta,
        n_iter=n_iter,
        optimize_interval=optimize_interval,
        seed=seed,
    ).fit(corpus)


def sample_synthetic_corpus(
    n_topics: int,
    vocab_size: int,
    n_docs: int,
    doc_len: int,
    alpha: float = 0.1,
    beta: float = 0.05,
    seed: int = 0,
    topic_word: Optional[np.ndarray] = None,
) -> tuple[EncodedCorpus, np.ndarray, np.ndarray]:
    """Draw a corpus from the LDA generative story; returns ground truth.

    Topics ~ Dirichlet(beta) over the vocabulary (or a caller-supplied
    (K, V) distribution matrix), document mixtures ~ Dirichlet(alpha).
    Returns (corpus, topic_word_distributions, doc_topic_mixtures).
    """
    if min(n_topics, vocab_size, n_docs, doc_len) < 1 or alpha <= 0 or beta <= 0:
        raise LdaError("all synthetic-corpus parameters must be positive")
    rng = np.random.default_rng(seed)
    if topic_word is None:
        topic_word = rng.dirichlet(np.full(vocab_size, beta), size=n_topics)
    else:
        topic_word = np.asarray(topic_word, dtype=np.float64)
        if topic_word.shape != (n_topics, vocab_size):
            raise LdaError("topic_word must have shape (n_topics, vocab_size)")
    theta = rng.dirichlet(np.full(n_topics, alpha), size=n_docs)
    docs = []
    for d in range(n_docs):
        zs = rng.choice(n_topics, size=doc_len, p=theta[d])
        ids = np.empty(doc_len, dtype=np.int64)
        for k in np.unique(zs):
            mask = zs == k
            ids[mask] = rng.choice(vocab_size, size=int(mask.sum()), p=topic_word[k])
        docs.append((f"doc{d}", ids.tolist()))
    return EncodedCorpus(docs=docs, vocab_ref="synthetic"), topic_word, theta


def block_topic_matrix(
    n_topics: int,
    vocab_size: int,
    within_mass: float = 0.98,
    concentration: float = 1.0,
    seed: int = 0,
) -> np.ndarray:
    """Near-disjoint topics: each concentrates `within_mass` on its own block.

    Within-block word probabilities are Dirichlet-distributed so every topic
    has an unambiguous word ranking.
    """
    rng = np.random.default_rng(seed)
    blocks = np.array_split(np.arange(vocab_size), n_topics)
    mat = np.full((n_topics, vocab_size), (1 - within_mass) / vocab_size)
    for k, block in enumerate(blocks):
        mat[k, block] += within_mass * rng.dirichlet(np.full(len(block), concentration))
    return mat / mat.sum(axis=1, keepdims=True)
