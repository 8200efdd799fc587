"""Shared fixtures and independent oracle implementations.

Oracles here are deliberately naive re-implementations (brute force, no
sharing of code paths with the package) used to freeze expected values.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from topicbench.corpus import EncodedCorpus


def naive_window_counts(docs, window_size):
    """Brute-force boolean sliding-window counter.

    Returns (total_windows, {term: count}, {(i, j) sorted tuple: count}).
    Independent of the package implementation: explicit window list, set
    membership, tuple keys.
    """
    total = 0
    word = {}
    pair = {}
    for ids in docs:
        if window_size == 0 or len(ids) <= window_size:
            windows = [list(ids)]
        else:
            windows = []
            start = 0
            while start + window_size <= len(ids):
                windows.append(ids[start : start + window_size])
                start += 1
        for win in windows:
            total += 1
            present = set(win)
            for w in present:
                word[w] = word.get(w, 0) + 1
            present = sorted(present)
            for a in range(len(present)):
                for b in range(a + 1, len(present)):
                    key = (present[a], present[b])
                    pair[key] = pair.get(key, 0) + 1
    return total, word, pair


def oracle_npmi(p_i, p_j, p_ij, epsilon=1e-12):
    """Hand formula for a single pair's NPMI with the documented smoothing."""
    p = p_ij + epsilon
    return math.log(p / (p_i * p_j)) / -math.log(p)


def random_encoded_corpus(rng, max_docs=1000, max_len=40, vocab=30):
    n_docs = int(rng.integers(1, max_docs + 1))
    docs = []
    for d in range(n_docs):
        length = int(rng.integers(1, max_len + 1))
        ids = rng.integers(0, vocab, size=length).tolist()
        docs.append((f"d{d}", [int(i) for i in ids]))
    return EncodedCorpus(docs=docs)


@pytest.fixture
def toy_corpus():
    """docs ["a b c", "a b", "c d"] encoded with a=0, b=1, c=2, d=3."""
    return EncodedCorpus(
        docs=[("d0", [0, 1, 2]), ("d1", [0, 1]), ("d2", [2, 3])]
    )


@pytest.fixture
def toy_terms():
    return ["a", "b", "c", "d"]


def exact_u_pvalue_oracle(x, y, alternative):
    """Independent exact U-test oracle: enumerate all group assignments."""
    from itertools import combinations

    pooled = list(x) + list(y)
    n1 = len(x)
    # mid-ranks computed by hand
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and pooled[order[j]] == pooled[order[i]]:
            j += 1
        avg = (i + 1 + j) / 2  # mean of ranks i+1 .. j
        for k in range(i, j):
            ranks[order[k]] = avg
        i = j
    u_obs = sum(ranks[:n1]) - n1 * (n1 + 1) / 2
    ge = le = total = 0
    for combo in combinations(range(len(pooled)), n1):
        u = sum(ranks[i] for i in combo) - n1 * (n1 + 1) / 2
        total += 1
        if u >= u_obs - 1e-9:
            ge += 1
        if u <= u_obs + 1e-9:
            le += 1
    return (ge if alternative == "greater" else le) / total


def permutation_match_overlap(true_topics, est_topics, top_n=10):
    """Best average top-n overlap over all K! topic permutations (small K)."""
    from itertools import permutations

    true_sets = [set(t[:top_n]) for t in true_topics]
    est_sets = [set(t[:top_n]) for t in est_topics]
    K = len(true_sets)
    best = 0.0
    for perm in permutations(range(K)):
        score = np.mean(
            [len(true_sets[k] & est_sets[perm[k]]) / top_n for k in range(K)]
        )
        best = max(best, float(score))
    return best
