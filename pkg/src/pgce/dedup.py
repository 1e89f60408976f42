"""Near-duplicate removal via TF-IDF cosine similarity, plus diversity entropy.

Vectors are sparse TF-IDF bags of lowercased word tokens with smoothed
inverse document frequency, idf(t) = ln((1 + N) / (1 + df(t))) + 1, so a
term present in every document keeps positive weight. Cosine similarity
normalizes away the term-frequency scale.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import TextSample, word_tokens
from .errors import UsageError


@dataclass
class TermVector:
    """Sparse term-id -> weight map with a cached Euclidean norm."""

    weights: dict[int, float]
    norm: float

    @classmethod
    def from_weights(cls, weights: dict[int, float]) -> "TermVector":
        nonzero = {t: w for t, w in weights.items() if w != 0.0}
        return cls(weights=nonzero, norm=math.sqrt(math.fsum(w * w for w in nonzero.values())))

    @property
    def degenerate(self) -> bool:
        return self.norm == 0.0

    def scaled(self, c: float) -> "TermVector":
        return TermVector.from_weights({t: w * c for t, w in self.weights.items()})


@dataclass
class CategoryDistribution:
    counts: dict[str, int]
    total: int

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "CategoryDistribution":
        return cls(counts=dict(counts), total=sum(counts.values()))

    def proportions(self) -> dict[str, float]:
        return {k: v / self.total for k, v in self.counts.items()}


@dataclass
class DedupReport:
    kept_ids: list[str]
    removed: list[tuple[str, str, float]]  # (removed_id, kept_id, similarity)
    threshold: float

    def removed_records(self) -> list[dict]:
        return [
            {"removed_id": r, "kept_id": k, "similarity": s}
            for r, k, s in self.removed
        ]


def vectorize(samples: list[TextSample]) -> list[TermVector]:
    """TF-IDF vectors over the input corpus vocabulary, one per sample.

    Term ids are assigned lexicographically over the vocabulary, so the
    mapping is deterministic for a given corpus. Samples with zero tokens
    get the degenerate zero vector.
    """
    if not samples:
        raise UsageError("vectorize requires a non-empty sample list")
    docs = [[t.lower() for t in word_tokens(s.text)] for s in samples]
    vocab = sorted({t for doc in docs for t in doc})
    term_id = {t: i for i, t in enumerate(vocab)}
    df = Counter(t for doc in docs for t in set(doc))
    n = len(docs)
    idf = {t: math.log((1 + n) / (1 + df[t])) + 1.0 for t in vocab}
    vectors = []
    for doc in docs:
        tf = Counter(doc)
        vectors.append(
            TermVector.from_weights({term_id[t]: c * idf[t] for t, c in tf.items()})
        )
    return vectors


def cosine_similarity(a: TermVector, b: TermVector) -> float:
    """Dot product over the product of norms, in [-1, 1].

    Degenerate (zero-norm) vectors yield 0. Identical weight maps yield
    exactly 1.0 so that a threshold of 1.0 still catches exact duplicates.
    """
    if a.degenerate or b.degenerate:
        return 0.0
    if a.weights == b.weights:
        return 1.0
    if len(a.weights) > len(b.weights):
        a, b = b, a
    dot = math.fsum(w * b.weights[t] for t, w in a.weights.items() if t in b.weights)
    return max(-1.0, min(1.0, dot / (a.norm * b.norm)))


def deduplicate(samples: list[TextSample], threshold: float) -> DedupReport:
    """Greedy first-wins scan in input order.

    A sample is removed iff its similarity to some already-kept sample is
    >= threshold; the report names the kept sample that triggered each
    removal (the earliest kept match).
    """
    if not 0.0 < threshold <= 1.0:
        raise UsageError(f"dedup threshold must be in (0, 1], got {threshold}")
    vectors = vectorize(samples) if samples else []
    kept_ids: list[str] = []
    kept_idx: list[int] = []
    removed: list[tuple[str, str, float]] = []
    for i, sample in enumerate(samples):
        match = None
        for j in kept_idx:
            sim = cosine_similarity(vectors[i], vectors[j])
            if sim >= threshold:
                match = (sample.id, samples[j].id, sim)
                break
        if match is None:
            kept_ids.append(sample.id)
            kept_idx.append(i)
        else:
            removed.append(match)
    return DedupReport(kept_ids=kept_ids, removed=removed, threshold=threshold)


def category_entropy(dist: CategoryDistribution) -> float:
    """Shannon entropy in bits, H = -sum p_i * log2 p_i, with 0*log0 = 0."""
    if dist.total <= 0:
        raise UsageError("category_entropy requires a positive total")
    return -math.fsum(
        (c / dist.total) * math.log2(c / dist.total)
        for c in dist.counts.values()
        if c > 0
    )


def normalized_entropy(dist: CategoryDistribution) -> float:
    """H / log2(n) over categories with positive count; 0 for a single one."""
    n = sum(1 for c in dist.counts.values() if c > 0)
    if n <= 1:
        return 0.0
    return category_entropy(dist) / math.log2(n)
