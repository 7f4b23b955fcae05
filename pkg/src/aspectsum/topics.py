"""Corpus-level LDA via collapsed Gibbs sampling, plus fold-in inference.

Training assigns a latent topic to every in-vocabulary token and resamples
each assignment from the full conditional

    p(z = t) ∝ (n_tw[t][w] + beta) / (n_t[t] + V*beta) * (n_dt[d][t] + alpha)

Inference freezes the trained counts and folds in a new text's tokens the
same way, then reads off the smoothed posterior (n_t + alpha) / (N + k*alpha),
which is a strictly positive simplex by construction.

The sampler is deliberately plain Python: the topic counts used by this
pipeline are small, and seeded `random.Random` keeps runs bit-reproducible
across platforms.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyVocabulary, InvalidHyperparameter
from .textutil import STOPWORD_LISTS, words


@dataclass(frozen=True)
class VocabularyConfig:
    stopwords: str = "english"  # key into textutil.STOPWORD_LISTS
    min_df: int = 1

    def __post_init__(self):
        if self.stopwords not in STOPWORD_LISTS:
            raise InvalidHyperparameter(f"unknown stopword list {self.stopwords!r}")
        if self.min_df < 1:
            raise InvalidHyperparameter("min_df must be >= 1")


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    config: VocabularyConfig

    @cached_property
    def term_to_index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_index

    def encode(self, text: str) -> list[int]:
        """In-vocabulary token indices of a text, in order."""
        index = self.term_to_index
        return [index[w] for w in words(text) if w in index]


def _doc_text(doc) -> str:
    return doc if isinstance(doc, str) else doc.text


def build_vocabulary(corpus, config: VocabularyConfig | None = None) -> Vocabulary:
    """Lowercased, stopword- and min-df-filtered term set in lexicographic order."""
    if not corpus:
        raise ValueError("corpus is empty")
    config = config or VocabularyConfig()
    stop = STOPWORD_LISTS[config.stopwords]
    doc_freq: dict[str, int] = {}
    for doc in corpus:
        for term in set(words(_doc_text(doc))):
            if term not in stop:
                doc_freq[term] = doc_freq.get(term, 0) + 1
    terms = sorted(t for t, df in doc_freq.items() if df >= config.min_df)
    if not terms:
        raise EmptyVocabulary("vocabulary filtering removed every term")
    return Vocabulary(tuple(terms), config)


class TopicDistribution:
    """A strictly positive probability simplex over the model's topics."""

    __slots__ = ("probs",)

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("topic distribution must be a nonempty vector")
        if not np.all(arr > 0.0):
            raise ValueError("topic distribution entries must be strictly positive")
        if abs(float(arr.sum()) - 1.0) > 1e-9:
            raise ValueError("topic distribution must sum to 1 within 1e-9")
        self.probs = arr

    def __len__(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, k: int) -> "TopicDistribution":
        return cls(np.full(k, 1.0 / k))


def kl_divergence(p: TopicDistribution, q: TopicDistribution) -> float:
    """KL(p || q) = sum_i p_i * ln(p_i / q_i), in nats."""
    if len(p) != len(q):
        raise DimensionMismatch(f"distributions have lengths {len(p)} and {len(q)}")
    value = float(np.sum(p.probs * np.log(p.probs / q.probs)))
    # Nonnegative analytically; guard against float rounding near p == q.
    return value if value > 0.0 else 0.0


@dataclass(eq=False)
class LdaModel:
    k: int
    alpha: float
    beta: float
    seed: int
    vocabulary: Vocabulary
    topic_word_counts: np.ndarray  # k x V, nonnegative ints
    topic_totals: np.ndarray  # length k; row sums of topic_word_counts

    def __post_init__(self):
        if self.topic_word_counts.shape != (self.k, len(self.vocabulary)):
            raise ValueError("topic_word_counts shape does not match (k, V)")
        if np.any(self.topic_word_counts < 0):
            raise ValueError("negative topic-word count")
        if not np.array_equal(self.topic_totals, self.topic_word_counts.sum(axis=1)):
            raise ValueError("topic_totals must equal row sums of topic_word_counts")

    def top_terms(self, topic: int, n: int = 10) -> list[str]:
        """The n highest-count terms of a topic; ties broken lexicographically."""
        row = self.topic_word_counts[topic]
        order = sorted(range(len(row)), key=lambda i: (-int(row[i]), self.vocabulary.terms[i]))
        return [self.vocabulary.terms[i] for i in order[:n]]

    def _count_lists(self) -> tuple[list[list[int]], list[int]]:
        # Python lists are much faster than ndarray scalar indexing in the
        # fold-in loop; cached because the trained model is read-only.
        cached = getattr(self, "_lists", None)
        if cached is None:
            cached = (self.topic_word_counts.tolist(), self.topic_totals.tolist())
            self._lists = cached
        return cached

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "vocabulary": {
                "terms": list(self.vocabulary.terms),
                "stopwords": self.vocabulary.config.stopwords,
                "min_df": self.vocabulary.config.min_df,
            },
            "topic_word_counts": self.topic_word_counts.tolist(),
        }

    def save(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")

    @classmethod
    def from_json(cls, obj: dict) -> "LdaModel":
        vocab = Vocabulary(
            tuple(obj["vocabulary"]["terms"]),
            VocabularyConfig(obj["vocabulary"]["stopwords"], obj["vocabulary"]["min_df"]),
        )
        counts = np.asarray(obj["topic_word_counts"], dtype=np.int64)
        return cls(
            k=obj["k"],
            alpha=obj["alpha"],
            beta=obj["beta"],
            seed=obj["seed"],
            vocabulary=vocab,
            topic_word_counts=counts,
            topic_totals=counts.sum(axis=1),
        )

    @classmethod
    def load(cls, path: Path) -> "LdaModel":
        return cls.from_json(json.loads(path.read_text(encoding="utf-8")))


def _validate_hyperparameters(k: int, alpha: float, beta: float, iterations: int) -> None:
    if k < 2:
        raise InvalidHyperparameter("k must be >= 2")
    if alpha <= 0.0:
        raise InvalidHyperparameter("alpha must be positive")
    if beta <= 0.0:
        raise InvalidHyperparameter("beta must be positive")
    if iterations < 1:
        raise InvalidHyperparameter("iterations must be >= 1")


def train_lda(
    corpus,
    k: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 500,
    seed: int = 0,
    vocabulary: Vocabulary | None = None,
    vocab_config: VocabularyConfig | None = None,
) -> LdaModel:
    """Collapsed Gibbs training over the corpus; deterministic for a fixed seed.

    alpha defaults to 50/k when not given.
    """
    if alpha is None:
        alpha = 50.0 / k
    _validate_hyperparameters(k, alpha, beta, iterations)
    vocab = vocabulary or build_vocabulary(corpus, vocab_config)
    docs = [vocab.encode(_doc_text(doc)) for doc in corpus]
    if not any(docs):
        raise EmptyVocabulary("corpus has no in-vocabulary tokens")

    v_size = len(vocab)
    v_beta = v_size * beta
    rng = random.Random(seed)

    n_tw = [[0] * v_size for _ in range(k)]
    n_t = [0] * k
    doc_topic = [[0] * k for _ in docs]
    assignments = []
    for d_idx, doc in enumerate(docs):
        zs = []
        ndt = doc_topic[d_idx]
        for w in doc:
            t = rng.randrange(k)
            zs.append(t)
            n_tw[t][w] += 1
            n_t[t] += 1
            ndt[t] += 1
        assignments.append(zs)

    cum = [0.0] * k
    uniform = rng.random
    for _ in range(iterations):
        for d_idx, doc in enumerate(docs):
            zs = assignments[d_idx]
            ndt = doc_topic[d_idx]
            for pos, w in enumerate(doc):
                t_old = zs[pos]
                n_tw[t_old][w] -= 1
                n_t[t_old] -= 1
                ndt[t_old] -= 1
                total = 0.0
                for t in range(k):
                    total += (n_tw[t][w] + beta) / (n_t[t] + v_beta) * (ndt[t] + alpha)
                    cum[t] = total
                u = uniform() * total
                t_new = 0
                while cum[t_new] < u:
                    t_new += 1
                zs[pos] = t_new
                n_tw[t_new][w] += 1
                n_t[t_new] += 1
                ndt[t_new] += 1

    counts = np.asarray(n_tw, dtype=np.int64)
    return LdaModel(
        k=k,
        alpha=alpha,
        beta=beta,
        seed=seed,
        vocabulary=vocab,
        topic_word_counts=counts,
        topic_totals=counts.sum(axis=1),
    )


def infer_topics(
    model: LdaModel,
    text: str,
    fold_in_iterations: int = 50,
    seed: int = 0,
) -> TopicDistribution:
    """Fold-in Gibbs with model counts frozen; degenerate input gives uniform."""
    tokens = model.vocabulary.encode(text)
    k = model.k
    if not tokens:
        return TopicDistribution.uniform(k)

    n_tw, n_t = model._count_lists()
    alpha, beta = model.alpha, model.beta
    v_beta = len(model.vocabulary) * beta
    rng = random.Random(seed)

    local = [0] * k
    zs = []
    for _ in tokens:
        t = rng.randrange(k)
        zs.append(t)
        local[t] += 1

    cum = [0.0] * k
    uniform = rng.random
    for _ in range(fold_in_iterations):
        for pos, w in enumerate(tokens):
            t_old = zs[pos]
            local[t_old] -= 1
            total = 0.0
            for t in range(k):
                total += (n_tw[t][w] + beta) / (n_t[t] + v_beta) * (local[t] + alpha)
                cum[t] = total
            u = uniform() * total
            t_new = 0
            while cum[t_new] < u:
                t_new += 1
            zs[pos] = t_new
            local[t_new] += 1

    denom = len(tokens) + k * alpha
    return TopicDistribution([(local[t] + alpha) / denom for t in range(k)])
