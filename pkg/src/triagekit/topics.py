"""Topic modeling for corpus partitioning.

A plain collapsed Gibbs sampler for latent Dirichlet allocation with
symmetric priors.  Its job here is not interpretability but partitioning:
splitting the corpus into topics small enough that per-topic density
clustering stays cheap.

The sampler uses its own xorshift generator so runs are bit-reproducible
for a given seed regardless of platform or library version.
"""

from collections import namedtuple
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.special import gammaln

__all__ = ["TopicModel", "TopicAssignment", "fit_lda", "assign_topic",
           "doc_topic_distribution"]

TopicAssignment = namedtuple("TopicAssignment", ["topic", "fallback"])

_U64 = np.uint64
_MASK = 0xFFFFFFFFFFFFFFFF


def _seed_state(seed):
    """SplitMix64 step turning any integer seed into a nonzero state."""
    z = (seed + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return np.array([z or 0x9E3779B97F4A7C15], dtype=np.uint64)


@numba.njit(cache=True)
def _rand01(state):
    # xorshift64*: fast, tiny state, uniform in [0, 1)
    s = state[0]
    s ^= s >> _U64(12)
    s ^= s << _U64(25)
    s ^= s >> _U64(27)
    state[0] = s
    return float((s * _U64(0x2545F4914F6CDD1D)) >> _U64(11)) / 9007199254740992.0


@numba.njit(cache=True)
def _gibbs_init(doc_ids, word_ids, z, n_dk, n_kw, n_k, state):
    k_topics = n_k.shape[0]
    for t in range(doc_ids.shape[0]):
        k = int(_rand01(state) * k_topics)
        if k >= k_topics:
            k = k_topics - 1
        z[t] = k
        n_dk[doc_ids[t], k] += 1
        n_kw[k, word_ids[t]] += 1
        n_k[k] += 1


@numba.njit(cache=True)
def _gibbs_sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, beta, state,
                 p_buf):
    k_topics = n_k.shape[0]
    v_beta = n_kw.shape[1] * beta
    for t in range(doc_ids.shape[0]):
        d = doc_ids[t]
        w = word_ids[t]
        old = z[t]
        n_dk[d, old] -= 1
        n_kw[old, w] -= 1
        n_k[old] -= 1
        total = 0.0
        for k in range(k_topics):
            p = (n_kw[k, w] + beta) / (n_k[k] + v_beta) * (n_dk[d, k] + alpha)
            p_buf[k] = p
            total += p
        u = _rand01(state) * total
        acc = 0.0
        new = k_topics - 1
        for k in range(k_topics):
            acc += p_buf[k]
            if u < acc:
                new = k
                break
        z[t] = new
        n_dk[d, new] += 1
        n_kw[new, w] += 1
        n_k[new] += 1


@dataclass
class TopicModel:
    """Fitted LDA state sufficient for assigning topics to new documents."""

    n_topics: int
    alpha: float
    beta: float
    tokens: tuple
    word_topic_counts: np.ndarray  # (V, K)
    topic_totals: np.ndarray       # (K,)
    log_likelihood: list = field(default_factory=list, repr=False)
    _token_index: dict = field(default=None, repr=False, compare=False)

    def token_index(self):
        if self._token_index is None:
            self._token_index = {t: i for i, t in enumerate(self.tokens)}
        return self._token_index


def _log_likelihood(n_dk, n_kw, n_k, n_d, alpha, beta):
    """Joint log p(w, z | alpha, beta) with the z's integrated counts."""
    k_topics, vocab = n_kw.shape
    n_docs = n_dk.shape[0]
    word_side = k_topics * (gammaln(vocab * beta) - vocab * gammaln(beta))
    nz = n_kw[n_kw > 0]
    word_side += gammaln(nz + beta).sum()
    word_side += (n_kw.size - nz.size) * gammaln(beta)
    word_side -= gammaln(n_k + vocab * beta).sum()
    doc_side = n_docs * (gammaln(k_topics * alpha) - k_topics * gammaln(alpha))
    nz = n_dk[n_dk > 0]
    doc_side += gammaln(nz + alpha).sum()
    doc_side += (n_dk.size - nz.size) * gammaln(alpha)
    doc_side -= gammaln(n_d + k_topics * alpha).sum()
    return float(word_side + doc_side)


def fit_lda(docs_tokens, n_topics, alpha=None, beta=0.01, iterations=300,
            seed=0):
    """Fit LDA by collapsed Gibbs sampling.

    Parameters
    ----------
    docs_tokens : sequence of token sequences (one per document)
    n_topics : int
    alpha : float, optional
        Symmetric document-topic prior; defaults to 50 / n_topics.
    beta : float
        Symmetric topic-word prior.
    iterations : int
        Number of full Gibbs sweeps.
    seed : int
        Fixes the sampler trajectory exactly.

    Returns a :class:`TopicModel`; ``model.log_likelihood[i]`` is the joint
    log-likelihood after sweep ``i``.
    """
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if alpha is None:
        alpha = 50.0 / n_topics
    vocab = sorted({tok for doc in docs_tokens for tok in doc})
    if not vocab:
        raise ValueError("empty vocabulary: no tokens in any document")
    token_index = {t: i for i, t in enumerate(vocab)}

    doc_ids, word_ids = [], []
    for d, doc in enumerate(docs_tokens):
        for tok in doc:
            doc_ids.append(d)
            word_ids.append(token_index[tok])
    doc_ids = np.asarray(doc_ids, dtype=np.int32)
    word_ids = np.asarray(word_ids, dtype=np.int32)

    n_docs = len(docs_tokens)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int32)
    n_kw = np.zeros((n_topics, len(vocab)), dtype=np.int32)
    n_k = np.zeros(n_topics, dtype=np.int64)
    n_d = np.bincount(doc_ids, minlength=n_docs).astype(np.int64)
    z = np.zeros(len(doc_ids), dtype=np.int32)
    state = _seed_state(seed)
    p_buf = np.empty(n_topics, dtype=np.float64)

    _gibbs_init(doc_ids, word_ids, z, n_dk, n_kw, n_k, state)
    lls = []
    for _ in range(iterations):
        _gibbs_sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, beta,
                     state, p_buf)
        lls.append(_log_likelihood(n_dk, n_kw, n_k, n_d, alpha, beta))

    return TopicModel(
        n_topics=n_topics,
        alpha=alpha,
        beta=beta,
        tokens=tuple(vocab),
        word_topic_counts=n_kw.T.astype(np.int64).copy(),
        topic_totals=n_k.copy(),
        log_likelihood=lls,
    )


def doc_topic_distribution(model, tokens, rounds=20):
    """Infer a document's topic distribution by fixed-point iteration.

    Out-of-vocabulary tokens are ignored.  Returns (theta, n_known) where
    ``n_known`` counts the tokens that actually informed the estimate.
    """
    index = model.token_index()
    rows = [index[t] for t in tokens if t in index]
    k = model.n_topics
    if not rows:
        return np.full(k, 1.0 / k), 0
    # phi[i, k]: likelihood of the i-th known token under each topic.
    counts = model.word_topic_counts[rows, :]
    phi = (counts + model.beta) / (model.topic_totals + len(model.tokens) * model.beta)
    theta = np.full(k, 1.0 / k)
    for _ in range(rounds):
        r = phi * theta
        r /= r.sum(axis=1, keepdims=True)
        theta = model.alpha + r.sum(axis=0)
        theta /= theta.sum()
    return theta, len(rows)


def assign_topic(model, tokens):
    """Most likely topic for a token sequence.

    Documents with no in-vocabulary tokens fall back to the globally
    largest topic and come back flagged.
    """
    theta, n_known = doc_topic_distribution(model, tokens)
    if n_known == 0:
        return TopicAssignment(int(np.argmax(model.topic_totals)), True)
    return TopicAssignment(int(np.argmax(theta)), False)
