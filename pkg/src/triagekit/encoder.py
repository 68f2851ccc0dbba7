"""Text-to-embedding encoders.

The baseline encoder is a deterministic hashed TF-IDF: unigram and bigram
features are signed-hashed into a fixed number of buckets, weighted by
inverse document frequency, and L2-normalized.  It needs no vocabulary
file and produces unit-norm vectors of a configurable dimension, which is
all the downstream classifiers and the similarity index depend on.

``remote_encode`` is the drop-in slot for a transformer sentence-encoder
service: any HTTP endpoint speaking the ``{"texts": [...]}`` ->
``{"vectors": [[...]]}`` contract can replace the baseline.
"""

import hashlib
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import requests

from .corpus import corpus_fingerprint, tokenize

__all__ = [
    "EncoderModel",
    "RemoteEncoderError",
    "RemoteEncoderTimeout",
    "RemoteEncoderStatusError",
    "DimensionMismatchError",
    "fit_encoder",
    "encode",
    "encode_tokens",
    "encode_corpus",
    "is_empty_embedding",
    "remote_encode",
]

MIN_DIMENSION = 16


class RemoteEncoderError(Exception):
    """Base class for remote-encoder client failures."""


class RemoteEncoderTimeout(RemoteEncoderError):
    pass


class RemoteEncoderStatusError(RemoteEncoderError):
    def __init__(self, status, body=""):
        super().__init__(f"remote encoder returned status {status}: {body[:200]}")
        self.status = status


class DimensionMismatchError(RemoteEncoderError):
    pass


@dataclass(frozen=True)
class EncoderModel:
    """Fitted hashed TF-IDF encoder.

    ``idf[b]`` is ln(1 + N/df_b) for every bucket ``b`` that occurred in the
    fitting corpus and 0 elsewhere; ``fitted_on`` fingerprints that corpus.
    """

    dimension: int
    hash_seed: int
    idf: np.ndarray
    fitted_on: str
    n_docs: int


@lru_cache(maxsize=1 << 20)
def _feature_hash(feature, seed):
    """64-bit keyed hash of a feature string; stable across platforms."""
    key = struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF)
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


def _features(tokens):
    feats = list(tokens)
    feats.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return feats


def _bucket_sign(feature, seed, dimension):
    h = _feature_hash(feature, seed)
    # Top bit carries the sign so it stays independent of the bucket.
    return h % dimension, 1.0 if h < 0x8000000000000000 else -1.0


def fit_encoder(corpus, dimension=512, hash_seed=1):
    """Fit bucket IDF weights on a cleaned corpus.

    Parameters
    ----------
    corpus : sequence of CleanTicket
    dimension : int
        Number of hash buckets (embedding dimension), >= 16.
    hash_seed : int
        Seed for the feature hash; changing it re-randomizes collisions.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot fit an encoder on an empty corpus")
    if dimension < MIN_DIMENSION:
        raise ValueError(f"dimension must be >= {MIN_DIMENSION}")
    df = np.zeros(dimension, dtype=np.int64)
    for ticket in corpus:
        buckets = {
            _bucket_sign(f, hash_seed, dimension)[0]
            for f in _features(ticket.normalized_tokens)
        }
        if buckets:
            df[list(buckets)] += 1
    n = len(corpus)
    idf = np.where(df > 0, np.log1p(n / np.maximum(df, 1)), 0.0)
    return EncoderModel(
        dimension=dimension,
        hash_seed=hash_seed,
        idf=idf,
        fitted_on=corpus_fingerprint(corpus),
        n_docs=n,
    )


def encode_tokens(model, tokens):
    """Embed an already-normalized token sequence (see :func:`encode`)."""
    v = np.zeros(model.dimension)
    for f in _features(tuple(tokens)):
        b, s = _bucket_sign(f, model.hash_seed, model.dimension)
        v[b] += s
    v *= model.idf
    norm = np.linalg.norm(v)
    if norm > 0:
        v /= norm
    else:
        v[:] = 0.0
    return v


def encode(model, text):
    """Embed free text as a unit-norm vector.

    Empty or all-punctuation text (and text whose every feature hashes to
    an unseen bucket) encodes to the all-zero vector rather than raising;
    callers detect that with :func:`is_empty_embedding` and degrade.
    """
    return encode_tokens(model, tokenize(text))


def encode_corpus(model, tickets):
    """Embed a cleaned corpus into an (n, dimension) matrix."""
    out = np.zeros((len(tickets), model.dimension))
    for i, t in enumerate(tickets):
        out[i] = encode_tokens(model, t.normalized_tokens)
    return out


def is_empty_embedding(vector):
    return not np.any(vector)


def remote_encode(endpoint, texts, timeout_ms=5000):
    """Fetch embeddings for ``texts`` from an HTTP encoder service.

    POSTs ``{"texts": [...]}`` and expects a 200 response of
    ``{"vectors": [[...], ...]}`` with one vector per input text, all of the
    same dimension.  Vectors are re-normalized locally (all-zero vectors
    stay zero).

    Raises
    ------
    RemoteEncoderTimeout, RemoteEncoderStatusError, DimensionMismatchError,
    RemoteEncoderError
        for timeouts, non-2xx statuses, ragged vector dimensions, and
        protocol violations respectively.
    """
    texts = list(texts)
    try:
        resp = requests.post(
            endpoint, json={"texts": texts}, timeout=timeout_ms / 1000.0
        )
    except requests.Timeout as exc:
        raise RemoteEncoderTimeout(
            f"remote encoder did not answer within {timeout_ms} ms"
        ) from exc
    except requests.RequestException as exc:
        raise RemoteEncoderError(f"remote encoder request failed: {exc}") from exc
    if not 200 <= resp.status_code < 300:
        raise RemoteEncoderStatusError(resp.status_code, resp.text)
    try:
        vectors = resp.json()["vectors"]
    except (ValueError, KeyError) as exc:
        raise RemoteEncoderError(f"malformed remote encoder response: {exc}") from exc
    if len(vectors) != len(texts):
        raise RemoteEncoderError(
            f"expected {len(texts)} vectors, got {len(vectors)}"
        )
    if not vectors:
        return np.zeros((0, 0))
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise DimensionMismatchError(
            f"vectors have mixed dimensions: {sorted(dims)}"
        )
    out = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    np.divide(out, norms, out=out, where=norms > 0)
    return out
