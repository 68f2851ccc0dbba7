"""Multinomial logistic classification head over embeddings.

One shared trainable head serves group, resolver, and resolver-list
prediction; only the label vocabulary and the training embeddings differ.
Training is plain mini-batch gradient descent on cross-entropy with L2
regularization, a decaying step size, and early stopping on a held-out
validation slice.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LabelVocabulary",
    "SoftmaxHead",
    "ProbVector",
    "TrainParams",
    "DivergenceError",
    "train_head",
    "predict_proba",
    "predict_proba_matrix",
    "top_k",
]


class DivergenceError(Exception):
    """Training loss became NaN; carries the offending epoch."""

    def __init__(self, epoch):
        super().__init__(f"training diverged (NaN loss) at epoch {epoch}")
        self.epoch = epoch


class LabelVocabulary:
    """Immutable bijection between label strings and dense indices."""

    __slots__ = ("labels", "_index")

    def __init__(self, labels):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels in vocabulary")
        self.labels = labels
        self._index = {label: i for i, label in enumerate(labels)}

    @classmethod
    def from_labels(cls, labels):
        """Build a vocabulary from observed labels, sorted for stability."""
        return cls(sorted(set(labels)))

    def index_of(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in vocabulary") from None

    def __contains__(self, label):
        return label in self._index

    def __getitem__(self, i):
        return self.labels[i]

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other):
        return isinstance(other, LabelVocabulary) and self.labels == other.labels

    def __repr__(self):
        return f"LabelVocabulary({len(self.labels)} labels)"


@dataclass(frozen=True)
class ProbVector:
    """A probability vector indexed by a label vocabulary.

    Full distributions sum to 1 (+/- 1e-6).  Marginalized partial
    distributions may sum to less and must be flagged ``partial``.
    """

    vocabulary: LabelVocabulary
    values: np.ndarray
    partial: bool = False

    def validate(self, tol=1e-6):
        v = self.values
        if v.shape != (len(self.vocabulary),):
            raise ValueError("probability vector length != vocabulary size")
        if np.any(v < -tol) or np.any(v > 1 + tol):
            raise ValueError("probabilities outside [0, 1]")
        total = float(v.sum())
        if self.partial:
            if total > 1 + tol:
                raise ValueError(f"partial distribution sums to {total} > 1")
        elif abs(total - 1.0) > tol:
            raise ValueError(f"distribution sums to {total}, expected 1")
        return self

    def get(self, label):
        return float(self.values[self.vocabulary.index_of(label)])


@dataclass(frozen=True)
class TrainParams:
    """Hyperparameters for :func:`train_head`."""

    lr: float = 1.0
    batch: int = 128
    epochs: int = 60
    l2: float = 1e-4
    patience: int = 5
    lr_decay: float = 0.1
    val_fraction: float = 0.1


@dataclass
class SoftmaxHead:
    """Trained softmax classification layer: probs = softmax(W x + b)."""

    weights: np.ndarray
    bias: np.ndarray
    vocabulary: LabelVocabulary
    l2: float = 0.0
    history: dict = field(default_factory=dict, repr=False)


def _softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _loss_and_grad(weights, bias, x, y, l2):
    """Mean cross-entropy + (l2/2)||W||^2 and its analytic gradient.

    Kept as a standalone function so tests can check the gradient against
    central finite differences.
    """
    n = x.shape[0]
    probs = _softmax(x @ weights.T + bias)
    nll = -np.log(np.maximum(probs[np.arange(n), y], 1e-300))
    loss = nll.mean() + 0.5 * l2 * float((weights * weights).sum())
    delta = probs
    delta[np.arange(n), y] -= 1.0
    grad_w = delta.T @ x / n + l2 * weights
    grad_b = delta.mean(axis=0)
    return loss, grad_w, grad_b


def train_head(embeddings, labels, params=None, seed=0, validation=None,
               vocabulary=None):
    """Train a softmax head on (embedding, label) pairs.

    Parameters
    ----------
    embeddings : (n, d) array or sequence of vectors
    labels : sequence of n label strings (>= 2 distinct values required)
    params : TrainParams, optional
    seed : int
        Controls weight init and batch shuffling; identical inputs and seed
        give identical weights.
    validation : (embeddings, labels) pair, optional
        Held-out slice for early stopping.  When absent, the trailing
        ``val_fraction`` of a seed-shuffled copy of the data is carved off.
    vocabulary : LabelVocabulary, optional
        Class space; defaults to the sorted distinct training labels.
        Useful when several heads must share one label indexing.
    """
    params = params or TrainParams()
    x = np.asarray(embeddings, dtype=float)
    labels = list(labels)
    if x.ndim != 2 or x.shape[0] != len(labels):
        raise ValueError("embeddings and labels must have equal length")
    if len(set(labels)) < 2:
        raise ValueError("training requires at least 2 distinct labels")
    vocab = vocabulary or LabelVocabulary.from_labels(labels)
    y = np.array([vocab.index_of(lbl) for lbl in labels])

    rng = np.random.Generator(np.random.PCG64(seed))
    if validation is not None:
        x_val = np.asarray(validation[0], dtype=float)
        y_val = np.array([vocab.index_of(lbl) for lbl in validation[1]])
        x_tr, y_tr = x, y
    else:
        order = rng.permutation(len(y))
        n_val = max(1, int(len(y) * params.val_fraction))
        val_idx, tr_idx = order[:n_val], order[n_val:]
        x_tr, y_tr = x[tr_idx], y[tr_idx]
        x_val, y_val = x[val_idx], y[val_idx]

    d, c = x.shape[1], len(vocab)
    weights = rng.normal(scale=0.01, size=(c, d))
    bias = np.zeros(c)

    best = (np.inf, weights.copy(), bias.copy())
    bad_checks = 0
    train_losses, val_losses = [], []
    n_tr = x_tr.shape[0]
    for epoch in range(params.epochs):
        lr = params.lr / (1.0 + params.lr_decay * epoch)
        for start in range(0, n_tr, params.batch):
            idx = slice(start, start + params.batch)
            loss, gw, gb = _loss_and_grad(weights, bias, x_tr[idx], y_tr[idx],
                                          params.l2)
            if np.isnan(loss):
                raise DivergenceError(epoch)
            weights -= lr * gw
            bias -= lr * gb
        # Shuffle between epochs, not within: keeps the pass deterministic.
        order = rng.permutation(n_tr)
        x_tr, y_tr = x_tr[order], y_tr[order]

        tr_loss, _, _ = _loss_and_grad(weights, bias, x_tr, y_tr, params.l2)
        val_loss, _, _ = _loss_and_grad(weights, bias, x_val, y_val, params.l2)
        if np.isnan(tr_loss) or np.isnan(val_loss):
            raise DivergenceError(epoch)
        train_losses.append(float(tr_loss))
        val_losses.append(float(val_loss))
        if val_loss < best[0] - 1e-7:
            best = (val_loss, weights.copy(), bias.copy())
            bad_checks = 0
        else:
            bad_checks += 1
            if bad_checks >= params.patience:
                break

    _, weights, bias = best
    return SoftmaxHead(
        weights=weights,
        bias=bias,
        vocabulary=vocab,
        l2=params.l2,
        history={"train_loss": train_losses, "val_loss": val_losses},
    )


def predict_proba(head, embedding):
    """Class probabilities for one embedding; sums to 1 (+/- 1e-6)."""
    x = np.asarray(embedding, dtype=float)
    if x.shape != (head.weights.shape[1],):
        raise ValueError(
            f"embedding dimension {x.shape} does not match head "
            f"({head.weights.shape[1]},)"
        )
    return ProbVector(head.vocabulary, _softmax(head.weights @ x + head.bias))


def predict_proba_matrix(head, embeddings):
    """Class probabilities for a batch; returns an (n, C) array."""
    x = np.asarray(embeddings, dtype=float)
    if x.ndim != 2 or x.shape[1] != head.weights.shape[1]:
        raise ValueError("embedding matrix does not match head dimension")
    return _softmax(x @ head.weights.T + head.bias)


def top_k(probs, k):
    """The k most probable labels, descending, ties by vocabulary index."""
    c = len(probs.vocabulary)
    if not 1 <= k <= c:
        raise ValueError(f"k must be in [1, {c}], got {k}")
    values = probs.values
    order = np.lexsort((np.arange(c), -values))[:k]
    return [(probs.vocabulary[i], float(values[i])) for i in order]
