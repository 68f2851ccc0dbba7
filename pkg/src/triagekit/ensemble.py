"""Four-model resolver ensemble.

The resolver suggestion combines, by fitted weighted average:

1. the resolver classifier (direct),
2. the resolver-list classifier marginalized into resolvers,
3. the group classifier marginalized through per-group resolver priors,
4. the similar-ticket scorer.

Model outputs over partial resolver vocabularies are first aligned onto
the global vocabulary with zero fill (no renormalization: zero mass for
resolvers a model cannot see is its honest output).  Weights live on the
4-simplex and are fitted by exhaustive grid search on validation log-loss.
"""

from dataclasses import dataclass

import numpy as np

from .classifier import LabelVocabulary, ProbVector

__all__ = [
    "MODEL_NAMES",
    "GroupResolverPrior",
    "EnsembleWeights",
    "fit_group_prior",
    "group_based_probs",
    "align_probs",
    "ensemble_probs",
    "simplex_grid",
    "ensemble_log_loss",
    "fit_weights",
]

MODEL_NAMES = ("resolver", "resolver_list", "group", "similar")
FLOOR_PROBABILITY = 1e-9


@dataclass(frozen=True)
class GroupResolverPrior:
    """Row-normalized resolver frequencies per group, from training counts."""

    matrix: np.ndarray  # (n_groups, n_resolvers), rows sum to 1
    groups: LabelVocabulary
    resolvers: LabelVocabulary

    def validate(self, tol=1e-6):
        sums = self.matrix.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > tol):
            raise ValueError("group prior rows must sum to 1")
        return self


@dataclass(frozen=True)
class EnsembleWeights:
    """Convex weights over the four models, in MODEL_NAMES order."""

    w: tuple

    def validate(self, tol=1e-9):
        if len(self.w) != len(MODEL_NAMES):
            raise ValueError(f"expected {len(MODEL_NAMES)} weights")
        if any(x < 0 for x in self.w):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.w) - 1.0) > tol:
            raise ValueError(f"weights sum to {sum(self.w)}, expected 1")
        return self

    def as_array(self):
        return np.asarray(self.w, dtype=float)


def fit_group_prior(tickets, groups=None, resolvers=None):
    """Count P(resolver | group) over the training split.

    Vocabularies default to the distinct labels observed; pass shared ones
    to keep indexing consistent with the classifiers.
    """
    tickets = list(tickets)
    if not tickets:
        raise ValueError("cannot fit a group prior on zero tickets")
    groups = groups or LabelVocabulary.from_labels(t.group for t in tickets)
    resolvers = resolvers or LabelVocabulary.from_labels(
        t.resolver for t in tickets
    )
    counts = np.zeros((len(groups), len(resolvers)))
    for t in tickets:
        counts[groups.index_of(t.group), resolvers.index_of(t.resolver)] += 1
    row_sums = counts.sum(axis=1, keepdims=True)
    # A group with no training tickets cannot be scored; give it a uniform
    # row so the matrix stays a proper conditional.
    empty = row_sums[:, 0] == 0
    counts[empty] = 1.0 / len(resolvers)
    row_sums[empty] = 1.0
    return GroupResolverPrior(counts / row_sums, groups, resolvers).validate()


def group_based_probs(group_probs, prior):
    """Marginalize group probabilities into resolver probabilities.

    P(resolver) = sum over groups of P(resolver | group) * P(group).
    """
    if group_probs.vocabulary != prior.groups:
        raise ValueError("group probability vocabulary does not match prior")
    values = group_probs.values @ prior.matrix
    return ProbVector(prior.resolvers, values, partial=group_probs.partial)


def align_probs(outputs, resolvers):
    """Re-index model outputs onto the global resolver vocabulary.

    Labels absent from an output get probability zero; nothing is
    renormalized, so each vector's total mass is preserved.  An output
    label missing from the global vocabulary is an error naming it.
    """
    aligned = []
    for probs in outputs:
        if probs is None:
            aligned.append(np.zeros(len(resolvers)))
            continue
        if probs.vocabulary == resolvers:
            aligned.append(np.asarray(probs.values, dtype=float))
            continue
        values = np.zeros(len(resolvers))
        for i, label in enumerate(probs.vocabulary):
            if label not in resolvers:
                raise ValueError(
                    f"resolver {label!r} is not in the global vocabulary"
                )
            values[resolvers.index_of(label)] = probs.values[i]
        aligned.append(values)
    return aligned


def ensemble_probs(aligned, weights, resolvers=None):
    """Convex combination of aligned model outputs.

    Returns a plain array when ``resolvers`` is None, else a ProbVector.
    """
    weights.validate()
    mats = [np.asarray(a, dtype=float) for a in aligned]
    length = {m.shape[-1] for m in mats}
    if len(length) != 1:
        raise ValueError(f"aligned vectors have mixed lengths {sorted(length)}")
    combined = sum(w * m for w, m in zip(weights.w, mats))
    if resolvers is None:
        return combined
    return ProbVector(resolvers, combined)


def simplex_grid(resolution=0.05, active=(True,) * 4):
    """Every weight vector on the 4-simplex at the given resolution.

    Inactive models are frozen at weight 0.  Vectors are generated in
    ascending lexicographic order, which the fit's tie-break relies on.
    At resolution 0.05 with all models active there are C(23,3) = 1771.
    """
    steps = round(1.0 / resolution)
    active_idx = [i for i, a in enumerate(active) if a]
    if not active_idx:
        raise ValueError("at least one model must be active")
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + [remaining])
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v, slots - 1)

    rec([], steps, len(active_idx))
    grid = np.zeros((len(out), 4))
    for row, values in enumerate(out):
        for i, v in zip(active_idx, values):
            grid[row, i] = v / steps
    return grid


def ensemble_log_loss(weights, model_probs, true_idx):
    """Mean negative log of the ensemble probability of the true resolver."""
    w = weights.as_array() if isinstance(weights, EnsembleWeights) else np.asarray(weights)
    true_probs = model_probs[np.arange(len(true_idx)), :, true_idx] @ w
    return float(-np.log(np.maximum(true_probs, FLOOR_PROBABILITY)).mean())


def _top_k_hits(prob_matrix, true_idx, k):
    part = np.argpartition(-prob_matrix, min(k, prob_matrix.shape[1]) - 1, axis=1)
    hits = 0
    for i, t in enumerate(true_idx):
        if t in part[i, :k]:
            hits += 1
    return hits / len(true_idx)


def fit_weights(model_probs, true_idx, resolution=0.05, active=None,
                tie_break_k=5):
    """Exhaustive simplex search for the ensemble weights.

    Parameters
    ----------
    model_probs : (n, 4, R) array
        Aligned probability vectors of the four models per validation
        ticket, in MODEL_NAMES order.
    true_idx : (n,) int array of true resolver indices
    resolution : grid step on the simplex
    active : optional 4-tuple of bools; inactive models are frozen at 0
        (used when no resolver lists were discovered).
    tie_break_k : ties on log-loss break by higher top-k accuracy, then by
        the lexicographically smallest weight vector.

    Minimizes mean log-loss with probability floor 1e-9; deterministic.
    """
    model_probs = np.asarray(model_probs, dtype=float)
    n = model_probs.shape[0]
    if n == 0:
        raise ValueError("validation set is empty")
    true_idx = np.asarray(true_idx)
    active = tuple(active) if active is not None else (True,) * 4
    grid = simplex_grid(resolution, active)

    # Log-loss is linear in the per-model true-class probabilities, so the
    # whole grid evaluates as one matrix product.
    true_probs = model_probs[np.arange(n), :, true_idx]  # (n, 4)
    p = true_probs @ grid.T                              # (n, n_grid)
    losses = -np.log(np.maximum(p, FLOOR_PROBABILITY)).mean(axis=0)

    best_loss = losses.min()
    tied = np.flatnonzero(losses == best_loss)
    if len(tied) > 1:
        accs = []
        for g in tied:
            combined = np.einsum("nmr,m->nr", model_probs, grid[g])
            accs.append(_top_k_hits(combined, true_idx, tie_break_k))
        best_acc = max(accs)
        tied = [g for g, a in zip(tied, accs) if a == best_acc]
    winner = grid[tied[0]]
    return EnsembleWeights(tuple(float(x) for x in winner)).validate()
