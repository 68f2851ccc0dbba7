"""Similar-ticket resolver scoring (ensemble model 4).

Nearest-neighbor tickets vote for their resolvers.  Distances are first
rescaled to a fitted [theta_min, theta_max] range; each resolver's own
hits are rank-discounted geometrically (closest hit gets weight exactly 1,
the next beta, then beta^2, ...); a resolver's score is the sum of
weight / scaled_distance over its hits; a softmax turns scores into
probabilities.  The three parameters are fitted on validation data by
grid search plus Nelder-Mead refinement on the cross-entropy log-loss.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .classifier import LabelVocabulary, ProbVector

__all__ = [
    "ScorerParams",
    "ScoredNeighbor",
    "ResolverScore",
    "FitSearch",
    "scale_distance",
    "scored_neighbors",
    "resolver_scores",
    "scores_to_probs",
    "scorer_probs",
    "scorer_log_loss",
    "fit_params",
]

EPSILON_CLAMP = 1e-3   # floor for scaled distances: bounds 1/d_scaled
FLOOR_PROBABILITY = 1e-9  # log-loss contribution when the truth is absent

DEFAULT_PARAMS_GRID = {
    "theta_min": (0.0, 0.1, 0.2, 0.3),
    "theta_max": (0.8, 1.0, 1.2, 1.5, 2.0),
    "beta": (0.3, 0.5, 0.7, 0.9),
}


@dataclass(frozen=True)
class ScorerParams:
    """Distance-rescaling bounds and the per-resolver rank discount."""

    theta_min: float
    theta_max: float
    beta: float

    def validate(self):
        if not self.theta_min < self.theta_max:
            raise ValueError("theta_min must be < theta_max")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0, 1)")
        return self


DEFAULT_PARAMS = ScorerParams(theta_min=0.0, theta_max=1.0, beta=0.5)


@dataclass(frozen=True)
class ScoredNeighbor:
    neighbor: object
    scaled_distance: float
    rank: int      # zero-based, per resolver, by ascending distance
    weight: float  # beta ** rank


@dataclass(frozen=True)
class ResolverScore:
    resolver: str
    score: float


def scale_distance(distance, params):
    """(d - theta_min) / (theta_max - theta_min), floored at 1e-3.

    The floor keeps 1/d_scaled bounded for hits at or below theta_min;
    there is no upper clamp.
    """
    scaled = (distance - params.theta_min) / (params.theta_max - params.theta_min)
    return max(scaled, EPSILON_CLAMP)


def scored_neighbors(neighbors, params):
    """Per-neighbor scaled distance, per-resolver rank, and rank weight."""
    params.validate()
    ordered = sorted(neighbors, key=lambda n: (n.distance, n.ticket_id))
    next_rank = {}
    out = []
    for n in ordered:
        if n.resolver is None:
            raise ValueError(f"neighbor {n.ticket_id} has no resolver label")
        rank = next_rank.get(n.resolver, 0)
        next_rank[n.resolver] = rank + 1
        out.append(
            ScoredNeighbor(
                neighbor=n,
                scaled_distance=scale_distance(n.distance, params),
                rank=rank,
                weight=params.beta ** rank,
            )
        )
    return out


def resolver_scores(neighbors, params):
    """Aggregate neighbors into one score per resolver.

    score_j = sum over resolver j's hits of (beta^rank / scaled_distance);
    the closest hit per resolver contributes exactly 1/scaled_distance.
    Input order does not matter (sorting is internal).  An empty neighbor
    list yields an empty score list.
    """
    totals = {}
    for sn in scored_neighbors(neighbors, params):
        r = sn.neighbor.resolver
        totals[r] = totals.get(r, 0.0) + sn.weight / sn.scaled_distance
    return [ResolverScore(r, s) for r, s in sorted(totals.items())]


def scores_to_probs(scores):
    """Softmax over resolver scores; a distribution over resolvers present."""
    if not scores:
        raise ValueError("cannot convert zero scores to probabilities")
    ordered = sorted(scores, key=lambda s: s.resolver)
    vocab = LabelVocabulary([s.resolver for s in ordered])
    raw = np.array([s.score for s in ordered], dtype=float)
    z = raw - raw.max()
    e = np.exp(z)
    return ProbVector(vocab, e / e.sum())


def scorer_probs(neighbors, params):
    """Full model-4 forward pass: neighbors -> resolver distribution."""
    scores = resolver_scores(neighbors, params)
    if not scores:
        return None
    return scores_to_probs(scores)


def _example_arrays(validation):
    """Precompute per-example arrays; ranks are independent of the params."""
    examples = []
    for neighbors, truth in validation:
        ordered = sorted(neighbors, key=lambda n: (n.distance, n.ticket_id))
        resolvers = sorted({n.resolver for n in ordered})
        codes = {r: i for i, r in enumerate(resolvers)}
        dist = np.array([n.distance for n in ordered], dtype=float)
        code = np.array([codes[n.resolver] for n in ordered], dtype=np.int64)
        rank = np.zeros(len(ordered), dtype=np.int64)
        seen = {}
        for i, n in enumerate(ordered):
            rank[i] = seen.get(n.resolver, 0)
            seen[n.resolver] = rank[i] + 1
        examples.append((dist, code, rank, len(resolvers), codes.get(truth, -1)))
    return examples


def _mean_log_loss(examples, theta_min, theta_max, beta):
    total = 0.0
    for dist, code, rank, n_resolvers, true_code in examples:
        if true_code < 0 or len(dist) == 0:
            total -= np.log(FLOOR_PROBABILITY)
            continue
        scaled = np.maximum(
            (dist - theta_min) / (theta_max - theta_min), EPSILON_CLAMP
        )
        contrib = beta ** rank / scaled
        scores = np.bincount(code, weights=contrib, minlength=n_resolvers)
        z = scores - scores.max()
        logp = z[true_code] - np.log(np.exp(z).sum())
        total -= max(logp, np.log(FLOOR_PROBABILITY))
    return total / len(examples)


def scorer_log_loss(validation, params):
    """Mean negative log probability of the true resolver.

    Examples whose true resolver is absent from the neighbor set contribute
    -log of the floor probability (1e-9).
    """
    params.validate()
    if not validation:
        raise ValueError("validation set is empty")
    return _mean_log_loss(
        _example_arrays(validation), params.theta_min, params.theta_max,
        params.beta,
    )


@dataclass(frozen=True)
class FitSearch:
    """Search configuration for :func:`fit_params`."""

    theta_min_grid: tuple = DEFAULT_PARAMS_GRID["theta_min"]
    theta_max_grid: tuple = DEFAULT_PARAMS_GRID["theta_max"]
    beta_grid: tuple = DEFAULT_PARAMS_GRID["beta"]
    refine: bool = True
    refine_iters: int = 200


def fit_params(validation, search=None):
    """Fit (theta_min, theta_max, beta) by minimizing validation log-loss.

    A coarse grid (which includes the default parameters, so the fit never
    loses to them) is followed by Nelder-Mead refinement started at the
    best grid point; if refinement wanders outside the feasible region
    (theta_min < theta_max, beta in (0,1)) the best grid point stands.
    """
    search = search or FitSearch()
    if not validation:
        raise ValueError("validation set is empty")
    examples = _example_arrays(validation)

    best_loss, best = np.inf, None
    for tmin, tmax, beta in itertools.product(
        search.theta_min_grid, search.theta_max_grid, search.beta_grid
    ):
        if tmin >= tmax:
            continue
        loss = _mean_log_loss(examples, tmin, tmax, beta)
        if loss < best_loss:
            best_loss, best = loss, (tmin, tmax, beta)

    if search.refine:
        big = 1e6

        def objective(v):
            tmin, tmax, beta = v
            if tmin >= tmax - 1e-6 or not 1e-6 < beta < 1 - 1e-6:
                return big
            return _mean_log_loss(examples, tmin, tmax, beta)

        result = minimize(
            objective, np.array(best), method="Nelder-Mead",
            options={"maxiter": search.refine_iters, "xatol": 1e-4,
                     "fatol": 1e-6},
        )
        tmin, tmax, beta = result.x
        feasible = tmin < tmax and 0.0 < beta < 1.0
        if feasible and result.fun < best_loss:
            best_loss, best = float(result.fun), (tmin, tmax, beta)

    return ScorerParams(*best).validate()
