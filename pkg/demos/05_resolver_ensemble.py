"""The four-model resolver ensemble, piece by piece.

Model 1 classifies resolvers directly; model 2 marginalizes a resolver-list
classifier; model 3 marginalizes the group classifier through per-group
resolver priors; model 4 scores resolvers from similar tickets.  A fitted
convex combination of the four beats any of them alone.

Run:  python demos/05_resolver_ensemble.py
"""

import numpy as np

from triagekit import (ScorerParams, fit_params, resolver_scores,
                       scale_distance, scores_to_probs)
from triagekit.ann import Neighbor
from triagekit.classifier import LabelVocabulary, ProbVector
from triagekit.ensemble import (EnsembleWeights, align_probs, ensemble_probs,
                                fit_weights, simplex_grid)

# --- model 4: from neighbor distances to resolver probabilities -----------
params = ScorerParams(theta_min=0.2, theta_max=1.2, beta=0.6)
neighbors = [
    Neighbor("t1", "alice", 0.35),
    Neighbor("t2", "alice", 0.55),
    Neighbor("t3", "bob", 0.40),
    Neighbor("t4", "carol", 0.90),
]
print("scaled distances:", [round(scale_distance(n.distance, params), 3)
                            for n in neighbors])
scores = resolver_scores(neighbors, params)
for s in scores:
    print(f"  score[{s.resolver}] = {s.score:.3f}")
probs = scores_to_probs(scores)
print("softmax:", {r: round(probs.get(r), 3) for r in probs.vocabulary})

# --- fitting the three scorer parameters over validation examples ---------
rng = np.random.default_rng(0)
resolvers = [f"r{i}" for i in range(5)]
validation = []
for _ in range(60):
    truth = resolvers[rng.integers(5)]
    nb = [Neighbor(f"n{i}", resolvers[rng.integers(5)],
                   float(np.clip(rng.normal(
                       0.4 if resolvers[rng.integers(5)] == truth else 0.8,
                       0.2), 0.05, 1.9)))
          for i in range(20)]
    validation.append((nb, truth))
fitted = fit_params(validation)
print(f"\nfitted scorer params: theta=({fitted.theta_min:.2f}, "
      f"{fitted.theta_max:.2f}), beta={fitted.beta:.2f}")

# --- combining four aligned models ----------------------------------------
vocab = LabelVocabulary(["alice", "bob", "carol"])
outputs = [
    ProbVector(vocab, np.array([0.6, 0.3, 0.1])),          # resolver head
    ProbVector(vocab, np.array([0.4, 0.4, 0.2])),          # list marginal
    ProbVector(vocab, np.array([0.3, 0.4, 0.3])),          # group marginal
    ProbVector(LabelVocabulary(["alice"]), np.array([1.0])),  # similar
]
aligned = align_probs(outputs, vocab)
combined = ensemble_probs(aligned, EnsembleWeights((0.4, 0.2, 0.1, 0.3)), vocab)
print("\ncombined:", {r: round(combined.get(r), 3) for r in vocab})

# --- weight fitting searches the whole simplex grid ------------------------
grid = simplex_grid(0.05)
print(f"\nsimplex grid at resolution 0.05: {len(grid)} weight vectors")
n, r = 200, 4
true_idx = rng.integers(0, r, n)
model_probs = np.zeros((n, 4, r))
for i, t in enumerate(true_idx):
    sharp = np.full(r, 0.05)
    sharp[t] = 0.85
    model_probs[i, 0] = sharp if rng.random() < 0.7 else rng.dirichlet(np.ones(r))
    model_probs[i, 1] = sharp if rng.random() < 0.5 else rng.dirichlet(np.ones(r))
    model_probs[i, 2] = rng.dirichlet(np.ones(r))
    model_probs[i, 3] = sharp if rng.random() < 0.6 else rng.dirichlet(np.ones(r))
weights = fit_weights(model_probs, true_idx)
print("fitted weights:", weights.w)
