import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triagekit.ann import Neighbor
from triagekit.similar import (DEFAULT_PARAMS, EPSILON_CLAMP, FitSearch,
                               ScorerParams, fit_params, resolver_scores,
                               scale_distance, scored_neighbors,
                               scorer_log_loss, scores_to_probs)

PARAMS = ScorerParams(theta_min=0.0, theta_max=1.0, beta=0.5)


def nb(i, resolver, distance):
    return Neighbor(ticket_id=f"t{i:03d}", resolver=resolver, distance=distance)


class TestScaleDistance:
    def test_at_theta_max_is_one(self):
        p = ScorerParams(0.2, 1.0, 0.5)
        assert scale_distance(1.0, p) == pytest.approx(1.0)

    def test_at_theta_min_clamps(self):
        p = ScorerParams(0.2, 1.0, 0.5)
        assert scale_distance(0.2, p) == EPSILON_CLAMP
        assert scale_distance(0.05, p) == EPSILON_CLAMP

    def test_midpoint_arithmetic(self):
        p = ScorerParams(0.2, 1.0, 0.5)
        assert scale_distance(0.6, p) == pytest.approx(0.5)

    def test_unbounded_above(self):
        p = ScorerParams(0.0, 1.0, 0.5)
        assert scale_distance(3.0, p) == pytest.approx(3.0)


class TestResolverScores:
    def test_single_neighbor(self):
        scores = resolver_scores([nb(0, "A", 0.5)], PARAMS)
        assert len(scores) == 1
        assert scores[0].resolver == "A"
        assert scores[0].score == pytest.approx(2.0)

    def test_rank_discount_hand_computed(self):
        # two hits for A at scaled distances 0.5 and 1.0, beta = 0.5:
        # 1/0.5 + 0.5/1.0 = 2.5
        scores = resolver_scores([nb(0, "A", 0.5), nb(1, "A", 1.0)], PARAMS)
        assert scores[0].score == pytest.approx(2.5)

    def test_lowest_distance_hit_has_weight_exactly_one(self):
        scored = scored_neighbors(
            [nb(0, "A", 0.7), nb(1, "A", 0.4), nb(2, "B", 0.6)], PARAMS)
        best = {}
        for sn in scored:
            r = sn.neighbor.resolver
            if r not in best or sn.neighbor.distance < best[r].neighbor.distance:
                best[r] = sn
        assert all(sn.weight == 1.0 and sn.rank == 0 for sn in best.values())

    def test_symmetric_resolvers_get_equal_scores(self):
        neighbors = [nb(0, "A", 0.3), nb(1, "B", 0.3),
                     nb(2, "A", 0.8), nb(3, "B", 0.8)]
        scores = {s.resolver: s.score for s in resolver_scores(neighbors, PARAMS)}
        assert scores["A"] == pytest.approx(scores["B"])

    def test_order_independence(self):
        neighbors = [nb(0, "A", 0.5), nb(1, "B", 0.2), nb(2, "A", 0.9)]
        forward = resolver_scores(neighbors, PARAMS)
        backward = resolver_scores(list(reversed(neighbors)), PARAMS)
        assert forward == backward

    def test_empty_input_gives_empty_scores(self):
        assert resolver_scores([], PARAMS) == []

    def test_duplicate_worst_hit_never_hurts(self):
        neighbors = [nb(0, "A", 0.4), nb(1, "A", 0.9), nb(2, "B", 0.5)]
        base = {s.resolver: s.score for s in resolver_scores(neighbors, PARAMS)}
        extended = neighbors + [nb(3, "A", 0.9)]
        more = {s.resolver: s.score for s in resolver_scores(extended, PARAMS)}
        assert more["A"] >= base["A"]
        assert more["B"] == pytest.approx(base["B"])

    @given(st.lists(st.tuples(st.sampled_from("ABC"),
                              st.floats(0.01, 1.9)), min_size=1, max_size=30),
           st.floats(0.05, 0.95))
    @settings(max_examples=50, deadline=None)
    def test_total_rank_weight_bounded_by_geometric_sum(self, pairs, beta):
        params = ScorerParams(0.0, 1.0, beta)
        neighbors = [nb(i, r, d) for i, (r, d) in enumerate(pairs)]
        weights = {}
        for sn in scored_neighbors(neighbors, params):
            r = sn.neighbor.resolver
            weights[r] = weights.get(r, 0.0) + sn.weight
        bound = 1.0 / (1.0 - beta)
        assert all(total <= bound + 1e-9 for total in weights.values())


class TestScoresToProbs:
    def test_equal_scores_uniform(self):
        from triagekit.similar import ResolverScore
        scores = [ResolverScore(r, 1.7) for r in "ABCD"]
        probs = scores_to_probs(scores)
        assert np.allclose(probs.values, 0.25)

    def test_log_two_softmax(self):
        from triagekit.similar import ResolverScore
        probs = scores_to_probs([ResolverScore("A", math.log(2)),
                                 ResolverScore("B", 0.0)])
        assert probs.get("A") == pytest.approx(2 / 3)
        assert probs.get("B") == pytest.approx(1 / 3)

    def test_single_resolver_is_certain(self):
        from triagekit.similar import ResolverScore
        probs = scores_to_probs([ResolverScore("A", -3.0)])
        assert probs.get("A") == pytest.approx(1.0)

    def test_shift_invariance(self):
        from triagekit.similar import ResolverScore
        base = [ResolverScore("A", 0.3), ResolverScore("B", 1.1)]
        shifted = [ResolverScore("A", 100.3), ResolverScore("B", 101.1)]
        assert np.allclose(scores_to_probs(base).values,
                           scores_to_probs(shifted).values)

    def test_sums_to_one(self):
        from triagekit.similar import ResolverScore
        rng = np.random.default_rng(0)
        for _ in range(20):
            scores = [ResolverScore(f"r{i}", float(s))
                      for i, s in enumerate(rng.normal(size=6))]
            assert scores_to_probs(scores).values.sum() == pytest.approx(1.0)


def synthetic_validation(seed, n_examples=80):
    """Neighbor sets where the true resolver's hits sit closer on average."""
    rng = np.random.default_rng(seed)
    resolvers = [f"r{i}" for i in range(6)]
    validation = []
    for _ in range(n_examples):
        truth = resolvers[rng.integers(len(resolvers))]
        neighbors = []
        for i in range(30):
            r = resolvers[rng.integers(len(resolvers))]
            base = 0.35 if r == truth else 0.8
            neighbors.append(nb(i, r, float(np.clip(
                rng.normal(base, 0.25), 0.01, 1.95))))
        validation.append((neighbors, truth))
    return validation


class TestFitParams:
    def test_fitted_never_loses_to_defaults(self):
        validation = synthetic_validation(1)
        fitted = fit_params(validation)
        assert scorer_log_loss(validation, fitted) <= scorer_log_loss(
            validation, DEFAULT_PARAMS) + 1e-12

    def test_grid_matches_brute_force_enumeration(self):
        validation = synthetic_validation(2, n_examples=1)
        search = FitSearch(refine=False)
        fitted = fit_params(validation, search)
        losses = {}
        for tmin, tmax, beta in itertools.product(
            search.theta_min_grid, search.theta_max_grid, search.beta_grid
        ):
            if tmin >= tmax:
                continue
            losses[(tmin, tmax, beta)] = scorer_log_loss(
                validation, ScorerParams(tmin, tmax, beta))
        best = min(losses.values())
        got = scorer_log_loss(validation, fitted)
        assert got == pytest.approx(best, abs=1e-12)

    def test_refined_params_stay_feasible(self):
        fitted = fit_params(synthetic_validation(3))
        assert fitted.theta_min < fitted.theta_max
        assert 0.0 < fitted.beta < 1.0

    def test_absent_truth_contributes_floor(self):
        validation = [([nb(0, "A", 0.5)], "Z")]
        loss = scorer_log_loss(validation, DEFAULT_PARAMS)
        assert loss == pytest.approx(-math.log(1e-9))

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            ScorerParams(1.0, 0.5, 0.5).validate()
        with pytest.raises(ValueError):
            ScorerParams(0.0, 1.0, 1.5).validate()
