import numpy as np
import pytest

from triagekit.classifier import LabelVocabulary, ProbVector
from triagekit.corpus import CleanTicket, SynthSpec, synth_corpus
from triagekit.discovery import (DiscoveryError, build_resolver_lists,
                                 discover_resolver_lists,
                                 list_to_resolver_probs)
from triagekit.encoder import encode_corpus, fit_encoder
from triagekit.topics import fit_lda


def ticket(i, resolver, group="g"):
    return CleanTicket(id=f"t{i}", group=group, resolver=resolver,
                       description="a b c", normalized_tokens=("a", "b", "c"))


class TestBuildResolverLists:
    def test_frequency_counting(self):
        tickets = [ticket(i, r) for i, r in enumerate("AABC")]
        lists, mapping = build_resolver_lists(
            {0: tickets}, {0: np.zeros(4, dtype=int)})
        (rl,) = lists
        assert rl.member_resolvers == {"A": 0.5, "B": 0.25, "C": 0.25}
        assert rl.source_topic == 0
        assert set(mapping.values()) == {rl.list_id}
        rl.validate()

    def test_single_resolver_cluster(self):
        tickets = [ticket(i, "solo") for i in range(3)]
        lists, _ = build_resolver_lists({2: tickets},
                                        {2: np.zeros(3, dtype=int)})
        assert lists[0].member_resolvers == {"solo": 1.0}

    def test_noise_tickets_excluded(self):
        tickets = [ticket(i, "A") for i in range(4)]
        labels = np.array([0, 0, -1, -1])
        lists, mapping = build_resolver_lists({0: tickets}, {0: labels})
        assert len(lists) == 1
        assert set(mapping) == {"t0", "t1"}
        assert lists[0].member_ticket_ids == ("t0", "t1")

    def test_all_noise_yields_empty_list_set(self):
        tickets = [ticket(i, "A") for i in range(4)]
        lists, mapping = build_resolver_lists(
            {0: tickets}, {0: np.full(4, -1)})
        assert lists == [] and mapping == {}

    def test_misaligned_labels_rejected(self):
        with pytest.raises(DiscoveryError):
            build_resolver_lists({0: [ticket(0, "A")]},
                                 {0: np.array([0, 1])})


class TestListToResolverProbs:
    def test_single_certain_list(self):
        lists, _ = build_resolver_lists(
            {0: [ticket(0, "A")] * 1}, {0: np.zeros(1, dtype=int)})
        probs = ProbVector(LabelVocabulary([lists[0].list_id]),
                           np.array([1.0]))
        out = list_to_resolver_probs(probs, lists)
        assert out.get("A") == pytest.approx(1.0)

    def test_hand_marginalization(self):
        l1 = [ticket(0, "A"), ticket(1, "B")]       # A: 0.5, B: 0.5
        l2 = [ticket(2, "B"), ticket(3, "B")]       # B: 1.0
        lists, _ = build_resolver_lists(
            {0: l1, 1: l2},
            {0: np.zeros(2, dtype=int), 1: np.zeros(2, dtype=int)})
        vocab = LabelVocabulary([rl.list_id for rl in lists])
        out = list_to_resolver_probs(ProbVector(vocab, np.array([0.6, 0.4])),
                                     lists)
        assert out.get("A") == pytest.approx(0.3)
        assert out.get("B") == pytest.approx(0.7)
        assert out.values.sum() == pytest.approx(1.0, abs=1e-6)

    def test_unknown_list_id_rejected(self):
        lists, _ = build_resolver_lists(
            {0: [ticket(0, "A")]}, {0: np.zeros(1, dtype=int)})
        probs = ProbVector(LabelVocabulary(["L9999.000"]), np.array([1.0]))
        with pytest.raises(DiscoveryError, match="L9999.000"):
            list_to_resolver_probs(probs, lists)

    def test_list_relabeling_invariance(self):
        l1 = [ticket(0, "A"), ticket(1, "B")]
        l2 = [ticket(2, "C")]
        lists, _ = build_resolver_lists(
            {0: l1, 1: l2},
            {0: np.zeros(2, dtype=int), 1: np.zeros(1, dtype=int)})
        vocab = LabelVocabulary([rl.list_id for rl in lists])
        p = np.array([0.25, 0.75])
        base = list_to_resolver_probs(ProbVector(vocab, p), lists)
        flipped_vocab = LabelVocabulary([lists[1].list_id, lists[0].list_id])
        flipped = list_to_resolver_probs(
            ProbVector(flipped_vocab, p[::-1].copy()), lists)
        assert base.vocabulary == flipped.vocabulary
        assert np.allclose(base.values, flipped.values)


@pytest.mark.slow
class TestDiscoverResolverLists:
    @pytest.fixture(scope="class")
    def planted(self):
        spec = SynthSpec(n_groups=4, resolvers_per_group=4, n_topics=8,
                         tickets=800, noise_rate=0.0)
        corpus = synth_corpus(spec, seed=11)
        encoder = fit_encoder(corpus, dimension=128)
        embeddings = encode_corpus(encoder, corpus)
        model = fit_lda([t.normalized_tokens for t in corpus], n_topics=8,
                        alpha=0.5, iterations=120, seed=12)
        return spec, corpus, embeddings, model

    def test_lists_follow_planted_topics(self, planted):
        spec, corpus, embeddings, model = planted
        result = discover_resolver_lists(corpus, embeddings, model,
                                         min_cluster_size=5)
        assert len(result.lists) >= spec.n_topics // 2
        for rl in result.lists:
            rl.validate()
            members = [t for t in corpus if t.id in rl.member_ticket_ids]
            assert {t.resolver for t in members} == set(rl.member_resolvers)
            # planted tickets in one dense cluster share one topic's tokens,
            # hence one group
            assert len({t.group for t in members}) == 1
        # the clustered portion dominates on a zero-noise planted corpus
        assert result.noise_count <= len(corpus) * 0.2

    def test_topic_size_cap_enforced(self, planted):
        _, corpus, embeddings, model = planted
        with pytest.raises(DiscoveryError, match="cap"):
            discover_resolver_lists(corpus, embeddings, model,
                                    min_cluster_size=5, topic_size_cap=10)
