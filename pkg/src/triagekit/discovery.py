"""Resolver-list discovery.

Topics partition the corpus; density clustering within each topic groups
near-duplicate tickets; each cluster becomes a resolver list: the set of
people who historically resolved that kind of ticket, with their
conditional frequencies.  Noise tickets belong to no list and are excluded
from list-classifier training.
"""

from dataclasses import dataclass

import numpy as np

from .classifier import LabelVocabulary, ProbVector
from .density import cluster_topic
from .topics import assign_topic

__all__ = [
    "ResolverList",
    "DiscoveryResult",
    "DiscoveryError",
    "build_resolver_lists",
    "discover_resolver_lists",
    "list_to_resolver_probs",
]


class DiscoveryError(Exception):
    pass


@dataclass(frozen=True)
class ResolverList:
    """One discovered cluster of tickets and its resolver frequencies."""

    list_id: str
    member_resolvers: dict
    member_ticket_ids: tuple
    source_topic: int

    def validate(self, tol=1e-6):
        total = sum(self.member_resolvers.values())
        if abs(total - 1.0) > tol:
            raise ValueError(f"{self.list_id}: frequencies sum to {total}")
        return self


@dataclass(frozen=True)
class DiscoveryResult:
    lists: tuple
    ticket_to_list: dict      # ticket id -> list id (clustered tickets only)
    topic_of_ticket: dict     # ticket id -> assigned topic
    topic_sizes: dict         # topic id -> ticket count
    noise_count: int


def build_resolver_lists(tickets_per_topic, labels_per_topic):
    """Turn per-topic cluster labels into ResolverLists.

    Parameters
    ----------
    tickets_per_topic : mapping of topic id -> list of CleanTicket
    labels_per_topic : mapping of topic id -> array of cluster labels
        aligned with the tickets; -1 marks noise.

    Returns (lists, ticket_to_list).  List ids are "L{topic}.{cluster}".
    """
    lists = []
    ticket_to_list = {}
    for topic in sorted(tickets_per_topic):
        tickets = tickets_per_topic[topic]
        labels = labels_per_topic[topic]
        if len(tickets) != len(labels):
            raise DiscoveryError(
                f"topic {topic}: {len(labels)} labels for {len(tickets)} tickets"
            )
        by_cluster = {}
        for ticket, label in zip(tickets, labels):
            if label >= 0:
                by_cluster.setdefault(int(label), []).append(ticket)
        for cluster in sorted(by_cluster):
            members = by_cluster[cluster]
            list_id = f"L{topic:04d}.{cluster:03d}"
            counts = {}
            for t in members:
                counts[t.resolver] = counts.get(t.resolver, 0) + 1
            total = len(members)
            freqs = {r: c / total for r, c in sorted(counts.items())}
            lists.append(
                ResolverList(
                    list_id=list_id,
                    member_resolvers=freqs,
                    member_ticket_ids=tuple(t.id for t in members),
                    source_topic=topic,
                )
            )
            for t in members:
                ticket_to_list[t.id] = list_id
    return lists, ticket_to_list


def discover_resolver_lists(tickets, embeddings, topic_model,
                            min_cluster_size=5, topic_size_cap=20000):
    """Assign topics, cluster each topic, and build resolver lists.

    ``topic_size_cap`` bounds the per-topic clustering input; the cap is the
    knob that keeps total clustering work near-linear in corpus size.  A
    topic exceeding it raises DiscoveryError (raise the topic count instead).
    """
    embeddings = np.asarray(embeddings)
    if len(tickets) != embeddings.shape[0]:
        raise DiscoveryError("tickets and embeddings must align")
    topic_rows = {}
    topic_of_ticket = {}
    for row, ticket in enumerate(tickets):
        topic = assign_topic(topic_model, ticket.normalized_tokens).topic
        topic_rows.setdefault(topic, []).append(row)
        topic_of_ticket[ticket.id] = topic

    topic_sizes = {t: len(rows) for t, rows in topic_rows.items()}
    biggest = max(topic_sizes.values())
    if biggest > topic_size_cap:
        raise DiscoveryError(
            f"largest topic holds {biggest} tickets, above the cap of "
            f"{topic_size_cap}; refit with more topics"
        )

    tickets_per_topic = {}
    labels_per_topic = {}
    for topic, rows in topic_rows.items():
        tickets_per_topic[topic] = [tickets[r] for r in rows]
        labels_per_topic[topic] = cluster_topic(
            embeddings[rows], min_cluster_size
        )
    lists, ticket_to_list = build_resolver_lists(
        tickets_per_topic, labels_per_topic
    )
    noise = len(tickets) - len(ticket_to_list)
    return DiscoveryResult(
        lists=tuple(lists),
        ticket_to_list=ticket_to_list,
        topic_of_ticket=topic_of_ticket,
        topic_sizes=topic_sizes,
        noise_count=noise,
    )


def list_to_resolver_probs(list_probs, lists):
    """Marginalize list probabilities into resolver probabilities.

    P(resolver) = sum over lists of P(resolver | list) * P(list).  Both
    factors are normalized, so the output sums to 1 when the input does.
    """
    by_id = {rl.list_id: rl for rl in lists}
    for list_id in list_probs.vocabulary:
        if list_id not in by_id:
            raise DiscoveryError(f"unknown resolver list id {list_id!r}")
    resolvers = sorted({
        r
        for list_id in list_probs.vocabulary
        for r in by_id[list_id].member_resolvers
    })
    vocab = LabelVocabulary(resolvers)
    values = np.zeros(len(vocab))
    for k, list_id in enumerate(list_probs.vocabulary):
        p_list = list_probs.values[k]
        if p_list == 0.0:
            continue
        for resolver, freq in by_id[list_id].member_resolvers.items():
            values[vocab.index_of(resolver)] += freq * p_list
    return ProbVector(vocab, values, partial=list_probs.partial)
