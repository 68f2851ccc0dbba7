"""Resolver-list discovery: topic partitioning plus density clustering.

Topics keep the clustering cheap (work is quadratic only within a topic);
density clustering finds groups of near-duplicate tickets; each cluster
becomes a resolver list with conditional resolver frequencies.

Run:  python demos/04_topics_and_resolver_lists.py
"""

from collections import Counter

from triagekit import (SynthSpec, assign_topic, discover_resolver_lists,
                       fit_encoder, fit_lda, split, synth_corpus)
from triagekit.encoder import encode_corpus

spec = SynthSpec(n_groups=4, resolvers_per_group=4, n_topics=8,
                 tickets=900, noise_rate=0.05)
dataset = split(synth_corpus(spec, seed=3), seed=3)
train = list(dataset.train)

# --- fit the topic model --------------------------------------------------
docs = [t.normalized_tokens for t in train]
model = fit_lda(docs, n_topics=8, alpha=0.5, iterations=150, seed=4)
print(f"LDA: {model.n_topics} topics over {len(model.tokens)} tokens")
print(f"log-likelihood sweep 1 -> {model.log_likelihood[0]:.0f}, "
      f"sweep {len(model.log_likelihood)} -> {model.log_likelihood[-1]:.0f}")

sizes = Counter(assign_topic(model, d).topic for d in docs)
print("topic sizes:", dict(sorted(sizes.items())))

# --- cluster within each topic and build resolver lists -------------------
encoder = fit_encoder(train, dimension=256)
embeddings = encode_corpus(encoder, train)
result = discover_resolver_lists(train, embeddings, model,
                                 min_cluster_size=5)
print(f"\ndiscovered {len(result.lists)} resolver lists, "
      f"{result.noise_count} noise tickets")
for rl in result.lists[:5]:
    freqs = {r: round(f, 2) for r, f in rl.member_resolvers.items()}
    print(f"  {rl.list_id}: {len(rl.member_ticket_ids)} tickets, "
          f"P(resolver|list)={freqs}")
