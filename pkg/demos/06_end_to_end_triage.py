"""The whole system: train a bundle, suggest, evaluate, persist.

Run:  python demos/06_end_to_end_triage.py
"""

import tempfile
from pathlib import Path

from triagekit import (PipelineConfig, SynthSpec, TrainParams, evaluate_all,
                       load_bundle, save_bundle, split, suggest, synth_corpus,
                       train_pipeline)

spec = SynthSpec(n_groups=8, resolvers_per_group=5, n_topics=16,
                 tickets=2000, noise_rate=0.1)
dataset = split(synth_corpus(spec, seed=11), seed=11)
config = PipelineConfig(
    seed=11,
    dimension=256,
    head=TrainParams(lr=4.0, epochs=60, l2=1e-6, patience=8, lr_decay=0.05),
    lda_topics=20,
    lda_iterations=120,
    min_cluster_size=4,
    ann_trees=8,
    ann_leaf_size=16,
    similar_neighbors=100,
    search_budget=800,
)

print("training ...")
bundle = train_pipeline(dataset, config)
secs = bundle.manifest["stage_seconds"]
print(f"trained in {secs['total']:.1f}s; ensemble weights "
      f"{dict(zip(('resolver', 'list', 'group', 'similar'), bundle.ensemble_weights.w))}")

# --- live suggestion -------------------------------------------------------
ticket = dataset.test[0]
result = suggest(bundle, ticket.description, k_group=3, k_resolver=5,
                 n_similar=3)
print(f"\nticket: {ticket.description[:60]} ...")
print(f"truth: group={ticket.group} resolver={ticket.resolver}")
print("suggested groups:  ", [(g, round(p, 3)) for g, p in result.groups])
print("suggested resolvers:", [(r, round(p, 3)) for r, p in result.resolvers])
print("similar tickets:")
for s in result.similar:
    print(f"  {s.ticket_id} (d={s.distance:.3f}, {s.resolver}): "
          f"{s.snippet[:48]} ...")
print("timings:", {k: f"{v:.1f}ms" for k, v in result.timings_ms.items()})

# --- evaluation report -----------------------------------------------------
report = evaluate_all(bundle, dataset.test, timing_sample=50)
print("\n" + report.to_text())

# --- persistence -----------------------------------------------------------
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "bundle"
    save_bundle(bundle, out)
    loaded = load_bundle(out)
    replay = suggest(loaded, ticket.description, k_group=3, k_resolver=5,
                     n_similar=3)
    print(f"\nreloaded bundle replays the call identically: "
          f"{replay.groups == result.groups and replay.resolvers == result.resolvers}")
