"""Hashed TF-IDF embeddings and the softmax classification head.

Run:  python demos/02_encoding_and_classification.py
"""

import numpy as np

from triagekit import (SynthSpec, TrainParams, encode, fit_encoder,
                       predict_proba, split, synth_corpus, top_k, train_head)
from triagekit.encoder import encode_corpus

spec = SynthSpec(n_groups=5, resolvers_per_group=4, n_topics=10,
                 tickets=1500, noise_rate=0.05)
dataset = split(synth_corpus(spec, seed=7), seed=7)

# --- fit the encoder on the training split ------------------------------
encoder = fit_encoder(dataset.train, dimension=256, hash_seed=1)
print(f"encoder: dimension={encoder.dimension}, "
      f"{int((encoder.idf > 0).sum())} active buckets")

v1 = encode(encoder, dataset.train[0].description)
v2 = encode(encoder, dataset.train[1].description)
print(f"norms: {np.linalg.norm(v1):.6f}, {np.linalg.norm(v2):.6f}")
print(f"cosine between two tickets: {float(v1 @ v2):.3f} "
      f"(same topic pulls them together, hashing keeps strangers apart)")

# --- train a group classifier over the embeddings ------------------------
x_train = encode_corpus(encoder, dataset.train)
x_val = encode_corpus(encoder, dataset.validation)
head = train_head(
    x_train, [t.group for t in dataset.train],
    TrainParams(lr=4.0, epochs=40, l2=1e-6, patience=5, lr_decay=0.05),
    seed=0,
    validation=(x_val, [t.group for t in dataset.validation]),
)
print(f"\ntrained group head over {len(head.vocabulary)} groups "
      f"({len(head.history['train_loss'])} epochs)")

# --- rank groups for a fresh ticket --------------------------------------
ticket = dataset.test[0]
probs = predict_proba(head, encode(encoder, ticket.description))
print(f"true group: {ticket.group}")
for name, p in top_k(probs, 3):
    print(f"  {name}: {p:.3f}")

hits = 0
x_test = encode_corpus(encoder, dataset.test)
for i, t in enumerate(dataset.test):
    ranked = top_k(predict_proba(head, x_test[i]), 3)
    hits += t.group in [g for g, _ in ranked]
print(f"\ntop-3 accuracy on {len(dataset.test)} test tickets: "
      f"{hits / len(dataset.test):.3f}")
