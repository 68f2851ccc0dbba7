"""Approximate nearest neighbor search with an exact brute-force oracle.

Run:  python demos/03_similarity_search.py
"""

import tempfile
import time
from pathlib import Path

import numpy as np

from triagekit import brute_force_knn, build_index, load_index, query, save_index
from triagekit.ann import query_with_stats

# clustered unit vectors, like real ticket embeddings
rng = np.random.default_rng(0)
centers = rng.standard_normal((30, 256))
centers /= np.linalg.norm(centers, axis=1, keepdims=True)
points = centers[rng.integers(0, 30, 5000)] + 0.03 * rng.standard_normal((5000, 256))
points /= np.linalg.norm(points, axis=1, keepdims=True)
vectors = {f"ticket-{i:04d}": points[i] for i in range(len(points))}

index = build_index(vectors, num_trees=16, leaf_size=32, seed=1)
print(f"indexed {len(index)} vectors, {index.num_trees} trees")

# --- recall against the exact oracle -------------------------------------
recalls, times = [], []
for row in rng.integers(0, 5000, 50):
    q = points[row]
    truth = {n.ticket_id for n in brute_force_knn(vectors, q, 10)}
    t0 = time.perf_counter()
    hits = query(index, q, 10, search_budget=600)
    times.append(time.perf_counter() - t0)
    recalls.append(len(truth & {n.ticket_id for n in hits}) / 10)
print(f"recall@10 vs brute force: {np.mean(recalls):.3f} "
      f"(budget 600 of {len(index)} candidates)")
print(f"median query time: {np.median(times) * 1e3:.2f} ms")

# --- the budget strictly caps inspected candidates ------------------------
_, stats = query_with_stats(index, points[0], 10, search_budget=600)
print(f"candidates inspected: {stats.candidates_inspected} <= 600, "
      f"leaves visited: {stats.leaves_visited}")

# --- indexes round-trip bit-exactly through their binary format -----------
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.idx"
    save_index(index, path)
    loaded = load_index(path)
    same = query(loaded, points[7], 5, 600) == query(index, points[7], 5, 600)
    print(f"\nsaved {path.stat().st_size / 1e6:.1f} MB; "
          f"reloaded index answers identically: {same}")
