"""Serve suggestions over HTTP and record a human assignment.

Trains a small bundle, starts the REST service on a local port, exercises
every endpoint with plain HTTP requests, then shuts down.

Run:  python demos/07_suggestion_service.py
"""

import tempfile
import threading
import time
from pathlib import Path

import requests
import uvicorn

from triagekit import (PipelineConfig, SynthSpec, TrainParams, split,
                       synth_corpus, train_pipeline)
from triagekit.service import create_app

spec = SynthSpec(n_groups=4, resolvers_per_group=4, n_topics=8,
                 tickets=800, noise_rate=0.1)
dataset = split(synth_corpus(spec, seed=2), seed=2)
config = PipelineConfig(seed=2, dimension=128,
                        head=TrainParams(lr=4.0, epochs=30, l2=1e-6),
                        lda_topics=10, lda_iterations=60, min_cluster_size=4,
                        ann_trees=8, ann_leaf_size=16, similar_neighbors=50,
                        search_budget=400)
print("training a small bundle ...")
bundle = train_pipeline(dataset, config)

tmp = tempfile.mkdtemp()
app = create_app(bundle=bundle, assignment_log=Path(tmp) / "assignments.log")
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=8731,
                                       log_level="warning"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
base = "http://127.0.0.1:8731"
while True:
    try:
        if requests.get(f"{base}/v1/health", timeout=1).status_code in (200, 503):
            break
    except requests.RequestException:
        time.sleep(0.05)

print("health:", requests.get(f"{base}/v1/health").json())

body = requests.post(f"{base}/v1/suggest", json={
    "description": dataset.test[0].description,
    "k_group": 3, "k_resolver": 5, "n_similar": 3,
}).json()
print("groups:   ", [(g["name"], round(g["score"], 3)) for g in body["groups"]])
print("resolvers:", [(r["name"], round(r["score"], 3)) for r in body["resolvers"]])
print("timings:  ", body["timings_ms"])

ack = requests.post(f"{base}/v1/assignments", json={
    "description": dataset.test[0].description,
    "suggested_groups": [g["name"] for g in body["groups"]],
    "suggested_resolvers": [r["name"] for r in body["resolvers"]],
    "chosen_group": body["groups"][0]["name"],
    "chosen_resolver": body["resolvers"][0]["name"],
    "chooser": "demo-router",
}).json()
print("assignment recorded with sequence number:", ack["seq"])

print("latency summary:", requests.get(f"{base}/v1/metrics").json())

server.should_exit = True
thread.join(timeout=5)
print("server stopped")
