"""Top-K accuracy and the model evaluation report.

Top-K accuracy is the fraction of examples whose true label appears among
the K highest-ranked predictions.  It is the primary metric here because
several groups (and resolvers) can legitimately handle one ticket, so
exact-match accuracy understates a ranked suggester.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = ["EvalRow", "EvalReport", "top_k_accuracy", "evaluate_all"]

# Production-scale reference targets for orientation in report footers:
# measured on a proprietary corpus with fine-tuned transformer encoders,
# so they are context, not a reproduction target for this package.
REFERENCE_POINTS = {"group_top3": 0.952, "ensemble_top5": 0.790}


def top_k_accuracy(rankings, labels, k):
    """Fraction of examples whose true label is in the first k ranked labels.

    Parameters
    ----------
    rankings : sequence of ranked label sequences (best first)
    labels : sequence of true labels, same length
    k : int >= 1
    """
    rankings = list(rankings)
    labels = list(labels)
    if len(rankings) != len(labels):
        raise ValueError("rankings and labels must have equal length")
    if not rankings:
        raise ValueError("cannot compute accuracy over zero examples")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(
        1 for ranked, truth in zip(rankings, labels) if truth in list(ranked)[:k]
    )
    return hits / len(labels)


@dataclass(frozen=True)
class EvalRow:
    name: str
    accuracies: dict            # k -> accuracy
    train_seconds: float | None = None
    infer_seconds: float | None = None  # median per-example


@dataclass(frozen=True)
class EvalReport:
    rows: tuple
    footer: dict = field(default_factory=dict)

    def to_records(self):
        out = []
        for r in self.rows:
            rec = {"model": r.name}
            rec.update({f"top_{k}": v for k, v in sorted(r.accuracies.items())})
            rec["train_seconds"] = r.train_seconds
            rec["infer_seconds"] = r.infer_seconds
            out.append(rec)
        return out

    def write_records(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for rec in self.to_records():
                f.write(json.dumps(rec) + "\n")
            if self.footer:
                f.write(json.dumps({"footer": self.footer}) + "\n")

    def to_text(self):
        ks = sorted({k for r in self.rows for k in r.accuracies})
        headers = ["model"] + [f"top-{k}" for k in ks] + ["train s", "infer s"]
        lines = []
        for r in self.rows:
            cells = [r.name]
            for k in ks:
                v = r.accuracies.get(k)
                cells.append("" if v is None else f"{v:.3f}")
            cells.append("" if r.train_seconds is None else f"{r.train_seconds:.1f}")
            cells.append("" if r.infer_seconds is None else f"{r.infer_seconds * 1e3:.2f}ms")
            lines.append(cells)
        widths = [
            max(len(headers[c]), *(len(row[c]) for row in lines))
            for c in range(len(headers))
        ]
        def fmt(cells):
            return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        out = [fmt(headers), fmt(["-" * w for w in widths])]
        out.extend(fmt(row) for row in lines)
        for key, value in self.footer.items():
            out.append(f"# {key}: {value}")
        return "\n".join(out)


def _median_seconds(fn, items, sample=200):
    """Median wall time of fn(item) over a sample, monotonic clock."""
    times = []
    for item in items[:sample]:
        t0 = time.perf_counter()
        fn(item)
        times.append(time.perf_counter() - t0)
    return float(np.median(times)) if times else None


def evaluate_all(bundle, test_tickets, ks=(1, 3, 5), group_ks=(1, 2, 3),
                 timing_sample=200):
    """Evaluate every model in a bundle on a test split.

    Rows: the group classifier (at ``group_ks``), then the four resolver
    models and the ensemble (at ``ks``), in the ensemble's canonical model
    order.  Per-row timings are medians over a timed sample of examples.
    """
    # Imported here: pipeline depends on lower-level modules, and metrics
    # sits on top of both.
    from . import pipeline as pl

    test_tickets = list(test_tickets)
    if not test_tickets:
        raise ValueError("test split is empty")
    stage_secs = bundle.manifest.get("stage_seconds", {})

    embeddings = pl.encode_tickets(bundle, test_tickets)
    group_probs = pl.group_probs_matrix(bundle, embeddings)
    model_probs = pl.resolver_model_matrix(bundle, test_tickets, embeddings)
    combined = np.einsum(
        "nmr,m->nr", model_probs, bundle.ensemble_weights.as_array()
    )

    group_labels = [t.group for t in test_tickets]
    resolver_labels = [t.resolver for t in test_tickets]
    group_vocab = list(bundle.groups)
    resolver_vocab = list(bundle.resolvers)

    def rankings(matrix, vocab, depth):
        order = np.argsort(-matrix, axis=1, kind="stable")[:, :depth]
        return [[vocab[j] for j in row] for row in order]

    rows = [
        EvalRow(
            name="group_classifier",
            accuracies={
                k: top_k_accuracy(
                    rankings(group_probs, group_vocab, max(group_ks)),
                    group_labels, k)
                for k in group_ks
            },
            train_seconds=stage_secs.get("group_head"),
            infer_seconds=_median_seconds(
                lambda e: pl.group_probs_matrix(bundle, e[None, :]),
                list(embeddings), timing_sample),
        )
    ]

    model_stage = {
        "resolver": "resolver_head",
        "resolver_list": "resolver_lists",
        "group": "group_prior",
        "similar": "scorer_params",
    }
    max_k = max(ks)
    sample_tickets = test_tickets[:timing_sample]
    sample_embeddings = embeddings[: len(sample_tickets)]
    for m, name in enumerate(pl.MODEL_NAMES):
        timer = _TimedModel(bundle, name)
        rows.append(
            EvalRow(
                name=f"{name}_model",
                accuracies={
                    k: top_k_accuracy(
                        rankings(model_probs[:, m, :], resolver_vocab, max_k),
                        resolver_labels, k)
                    for k in ks
                },
                train_seconds=stage_secs.get(model_stage[name]),
                infer_seconds=_median_seconds(
                    timer, list(zip(sample_tickets, sample_embeddings)),
                    timing_sample),
            )
        )
    rows.append(
        EvalRow(
            name="ensemble",
            accuracies={
                k: top_k_accuracy(
                    rankings(combined, resolver_vocab, max_k),
                    resolver_labels, k)
                for k in ks
            },
            train_seconds=stage_secs.get("total"),
            infer_seconds=_median_seconds(
                lambda te: pl.resolver_model_matrix(
                    bundle, [te[0]], te[1][None, :]),
                list(zip(sample_tickets, sample_embeddings)), timing_sample),
        )
    )
    footer = {
        "test_examples": len(test_tickets),
        "reference_group_top3": REFERENCE_POINTS["group_top3"],
        "reference_ensemble_top5": REFERENCE_POINTS["ensemble_top5"],
        "reference_note": (
            "reference accuracies come from a production-scale corpus with "
            "transformer encoders and are context, not a target reproduced here"
        ),
    }
    return EvalReport(rows=tuple(rows), footer=footer)


class _TimedModel:
    """Callable timing one model's single-example forward pass."""

    def __init__(self, bundle, name):
        from . import pipeline as pl
        self._fn = pl.single_model_fn(bundle, name)

    def __call__(self, ticket_embedding):
        ticket, embedding = ticket_embedding
        return self._fn(ticket, embedding)
