"""Training and inference pipelines.

``train_pipeline`` runs every training stage in order and returns a
:class:`ModelBundle`, the single immutable aggregate the inference side
consumes.  ``suggest`` runs the full inference path: encode once, rank
groups, gather neighbors, combine the four resolver models, and assemble
similar-ticket snippets, reporting per-stage wall times.

Bundles persist as a directory of checksummed member files plus a
manifest; loads verify the format version, the config hash, and every
checksum before reconstructing the models.
"""

import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import ann as ann_mod
from .classifier import (LabelVocabulary, SoftmaxHead, TrainParams,
                         predict_proba_matrix, train_head)
from .corpus import corpus_fingerprint, tokenize
from .discovery import ResolverList, discover_resolver_lists
from .encoder import EncoderModel, encode_corpus, encode_tokens, fit_encoder
from .ensemble import (MODEL_NAMES, EnsembleWeights, GroupResolverPrior,
                       fit_group_prior, fit_weights)
from .similar import (FitSearch, ScorerParams, fit_params, resolver_scores,
                      scores_to_probs)
from .topics import TopicModel, fit_lda

__all__ = [
    "PipelineConfig",
    "ModelBundle",
    "Suggestions",
    "SimilarTicket",
    "PipelineError",
    "PipelineStageError",
    "EmptyDescriptionError",
    "BundleError",
    "BundleVersionError",
    "BundleMemberMissingError",
    "BundleChecksumError",
    "BundleConfigHashError",
    "MODEL_NAMES",
    "train_pipeline",
    "suggest",
    "save_bundle",
    "load_bundle",
    "refit_scorer_params",
    "encode_tickets",
    "group_probs_matrix",
    "resolver_model_matrix",
    "single_model_fn",
    "config_hash",
]

logger = logging.getLogger(__name__)

BUNDLE_FORMAT_VERSION = 1
MANIFEST_FILE = "manifest.json"


class PipelineError(Exception):
    pass


class PipelineStageError(PipelineError):
    def __init__(self, stage, cause):
        super().__init__(f"training stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class EmptyDescriptionError(PipelineError):
    """The description cleans to nothing; the caller must surface this."""

    reason = "empty_after_cleaning"


class BundleError(PipelineError):
    pass


class BundleVersionError(BundleError):
    def __init__(self, found, supported):
        super().__init__(
            f"bundle format version {found} not supported "
            f"(this build reads version {supported})"
        )
        self.found = found
        self.supported = supported


class BundleMemberMissingError(BundleError):
    def __init__(self, member):
        super().__init__(f"bundle member file missing: {member}")
        self.member = member


class BundleChecksumError(BundleError):
    def __init__(self, member):
        super().__init__(f"bundle member failed checksum verification: {member}")
        self.member = member


class BundleConfigHashError(BundleError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the training pipeline, JSON-serializable."""

    seed: int = 0
    min_tokens: int = 3
    dimension: int = 512
    hash_seed: int = 1
    # Higher lr / weaker l2 than the generic TrainParams default: pipeline
    # heads always see unit-norm hashed TF-IDF features, which train well
    # with an aggressive decaying step.
    head: TrainParams = TrainParams(lr=4.0, epochs=150, l2=1e-6, patience=10,
                                    lr_decay=0.05)
    lda_topics: int = 64
    lda_alpha: float | None = None
    lda_beta: float = 0.01
    lda_iterations: int = 300
    min_cluster_size: int = 5
    topic_size_cap: int = 20000
    ann_trees: int = 16
    ann_leaf_size: int = 32
    similar_neighbors: int = 500
    search_budget: int = 2000
    scorer_search: FitSearch = FitSearch()
    weight_resolution: float = 0.05

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "head" in data:
            data["head"] = TrainParams(**data["head"])
        if "scorer_search" in data:
            ss = dict(data["scorer_search"])
            for key in ("theta_min_grid", "theta_max_grid", "beta_grid"):
                if key in ss:
                    ss[key] = tuple(ss[key])
            data["scorer_search"] = FitSearch(**ss)
        return cls(**data)


def config_hash(config):
    payload = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SimilarTicket:
    ticket_id: str
    snippet: str
    resolver: str
    distance: float


@dataclass(frozen=True)
class Suggestions:
    """The triage output: ranked groups, ranked resolvers, similar tickets."""

    groups: tuple          # (group, probability), descending
    resolvers: tuple       # (resolver, probability), descending
    similar: tuple         # SimilarTicket, ascending distance
    timings_ms: dict       # encode / group / ann / resolver / total


@dataclass
class ModelBundle:
    """Versioned aggregate of every trained artifact needed for inference."""

    config: PipelineConfig
    encoder: EncoderModel
    group_head: SoftmaxHead
    resolver_head: SoftmaxHead
    list_head: SoftmaxHead | None
    topic_model: TopicModel
    resolver_lists: tuple
    index: ann_mod.AnnIndex
    group_prior: GroupResolverPrior
    scorer_params: ScorerParams
    ensemble_weights: EnsembleWeights
    ticket_meta: dict
    manifest: dict
    _list_matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def groups(self):
        return self.group_head.vocabulary

    @property
    def resolvers(self):
        return self.resolver_head.vocabulary

    @property
    def lists(self):
        return self.list_head.vocabulary if self.list_head else None

    @property
    def active_models(self):
        return (True, self.list_head is not None, True, True)

    def list_matrix(self):
        """(n_lists, n_resolvers) conditional frequency matrix, cached."""
        if self._list_matrix is None and self.list_head is not None:
            by_id = {rl.list_id: rl for rl in self.resolver_lists}
            mat = np.zeros((len(self.lists), len(self.resolvers)))
            for i, list_id in enumerate(self.lists):
                for resolver, freq in by_id[list_id].member_resolvers.items():
                    mat[i, self.resolvers.index_of(resolver)] = freq
            self._list_matrix = mat
        return self._list_matrix


def _snippet(description, limit=200):
    if len(description) <= limit:
        return description
    cut = description[:limit]
    space = cut.rfind(" ")
    return cut[:space] if space > 0 else cut


def _stage(name, timings, fn):
    t0 = time.perf_counter()
    try:
        result = fn()
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc
    timings[name] = time.perf_counter() - t0
    logger.info("stage %-14s %.2fs", name, timings[name])
    return result


def train_pipeline(dataset, config=None):
    """Run every training stage over a dataset split; returns a ModelBundle.

    Stage order: encoder, embeddings, group head, resolver head, topic
    model, resolver-list discovery, list head, group prior, ANN index,
    scorer-parameter fit (validation), ensemble-weight fit (validation).
    Any stage failure aborts with the stage name; nothing is persisted
    here (see :func:`save_bundle`).
    """
    config = config or PipelineConfig()
    train = list(dataset.train)
    validation = list(dataset.validation)
    if not train or not validation:
        raise PipelineError("dataset needs nonempty train and validation parts")
    timings = {}
    seeds = {
        "group_head": config.seed + 101,
        "resolver_head": config.seed + 102,
        "list_head": config.seed + 103,
        "lda": config.seed + 201,
        "ann": config.seed + 301,
    }

    encoder = _stage("encoder", timings, lambda: fit_encoder(
        train, dimension=config.dimension, hash_seed=config.hash_seed))
    emb_train = _stage("embeddings", timings, lambda: encode_corpus(encoder, train))
    emb_val = encode_corpus(encoder, validation)

    groups = LabelVocabulary.from_labels(t.group for t in train)
    resolvers = LabelVocabulary.from_labels(t.resolver for t in train)

    def known(pairs, vocab):
        keep = [(e, lbl) for e, lbl in pairs if lbl in vocab]
        if len(keep) < len(pairs):
            logger.warning("dropped %d validation examples with labels unseen "
                           "in training", len(pairs) - len(keep))
        return keep

    val_groups = known(list(zip(emb_val, (t.group for t in validation))), groups)
    group_head = _stage("group_head", timings, lambda: train_head(
        emb_train, [t.group for t in train], params=config.head,
        seed=seeds["group_head"],
        validation=(tuple(zip(*val_groups)) if val_groups else None),
        vocabulary=groups))

    val_resolvers = known(
        list(zip(emb_val, (t.resolver for t in validation))), resolvers)
    resolver_head = _stage("resolver_head", timings, lambda: train_head(
        emb_train, [t.resolver for t in train], params=config.head,
        seed=seeds["resolver_head"],
        validation=(tuple(zip(*val_resolvers)) if val_resolvers else None),
        vocabulary=resolvers))

    topic_model = _stage("topic_model", timings, lambda: fit_lda(
        [t.normalized_tokens for t in train], config.lda_topics,
        alpha=config.lda_alpha, beta=config.lda_beta,
        iterations=config.lda_iterations, seed=seeds["lda"]))

    discovery = _stage("resolver_lists", timings, lambda: discover_resolver_lists(
        train, emb_train, topic_model,
        min_cluster_size=config.min_cluster_size,
        topic_size_cap=config.topic_size_cap))
    list_ids = sorted({rl.list_id for rl in discovery.lists})
    if len(list_ids) >= 2:
        rows = [i for i, t in enumerate(train) if t.id in discovery.ticket_to_list]
        list_head = _stage("list_head", timings, lambda: train_head(
            emb_train[rows],
            [discovery.ticket_to_list[train[i].id] for i in rows],
            params=config.head, seed=seeds["list_head"],
            vocabulary=LabelVocabulary(list_ids)))
    else:
        logger.warning(
            "%d resolver list(s) discovered; the resolver-list model is "
            "disabled and its ensemble weight frozen at 0", len(list_ids))
        list_head = None

    group_prior = _stage("group_prior", timings, lambda: fit_group_prior(
        train, groups=groups, resolvers=resolvers))

    index = _stage("ann_index", timings, lambda: ann_mod.build_index(
        {t.id: emb_train[i] for i, t in enumerate(train)},
        num_trees=config.ann_trees, leaf_size=config.ann_leaf_size,
        seed=seeds["ann"], resolvers={t.id: t.resolver for t in train}))

    def val_neighbor_pairs():
        pairs = []
        k = min(config.similar_neighbors, len(index))
        budget = max(config.search_budget, k)
        for i, t in enumerate(validation):
            if t.resolver not in resolvers:
                continue
            neighbors = ann_mod.query(index, emb_val[i], k, budget)
            pairs.append((neighbors, t.resolver))
        return pairs

    neighbor_pairs = _stage("neighbors", timings, val_neighbor_pairs)
    scorer_params = _stage("scorer_params", timings, lambda: fit_params(
        neighbor_pairs, config.scorer_search))

    bundle = ModelBundle(
        config=config,
        encoder=encoder,
        group_head=group_head,
        resolver_head=resolver_head,
        list_head=list_head,
        topic_model=topic_model,
        resolver_lists=tuple(discovery.lists),
        index=index,
        group_prior=group_prior,
        scorer_params=scorer_params,
        ensemble_weights=EnsembleWeights((1.0, 0.0, 0.0, 0.0)),
        ticket_meta={
            t.id: {"resolver": t.resolver, "snippet": _snippet(t.description)}
            for t in train
        },
        manifest={},
    )

    def fit_ensemble():
        usable = [
            (i, t) for i, t in enumerate(validation) if t.resolver in resolvers
        ]
        if not usable:
            raise PipelineError("no validation ticket has a trainable resolver")
        rows = [i for i, _ in usable]
        tickets = [t for _, t in usable]
        probs = resolver_model_matrix(bundle, tickets, emb_val[rows])
        true_idx = np.array([resolvers.index_of(t.resolver) for t in tickets])
        return fit_weights(probs, true_idx,
                           resolution=config.weight_resolution,
                           active=bundle.active_models)

    bundle.ensemble_weights = _stage("ensemble_weights", timings, fit_ensemble)

    timings["total"] = sum(timings.values())
    bundle.manifest = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "seeds": seeds,
        "config_hash": config_hash(config),
        "corpus_fingerprint": corpus_fingerprint(
            list(dataset.train) + list(dataset.validation) + list(dataset.test)
        ),
        "split_seed": dataset.seed,
        "stage_seconds": {k: round(v, 4) for k, v in timings.items()},
        "list_head_present": list_head is not None,
        "counts": {
            "train": len(train),
            "validation": len(validation),
            "test": len(dataset.test),
            "groups": len(groups),
            "resolvers": len(resolvers),
            "resolver_lists": len(discovery.lists),
            "discovery_noise": discovery.noise_count,
        },
    }
    return bundle


# ---------------------------------------------------------------------------
# batch model forward passes (shared by suggest and evaluation)

def encode_tickets(bundle, tickets):
    return encode_corpus(bundle.encoder, tickets)


def group_probs_matrix(bundle, embeddings):
    return predict_proba_matrix(bundle.group_head, embeddings)


def _similar_probs_row(bundle, embedding, out):
    k = min(bundle.config.similar_neighbors, len(bundle.index))
    budget = max(bundle.config.search_budget, k)
    neighbors = ann_mod.query(bundle.index, embedding, k, budget)
    return _neighbors_to_row(bundle, neighbors, out)


def _neighbors_to_row(bundle, neighbors, out):
    scores = resolver_scores(neighbors, bundle.scorer_params)
    if scores:
        probs = scores_to_probs(scores)
        for i, label in enumerate(probs.vocabulary):
            out[bundle.resolvers.index_of(label)] = probs.values[i]
    return out


def resolver_model_matrix(bundle, tickets, embeddings, neighbors_per_row=None):
    """(n, 4, R) aligned probabilities of the four resolver models."""
    embeddings = np.asarray(embeddings)
    n = embeddings.shape[0]
    r = len(bundle.resolvers)
    out = np.zeros((n, 4, r))
    out[:, 0, :] = predict_proba_matrix(bundle.resolver_head, embeddings)
    if bundle.list_head is not None:
        list_probs = predict_proba_matrix(bundle.list_head, embeddings)
        out[:, 1, :] = list_probs @ bundle.list_matrix()
    out[:, 2, :] = group_probs_matrix(bundle, embeddings) @ bundle.group_prior.matrix
    for i in range(n):
        if neighbors_per_row is not None:
            _neighbors_to_row(bundle, neighbors_per_row[i], out[i, 3, :])
        else:
            _similar_probs_row(bundle, embeddings[i], out[i, 3, :])
    return out


def single_model_fn(bundle, name):
    """A single-example forward pass for one model, for timing runs."""
    if name == "resolver":
        return lambda t, e: predict_proba_matrix(bundle.resolver_head, e[None, :])
    if name == "resolver_list":
        if bundle.list_head is None:
            return lambda t, e: None
        return lambda t, e: (
            predict_proba_matrix(bundle.list_head, e[None, :])
            @ bundle.list_matrix()
        )
    if name == "group":
        return lambda t, e: (
            group_probs_matrix(bundle, e[None, :]) @ bundle.group_prior.matrix
        )
    if name == "similar":
        return lambda t, e: _similar_probs_row(
            bundle, e, np.zeros(len(bundle.resolvers)))
    raise ValueError(f"unknown model {name!r}")


def suggest(bundle, description, k_group=3, k_resolver=5, n_similar=10):
    """Triage one ticket description against a trained bundle.

    Raises EmptyDescriptionError when the text has no alphanumeric tokens
    at all; anything that survives tokenization is accepted (training-time
    cleaning is stricter on purpose).
    """
    if min(k_group, k_resolver) < 1 or n_similar < 0:
        raise ValueError("k_group and k_resolver must be >= 1, n_similar >= 0")
    tokens = tokenize(description)
    if not tokens:
        raise EmptyDescriptionError(
            "description is empty after cleaning; nothing to triage"
        )
    t0 = time.perf_counter()
    embedding = encode_tokens(bundle.encoder, tokens)
    t1 = time.perf_counter()

    group_row = group_probs_matrix(bundle, embedding[None, :])[0]
    k_g = min(k_group, len(bundle.groups))
    group_order = np.lexsort((np.arange(len(group_row)), -group_row))[:k_g]
    groups = tuple(
        (bundle.groups[i], float(group_row[i])) for i in group_order
    )
    t2 = time.perf_counter()

    k_sim = min(bundle.config.similar_neighbors, len(bundle.index))
    k_ann = max(min(n_similar, len(bundle.index)), k_sim, 1)
    budget = max(bundle.config.search_budget, k_ann)
    neighbors = ann_mod.query(bundle.index, embedding, k_ann, budget)
    similar = tuple(
        SimilarTicket(
            ticket_id=nb.ticket_id,
            snippet=bundle.ticket_meta.get(nb.ticket_id, {}).get("snippet", ""),
            resolver=nb.resolver or "",
            distance=nb.distance,
        )
        for nb in neighbors[:n_similar]
    )
    t3 = time.perf_counter()

    probs = resolver_model_matrix(
        bundle, None, embedding[None, :],
        neighbors_per_row=[neighbors[:k_sim]],
    )[0]
    combined = bundle.ensemble_weights.as_array() @ probs
    k_r = min(k_resolver, len(bundle.resolvers))
    resolver_order = np.lexsort((np.arange(len(combined)), -combined))[:k_r]
    resolvers = tuple(
        (bundle.resolvers[i], float(combined[i])) for i in resolver_order
    )
    t4 = time.perf_counter()

    return Suggestions(
        groups=groups,
        resolvers=resolvers,
        similar=similar,
        timings_ms={
            "encode": (t1 - t0) * 1e3,
            "group": (t2 - t1) * 1e3,
            "ann": (t3 - t2) * 1e3,
            "resolver": (t4 - t3) * 1e3,
            "total": (t4 - t0) * 1e3,
        },
    )


def refit_scorer_params(bundle, validation_tickets):
    """Re-fit only the similar-ticket scorer parameters on new validation data.

    Returns a copy of the bundle with new scorer params and an updated
    manifest; every other member is reused untouched (stage isolation).
    """
    emb = encode_tickets(bundle, validation_tickets)
    k = min(bundle.config.similar_neighbors, len(bundle.index))
    budget = max(bundle.config.search_budget, k)
    pairs = [
        (ann_mod.query(bundle.index, emb[i], k, budget), t.resolver)
        for i, t in enumerate(validation_tickets)
        if t.resolver in bundle.resolvers
    ]
    new_params = fit_params(pairs, bundle.config.scorer_search)
    new_manifest = dict(bundle.manifest)
    new_manifest["created_at"] = datetime.now(timezone.utc).isoformat()
    return dataclasses.replace(
        bundle, scorer_params=new_params, manifest=new_manifest
    )


# ---------------------------------------------------------------------------
# persistence

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, indent=1)
        f.write("\n")


def _read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _head_to_files(head, directory, stem):
    np.save(directory / f"{stem}_weights.npy", head.weights)
    np.save(directory / f"{stem}_bias.npy", head.bias)
    _write_json(directory / f"{stem}.json",
                {"labels": list(head.vocabulary.labels), "l2": head.l2})
    return [f"{stem}_weights.npy", f"{stem}_bias.npy", f"{stem}.json"]


def _head_from_files(directory, stem):
    meta = _read_json(directory / f"{stem}.json")
    return SoftmaxHead(
        weights=np.load(directory / f"{stem}_weights.npy"),
        bias=np.load(directory / f"{stem}_bias.npy"),
        vocabulary=LabelVocabulary(meta["labels"]),
        l2=meta["l2"],
    )


def save_bundle(bundle, directory):
    """Persist a bundle as a directory of checksummed member files.

    The manifest is written last, so an interrupted save never looks like
    a loadable bundle.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    members = []

    _write_json(directory / "config.json", bundle.config.to_dict())
    members.append("config.json")

    np.save(directory / "encoder_idf.npy", bundle.encoder.idf)
    _write_json(directory / "encoder.json", {
        "dimension": bundle.encoder.dimension,
        "hash_seed": bundle.encoder.hash_seed,
        "fitted_on": bundle.encoder.fitted_on,
        "n_docs": bundle.encoder.n_docs,
    })
    members += ["encoder_idf.npy", "encoder.json"]

    members += _head_to_files(bundle.group_head, directory, "group_head")
    members += _head_to_files(bundle.resolver_head, directory, "resolver_head")
    if bundle.list_head is not None:
        members += _head_to_files(bundle.list_head, directory, "list_head")

    np.save(directory / "topic_word_counts.npy", bundle.topic_model.word_topic_counts)
    np.save(directory / "topic_totals.npy", bundle.topic_model.topic_totals)
    _write_json(directory / "topic_model.json", {
        "n_topics": bundle.topic_model.n_topics,
        "alpha": bundle.topic_model.alpha,
        "beta": bundle.topic_model.beta,
        "tokens": list(bundle.topic_model.tokens),
    })
    members += ["topic_word_counts.npy", "topic_totals.npy", "topic_model.json"]

    _write_json(directory / "resolver_lists.json", [
        {
            "list_id": rl.list_id,
            "member_resolvers": rl.member_resolvers,
            "member_ticket_ids": list(rl.member_ticket_ids),
            "source_topic": rl.source_topic,
        }
        for rl in bundle.resolver_lists
    ])
    members.append("resolver_lists.json")

    ann_mod.save_index(bundle.index, directory / "ann_index.bin")
    members.append("ann_index.bin")

    np.save(directory / "group_prior.npy", bundle.group_prior.matrix)
    _write_json(directory / "group_prior.json", {
        "groups": list(bundle.group_prior.groups.labels),
        "resolvers": list(bundle.group_prior.resolvers.labels),
    })
    members += ["group_prior.npy", "group_prior.json"]

    _write_json(directory / "scorer_params.json", {
        "theta_min": bundle.scorer_params.theta_min,
        "theta_max": bundle.scorer_params.theta_max,
        "beta": bundle.scorer_params.beta,
    })
    members.append("scorer_params.json")

    _write_json(directory / "ensemble_weights.json",
                {"w": list(bundle.ensemble_weights.w),
                 "model_names": list(MODEL_NAMES)})
    members.append("ensemble_weights.json")

    _write_json(directory / "ticket_meta.json", bundle.ticket_meta)
    members.append("ticket_meta.json")

    manifest = dict(bundle.manifest)
    manifest["format_version"] = BUNDLE_FORMAT_VERSION
    manifest["config_hash"] = config_hash(bundle.config)
    manifest["list_head_present"] = bundle.list_head is not None
    manifest["members"] = {m: _sha256(directory / m) for m in members}
    _write_json(directory / MANIFEST_FILE, manifest)
    return directory


def load_bundle(directory):
    """Load a bundle saved by :func:`save_bundle`, verifying integrity.

    Raises BundleVersionError on format mismatch, BundleMemberMissingError
    for absent member files, BundleChecksumError for corrupted ones, and
    BundleConfigHashError when config.json does not match the manifest.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    if not manifest_path.exists():
        raise BundleMemberMissingError(MANIFEST_FILE)
    manifest = _read_json(manifest_path)
    version = manifest.get("format_version")
    if version != BUNDLE_FORMAT_VERSION:
        raise BundleVersionError(version, BUNDLE_FORMAT_VERSION)
    for member, digest in manifest["members"].items():
        path = directory / member
        if not path.exists():
            raise BundleMemberMissingError(member)
        if _sha256(path) != digest:
            raise BundleChecksumError(member)

    config = PipelineConfig.from_dict(_read_json(directory / "config.json"))
    if config_hash(config) != manifest["config_hash"]:
        raise BundleConfigHashError(
            "config.json does not match the manifest config hash"
        )

    enc_meta = _read_json(directory / "encoder.json")
    encoder = EncoderModel(
        dimension=enc_meta["dimension"],
        hash_seed=enc_meta["hash_seed"],
        idf=np.load(directory / "encoder_idf.npy"),
        fitted_on=enc_meta["fitted_on"],
        n_docs=enc_meta["n_docs"],
    )
    group_head = _head_from_files(directory, "group_head")
    resolver_head = _head_from_files(directory, "resolver_head")
    list_head = (
        _head_from_files(directory, "list_head")
        if manifest.get("list_head_present") else None
    )
    topic_meta = _read_json(directory / "topic_model.json")
    topic_model = TopicModel(
        n_topics=topic_meta["n_topics"],
        alpha=topic_meta["alpha"],
        beta=topic_meta["beta"],
        tokens=tuple(topic_meta["tokens"]),
        word_topic_counts=np.load(directory / "topic_word_counts.npy"),
        topic_totals=np.load(directory / "topic_totals.npy"),
    )
    resolver_lists = tuple(
        ResolverList(
            list_id=d["list_id"],
            member_resolvers=d["member_resolvers"],
            member_ticket_ids=tuple(d["member_ticket_ids"]),
            source_topic=d["source_topic"],
        )
        for d in _read_json(directory / "resolver_lists.json")
    )
    prior_meta = _read_json(directory / "group_prior.json")
    group_prior = GroupResolverPrior(
        matrix=np.load(directory / "group_prior.npy"),
        groups=LabelVocabulary(prior_meta["groups"]),
        resolvers=LabelVocabulary(prior_meta["resolvers"]),
    )
    scorer_meta = _read_json(directory / "scorer_params.json")
    weights_meta = _read_json(directory / "ensemble_weights.json")
    return ModelBundle(
        config=config,
        encoder=encoder,
        group_head=group_head,
        resolver_head=resolver_head,
        list_head=list_head,
        topic_model=topic_model,
        resolver_lists=resolver_lists,
        index=ann_mod.load_index(directory / "ann_index.bin"),
        group_prior=group_prior,
        scorer_params=ScorerParams(**scorer_meta),
        ensemble_weights=EnsembleWeights(tuple(weights_meta["w"])),
        ticket_meta=_read_json(directory / "ticket_meta.json"),
        manifest=manifest,
    )
