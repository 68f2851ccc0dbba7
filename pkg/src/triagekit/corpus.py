"""Ticket corpus handling: ingestion, cleaning, splitting, and synthetic corpora.

A ticket is a (group, resolver, description) record.  Everything downstream
(classifiers, topic models, the similarity index) trains on the cleaned form
produced here, so the tokenizer in this module is the single source of truth
for text normalization.
"""

import csv
import hashlib
import io
import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

__all__ = [
    "RawTicket",
    "CleanTicket",
    "DatasetSplit",
    "CleanResult",
    "SynthSpec",
    "CorpusError",
    "SchemaError",
    "MalformedRecordError",
    "tokenize",
    "ingest",
    "clean",
    "split",
    "synth_corpus",
    "corpus_fingerprint",
]

REQUIRED_COLUMNS = ("group", "resolver", "description")

# Alphanumeric runs after lowercasing; underscores and punctuation are
# boundaries.  No stemming: the encoder owns any further featurization.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class CorpusError(Exception):
    """Base class for corpus ingestion/validation failures."""


class SchemaError(CorpusError):
    """A required column or key is missing from the input."""


class MalformedRecordError(CorpusError):
    """A single record could not be parsed; carries the record index."""

    def __init__(self, record_index, message):
        super().__init__(f"record {record_index}: {message}")
        self.record_index = record_index


@dataclass(frozen=True, slots=True)
class RawTicket:
    """One historical ticket as ingested, before validation."""

    id: str
    group: str
    resolver: str
    description: str
    resolved_at: str | None = None


@dataclass(frozen=True, slots=True)
class CleanTicket:
    """A validated ticket plus its normalized token sequence."""

    id: str
    group: str
    resolver: str
    description: str
    normalized_tokens: tuple[str, ...]
    resolved_at: str | None = None


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/validation/test partition of a cleaned corpus."""

    train: tuple[CleanTicket, ...]
    validation: tuple[CleanTicket, ...]
    test: tuple[CleanTicket, ...]
    seed: int

    def __len__(self):
        return len(self.train) + len(self.validation) + len(self.test)


@dataclass(frozen=True)
class CleanResult:
    """Cleaned tickets plus per-reason drop counts."""

    tickets: tuple[CleanTicket, ...]
    dropped: dict[str, int] = field(default_factory=dict)


def tokenize(text):
    """Lowercase ``text`` and return its alphanumeric tokens.

    Deterministic across platforms: Unicode word characters minus the
    underscore, split at every other boundary.
    """
    return _TOKEN_RE.findall(text.lower())


def _as_text_stream(source):
    if isinstance(source, (str, bytes)):
        data = source.encode("utf-8") if isinstance(source, str) else source
        return io.TextIOWrapper(io.BytesIO(data), encoding="utf-8")
    if hasattr(source, "read"):
        raw = source.read()
        if isinstance(raw, str):
            return io.StringIO(raw)
        return io.TextIOWrapper(io.BytesIO(raw), encoding="utf-8")
    raise TypeError(f"unsupported ingest source: {type(source)!r}")


def ingest(source, format="csv"):
    """Parse a byte stream of tickets into :class:`RawTicket` records.

    Parameters
    ----------
    source : bytes, str, or binary file-like
        UTF-8 encoded CSV (RFC-4180, header row) or JSON-Lines content.
    format : {"csv", "jsonl"}

    Returns
    -------
    list of RawTicket, in file order.  Records without an ``id`` get the
    0-based row ordinal as their id.

    Raises
    ------
    SchemaError
        if a required column/key (group, resolver, description) is absent.
    MalformedRecordError
        for undecodable or structurally broken records; carries the index.
    """
    try:
        stream = _as_text_stream(source)
    except UnicodeDecodeError as exc:
        raise MalformedRecordError(0, f"not valid UTF-8: {exc}") from exc

    if format == "csv":
        tickets = _ingest_csv(stream)
    elif format == "jsonl":
        tickets = _ingest_jsonl(stream)
    else:
        raise ValueError(f"unknown format {format!r}; expected 'csv' or 'jsonl'")

    seen = set()
    for i, t in enumerate(tickets):
        if t.id in seen:
            raise MalformedRecordError(i, f"duplicate ticket id {t.id!r}")
        seen.add(t.id)
    return tickets


def _ingest_csv(stream):
    try:
        reader = csv.DictReader(stream)
        header = reader.fieldnames
    except UnicodeDecodeError as exc:
        raise MalformedRecordError(0, f"not valid UTF-8: {exc}") from exc
    if header is None:
        raise SchemaError("empty input: no header row")
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    tickets = []
    for i, row in enumerate(reader):
        try:
            if any(row.get(c) is None for c in REQUIRED_COLUMNS):
                raise MalformedRecordError(i, "row has fewer fields than the header")
            tickets.append(
                RawTicket(
                    id=(row.get("id") or str(i)),
                    group=row["group"],
                    resolver=row["resolver"],
                    description=row["description"],
                    resolved_at=row.get("resolved_at") or None,
                )
            )
        except UnicodeDecodeError as exc:
            raise MalformedRecordError(i, f"not valid UTF-8: {exc}") from exc
    return tickets


def _ingest_jsonl(stream):
    tickets = []
    i = -1
    for line in stream:
        if not line.strip():
            continue
        i += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(i, f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise MalformedRecordError(i, "record is not a JSON object")
        missing = [c for c in REQUIRED_COLUMNS if c not in obj]
        if missing:
            raise SchemaError(
                f"record {i} missing required key(s): {', '.join(missing)}"
            )
        tickets.append(
            RawTicket(
                id=str(obj.get("id", i)),
                group=str(obj["group"]),
                resolver=str(obj["resolver"]),
                description=str(obj["description"]),
                resolved_at=obj.get("resolved_at"),
            )
        )
    return tickets


def clean(tickets, min_tokens=3):
    """Validate tickets, dropping unusable ones, and normalize text.

    Drop rules, checked in order, one reason per dropped ticket:

    * ``empty_group`` - group blank after whitespace trim
    * ``empty_resolver`` - resolver blank after whitespace trim
    * ``nonsense_description`` - fewer than ``min_tokens`` alphanumeric
      tokens after normalization

    Cleaning is total (never raises for ticket content) and idempotent.

    Returns
    -------
    CleanResult with the surviving tickets (input order preserved) and a
    ``dropped`` mapping of reason -> count.
    """
    if min_tokens < 1:
        raise ValueError("min_tokens must be >= 1")
    kept = []
    dropped = Counter()
    for t in tickets:
        group = t.group.strip()
        resolver = t.resolver.strip()
        if not group:
            dropped["empty_group"] += 1
            continue
        if not resolver:
            dropped["empty_resolver"] += 1
            continue
        tokens = tuple(tokenize(t.description))
        if len(tokens) < min_tokens:
            dropped["nonsense_description"] += 1
            continue
        kept.append(
            CleanTicket(
                id=t.id,
                group=group,
                resolver=resolver,
                description=t.description,
                normalized_tokens=tokens,
                resolved_at=t.resolved_at,
            )
        )
    return CleanResult(tickets=tuple(kept), dropped=dict(dropped))


def split(tickets, ratios=(8, 1, 1), seed=0, by_time=False):
    """Partition tickets into train/validation/test.

    Default is a seed-deterministic uniform shuffle followed by contiguous
    slicing; ``by_time=True`` instead sorts by ``resolved_at`` (ties by id)
    and slices chronologically.  Part sizes follow ``ratios`` within a
    rounding error of one item each.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be three positive numbers")
    tickets = list(tickets)
    n = len(tickets)
    if n < 10:
        raise CorpusError(f"need at least 10 tickets to split, got {n}")
    if by_time:
        tickets.sort(key=lambda t: (t.resolved_at is None, t.resolved_at or "", t.id))
    else:
        random.Random(seed).shuffle(tickets)
    total = sum(ratios)
    n_train = int(n * ratios[0] / total)
    n_val = int(n * ratios[1] / total)
    return DatasetSplit(
        train=tuple(tickets[:n_train]),
        validation=tuple(tickets[n_train : n_train + n_val]),
        test=tuple(tickets[n_train + n_val :]),
        seed=seed,
    )


@dataclass(frozen=True)
class SynthSpec:
    """Shape of a synthetic corpus with planted topic/group structure.

    Each topic is owned by one group and a small subset of that group's
    resolvers.  A topic's vocabulary has two parts: general tokens shared
    by all its tickets, and a small specialization vocabulary per owning
    resolver (mirroring the within-group task specialization real corpora
    show).  Tickets mix ``specialization_rate`` of their tokens from their
    resolver's part, except a ``noise_rate`` fraction whose tokens are
    drawn from the shuffled global vocabulary instead.

    ``cross_assign_rate`` of non-noise tickets are resolved by a group
    member outside the owning subset (overflow handling): their text still
    describes the topic, so only group-level knowledge can suggest their
    resolver.

    Topic popularity follows a Zipf law with exponent ``topic_skew``
    (0 = uniform): some issues are simply far more common than others.
    """

    n_groups: int = 20
    resolvers_per_group: int = 7
    n_topics: int = 40
    tickets: int = 5000
    noise_rate: float = 0.1
    tokens_per_ticket: tuple[int, int] = (8, 20)
    vocab_per_topic: int = 40
    resolver_vocab: int = 8
    specialization_rate: float = 0.3
    cross_assign_rate: float = 0.25
    topic_skew: float = 0.0

    @property
    def resolver_slots(self):
        return min(3, self.resolvers_per_group)

    def validate(self):
        if min(self.n_groups, self.resolvers_per_group, self.n_topics,
               self.tickets, self.vocab_per_topic) < 1:
            raise ValueError("all synthetic corpus counts must be >= 1")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise_rate must be in [0, 1)")
        if not 0.0 <= self.specialization_rate <= 1.0 or self.resolver_vocab < 0:
            raise ValueError("invalid resolver specialization settings")
        if not 0.0 <= self.cross_assign_rate < 1.0:
            raise ValueError("cross_assign_rate must be in [0, 1)")
        if self.topic_skew < 0.0:
            raise ValueError("topic_skew must be >= 0")
        lo, hi = self.tokens_per_ticket
        if lo < 1 or hi < lo:
            raise ValueError("tokens_per_ticket must be a nonempty range")


def _general_vocabulary(topic, spec):
    return [f"t{topic:03d}w{j:02d}" for j in range(spec.vocab_per_topic)]


def _specialization_vocabulary(topic, slot, spec):
    return [f"t{topic:03d}r{slot}w{j:02d}" for j in range(spec.resolver_vocab)]


def synth_topic_vocabulary(topic, spec=None):
    """The full private token list of one synthetic topic (deterministic).

    Covers both the general tokens and every resolver slot's
    specialization tokens, so a zero-noise ticket's tokens always form a
    subset of exactly one topic's vocabulary.
    """
    spec = spec or SynthSpec()
    vocab = _general_vocabulary(topic, spec)
    for slot in range(spec.resolver_slots):
        vocab.extend(_specialization_vocabulary(topic, slot, spec))
    return vocab


def synth_corpus(spec, seed=0):
    """Generate a corpus of CleanTickets with planted structure.

    Deterministic for a fixed (spec, seed).  Topic ``t`` is owned by group
    ``t % n_groups`` and by a resolver subset of ``resolver_slots`` of that
    group's resolvers, weighted so earlier slots handle more tickets
    (giving the group-prior model a real signal).
    """
    spec.validate()
    rng = random.Random(seed)

    groups = [f"group-{g:02d}" for g in range(spec.n_groups)]
    resolvers = {
        g: [f"res-{gi:02d}-{r}" for r in range(spec.resolvers_per_group)]
        for gi, g in enumerate(groups)
    }
    topic_group = [t % spec.n_groups for t in range(spec.n_topics)]
    general_vocab = [_general_vocabulary(t, spec) for t in range(spec.n_topics)]
    spec_vocab = [
        [_specialization_vocabulary(t, s, spec) for s in range(spec.resolver_slots)]
        for t in range(spec.n_topics)
    ]
    global_vocab = [
        w for t in range(spec.n_topics) for w in synth_topic_vocabulary(t, spec)
    ]
    topic_resolvers = [
        rng.sample(resolvers[groups[topic_group[t]]], spec.resolver_slots)
        for t in range(spec.n_topics)
    ]
    resolver_weights = [1.0 / (j + 1) for j in range(spec.resolver_slots)]
    topic_weights = None
    if spec.topic_skew > 0:
        topic_weights = [1.0 / (t + 1) ** spec.topic_skew
                         for t in range(spec.n_topics)]

    base_time = datetime(2024, 1, 1, tzinfo=timezone.utc)
    lo, hi = spec.tokens_per_ticket
    tickets = []
    for i in range(spec.tickets):
        if topic_weights is None:
            topic = rng.randrange(spec.n_topics)
        else:
            topic = rng.choices(range(spec.n_topics), weights=topic_weights)[0]
        slot = rng.choices(range(spec.resolver_slots),
                           weights=resolver_weights)[0]
        resolver = topic_resolvers[topic][slot]
        noisy = rng.random() < spec.noise_rate
        if not noisy and rng.random() < spec.cross_assign_rate:
            outside = [r for r in resolvers[groups[topic_group[topic]]]
                       if r not in topic_resolvers[topic]]
            if outside:
                # overflow ticket: the text keeps describing slot's issue,
                # someone else in the group resolved it
                resolver = rng.choice(outside)
        length = rng.randint(lo, hi)
        if noisy:
            tokens = tuple(rng.choices(global_vocab, k=length))
        else:
            special = spec_vocab[topic][slot]
            tokens = tuple(
                rng.choice(special)
                if special and rng.random() < spec.specialization_rate
                else rng.choice(general_vocab[topic])
                for _ in range(length)
            )
        tickets.append(
            CleanTicket(
                id=f"synth-{i:06d}",
                group=groups[topic_group[topic]],
                resolver=resolver,
                description=" ".join(tokens),
                normalized_tokens=tokens,
                resolved_at=(base_time + timedelta(minutes=i)).isoformat(),
            )
        )
    return tickets


def corpus_fingerprint(tickets):
    """Stable hex digest identifying a ticket collection's contents."""
    h = hashlib.sha256()
    for t in tickets:
        h.update(t.id.encode("utf-8"))
        h.update(b"\x00")
        h.update(t.group.encode("utf-8"))
        h.update(b"\x00")
        h.update(t.resolver.encode("utf-8"))
        h.update(b"\x00")
        h.update(t.description.encode("utf-8"))
        h.update(b"\x01")
    return h.hexdigest()
