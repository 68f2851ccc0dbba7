import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from triagekit.corpus import CleanTicket, split, synth_corpus, SynthSpec
from triagekit.classifier import TrainParams
from triagekit.pipeline import (BundleChecksumError, BundleConfigHashError,
                                BundleMemberMissingError, BundleVersionError,
                                EmptyDescriptionError, PipelineConfig,
                                load_bundle, refit_scorer_params, save_bundle,
                                suggest, train_pipeline)
from conftest import TINY_CONFIG


def member_hashes(directory, exclude=("manifest.json",)):
    out = {}
    for path in sorted(Path(directory).iterdir()):
        if path.name in exclude:
            continue
        out[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


@pytest.mark.slow
class TestSuggest:
    def test_training_ticket_description_recovers_its_group(
            self, tiny_bundle, tiny_split):
        hits = 0
        for ticket in tiny_split.train[:30]:
            s = suggest(tiny_bundle, ticket.description)
            if ticket.group in [g for g, _ in s.groups]:
                hits += 1
        assert hits >= 27  # near-duplicate retrieval dominates

    def test_full_k_group_is_permutation(self, tiny_bundle):
        n_groups = len(tiny_bundle.groups)
        s = suggest(tiny_bundle, "t000w01 t000w02 t000w03",
                    k_group=n_groups)
        assert sorted(g for g, _ in s.groups) == sorted(tiny_bundle.groups)

    def test_deterministic(self, tiny_bundle, tiny_split):
        text = tiny_split.test[0].description
        a = suggest(tiny_bundle, text)
        b = suggest(tiny_bundle, text)
        assert a.groups == b.groups
        assert a.resolvers == b.resolvers
        assert a.similar == b.similar

    def test_empty_description_raises(self, tiny_bundle):
        with pytest.raises(EmptyDescriptionError):
            suggest(tiny_bundle, "  !!! ...  ")

    def test_short_description_is_accepted(self, tiny_bundle):
        s = suggest(tiny_bundle, "t000w01 t000w02")
        assert len(s.groups) == 3

    def test_result_shapes_and_ordering(self, tiny_bundle):
        s = suggest(tiny_bundle, "t003w01 t003w05 t003w09", k_group=3,
                    k_resolver=5, n_similar=10)
        assert len(s.groups) == 3 and len(s.resolvers) == 5
        assert len(s.similar) == 10
        group_scores = [p for _, p in s.groups]
        assert group_scores == sorted(group_scores, reverse=True)
        distances = [t.distance for t in s.similar]
        assert distances == sorted(distances)
        for t in s.similar:
            assert t.resolver and t.snippet

    def test_probabilities_within_bounds(self, tiny_bundle):
        s = suggest(tiny_bundle, "t001w01 t001w02 t001w03")
        for _, p in s.groups + s.resolvers:
            assert 0.0 <= p <= 1.0

    def test_timings_decompose(self, tiny_bundle):
        s = suggest(tiny_bundle, "t002w01 t002w02 t002w03 t002w04")
        parts = sum(v for k, v in s.timings_ms.items() if k != "total")
        assert parts == pytest.approx(s.timings_ms["total"],
                                      rel=0.05, abs=0.05)


@pytest.mark.slow
class TestDeterminism:
    def test_identical_training_runs_suggest_identically(self):
        spec = SynthSpec(n_groups=3, resolvers_per_group=3, n_topics=6,
                         tickets=240, noise_rate=0.1)
        config = dataclasses.replace(TINY_CONFIG, lda_topics=8,
                                     lda_iterations=30)
        corpus = synth_corpus(spec, seed=7)
        dataset = split(corpus, seed=7)
        a = train_pipeline(dataset, config)
        b = train_pipeline(dataset, config)
        for ticket in dataset.test[:20]:
            sa = suggest(a, ticket.description)
            sb = suggest(b, ticket.description)
            assert sa.groups == sb.groups
            assert sa.resolvers == sb.resolvers
            assert sa.similar == sb.similar


@pytest.mark.slow
class TestPersistence:
    def test_round_trip_replays_suggestions_bit_identically(
            self, tiny_bundle, tiny_bundle_dir, tiny_split):
        loaded = load_bundle(tiny_bundle_dir)
        texts = [t.description for t in tiny_split.test[:100]]
        for text in texts:
            a = suggest(tiny_bundle, text)
            b = suggest(loaded, text)
            assert a.groups == b.groups         # exact float equality
            assert a.resolvers == b.resolvers
            assert a.similar == b.similar

    def test_missing_member_named(self, tiny_bundle, tmp_path):
        directory = tmp_path / "bundle"
        save_bundle(tiny_bundle, directory)
        (directory / "ann_index.bin").unlink()
        with pytest.raises(BundleMemberMissingError, match="ann_index.bin"):
            load_bundle(directory)

    def test_future_format_version_names_both(self, tiny_bundle, tmp_path):
        directory = tmp_path / "bundle"
        save_bundle(tiny_bundle, directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        manifest["format_version"] = 2
        (directory / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(BundleVersionError) as err:
            load_bundle(directory)
        assert err.value.found == 2 and err.value.supported == 1

    def test_checksum_violation_detected(self, tiny_bundle, tmp_path):
        directory = tmp_path / "bundle"
        save_bundle(tiny_bundle, directory)
        path = directory / "scorer_params.json"
        path.write_text(path.read_text().replace("theta", "thetb"))
        with pytest.raises(BundleChecksumError, match="scorer_params.json"):
            load_bundle(directory)

    def test_config_hash_mismatch_detected(self, tiny_bundle, tmp_path):
        directory = tmp_path / "bundle"
        save_bundle(tiny_bundle, directory)
        config = json.loads((directory / "config.json").read_text())
        config["seed"] = 999999
        payload = json.dumps(config, sort_keys=True, indent=1) + "\n"
        (directory / "config.json").write_text(payload)
        manifest = json.loads((directory / "manifest.json").read_text())
        manifest["members"]["config.json"] = hashlib.sha256(
            payload.encode()).hexdigest()
        (directory / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(BundleConfigHashError):
            load_bundle(directory)

    def test_suggest_never_mutates_bundle(self, tiny_bundle, tiny_split,
                                          tmp_path):
        before_dir = tmp_path / "before"
        after_dir = tmp_path / "after"
        save_bundle(tiny_bundle, before_dir)
        for ticket in tiny_split.test[:25]:
            suggest(tiny_bundle, ticket.description)
        save_bundle(tiny_bundle, after_dir)
        assert member_hashes(before_dir) == member_hashes(after_dir)

    def test_scorer_refit_changes_only_scorer_member(
            self, tiny_bundle, tiny_split, tmp_path):
        base_dir = tmp_path / "base"
        refit_dir = tmp_path / "refit"
        save_bundle(tiny_bundle, base_dir)
        refit = refit_scorer_params(tiny_bundle, list(tiny_split.validation))
        save_bundle(refit, refit_dir)
        base = member_hashes(base_dir, exclude=("manifest.json",
                                                "scorer_params.json"))
        after = member_hashes(refit_dir, exclude=("manifest.json",
                                                  "scorer_params.json"))
        assert base == after


@pytest.mark.slow
class TestStageFailure:
    def test_stage_error_names_the_stage(self):
        from triagekit.pipeline import PipelineStageError
        spec = SynthSpec(n_groups=3, resolvers_per_group=3, n_topics=6,
                         tickets=120, noise_rate=0.0)
        dataset = split(synth_corpus(spec, seed=1), seed=1)
        config = dataclasses.replace(TINY_CONFIG, topic_size_cap=1)
        with pytest.raises(PipelineStageError, match="resolver_lists"):
            train_pipeline(dataset, config)


@pytest.mark.slow
class TestDegenerateDiscovery:
    def test_no_resolver_lists_disables_model_two(self):
        # every description unique and incoherent: density clustering finds
        # nothing at this min_cluster_size
        rng = np.random.default_rng(0)
        tickets = []
        for i in range(80):
            tokens = tuple(f"w{rng.integers(0, 4000):04d}" for _ in range(6))
            tickets.append(CleanTicket(
                id=f"u{i}", group=f"g{i % 2}", resolver=f"r{i % 4}",
                description=" ".join(tokens), normalized_tokens=tokens))
        dataset = split(tickets, seed=0)
        config = PipelineConfig(
            seed=0, dimension=64, head=TrainParams(epochs=5),
            lda_topics=2, lda_iterations=10, min_cluster_size=40,
            ann_trees=2, ann_leaf_size=8, similar_neighbors=10,
            search_budget=64)
        bundle = train_pipeline(dataset, config)
        assert bundle.list_head is None
        assert bundle.ensemble_weights.w[1] == 0.0
        s = suggest(bundle, tickets[0].description)
        assert len(s.groups) >= 1
