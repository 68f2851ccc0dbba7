import json
import subprocess
import sys

import pytest

from triagekit.corpus import SynthSpec, synth_corpus

CONFIG = {
    "seed": 3,
    "dimension": 64,
    "head": {"epochs": 8},
    "lda_topics": 6,
    "lda_iterations": 15,
    "min_cluster_size": 4,
    "ann_trees": 4,
    "ann_leaf_size": 8,
    "similar_neighbors": 20,
    "search_budget": 120,
}


def run_cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "triagekit.cli", *args],
        capture_output=True, text=True, env=env,
    )


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    directory = tmp_path_factory.mktemp("cli-corpus")
    path = directory / "corpus.jsonl"
    spec = SynthSpec(n_groups=3, resolvers_per_group=3, n_topics=6,
                     tickets=300, noise_rate=0.05)
    with open(path, "w", encoding="utf-8") as f:
        for t in synth_corpus(spec, seed=3):
            f.write(json.dumps({
                "id": t.id, "group": t.group, "resolver": t.resolver,
                "description": t.description, "resolved_at": t.resolved_at,
            }) + "\n")
    return path


@pytest.fixture(scope="module")
def trained_bundle_dir(corpus_file, tmp_path_factory):
    directory = tmp_path_factory.mktemp("cli-bundle")
    config_path = directory / "config.json"
    config_path.write_text(json.dumps(CONFIG))
    result = run_cli("train", "--corpus", str(corpus_file),
                     "--config", str(config_path),
                     "--out-bundle", str(directory / "bundle"))
    assert result.returncode == 0, result.stderr
    return directory / "bundle"


@pytest.mark.slow
class TestCli:
    def test_ingest_writes_clean_jsonl(self, tmp_path):
        raw = tmp_path / "raw.csv"
        raw.write_text(
            "group,resolver,description\n"
            "net,alice,vpn tunnel drops hourly\n"
            "net,,orphaned ticket\n"
            "db,carol,replica lag keeps growing\n"
        )
        out = tmp_path / "clean.jsonl"
        result = run_cli("ingest", "--input", str(raw), "--format", "csv",
                         "--output", str(out))
        assert result.returncode == 0
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(records) == 2
        assert "dropped 1" in result.stdout

    def test_train_then_eval(self, trained_bundle_dir, corpus_file, tmp_path):
        records = tmp_path / "rows.jsonl"
        result = run_cli("eval", "--bundle", str(trained_bundle_dir),
                         "--corpus", str(corpus_file),
                         "--records", str(records))
        assert result.returncode == 0, result.stderr
        assert "group_classifier" in result.stdout
        assert "ensemble" in result.stdout
        rows = [json.loads(l) for l in records.read_text().splitlines()]
        assert any(r.get("model") == "ensemble" for r in rows)

    def test_suggest_line_format(self, trained_bundle_dir):
        result = run_cli("suggest", "--bundle", str(trained_bundle_dir),
                         "--text", "t000w01 t000w02 t000w03")
        assert result.returncode == 0, result.stderr
        lines = result.stdout.strip().splitlines()
        assert lines[0].startswith("# groups=3 resolvers=5 similar=10")
        kinds = [l.split("\t")[0] for l in lines[1:]]
        assert kinds.count("group") == 3
        assert kinds.count("resolver") == 5
        assert kinds.count("similar") == 10
        assert len(lines) == 1 + 3 + 5 + 10

    def test_suggest_reads_stdin(self, trained_bundle_dir):
        result = subprocess.run(
            [sys.executable, "-m", "triagekit.cli", "suggest", "--bundle",
             str(trained_bundle_dir), "--stdin"],
            input="t001w01 t001w02 t001w03", capture_output=True, text=True)
        assert result.returncode == 0
        assert "group\t" in result.stdout

    def test_bundle_env_var_default(self, trained_bundle_dir):
        import os
        env = dict(os.environ, TADAA_BUNDLE_DIR=str(trained_bundle_dir))
        result = run_cli("suggest", "--text", "t001w01 t001w02 t001w03",
                         env=env)
        assert result.returncode == 0

    def test_missing_bundle_is_bundle_error(self, tmp_path):
        result = run_cli("eval", "--bundle", str(tmp_path / "nope"),
                         "--corpus", str(tmp_path / "also-nope.jsonl"))
        assert result.returncode == 4

    def test_unknown_flag_is_usage_error(self):
        result = run_cli("train", "--nonsense")
        assert result.returncode == 2

    def test_missing_corpus_is_data_error(self, trained_bundle_dir, tmp_path):
        result = run_cli("eval", "--bundle", str(trained_bundle_dir),
                         "--corpus", str(tmp_path / "missing.jsonl"))
        assert result.returncode == 3
