import pytest

from triagekit.classifier import TrainParams
from triagekit.corpus import SynthSpec, split, synth_corpus
from triagekit.pipeline import PipelineConfig, save_bundle, train_pipeline

TINY_SPEC = SynthSpec(n_groups=5, resolvers_per_group=4, n_topics=10,
                      tickets=600, noise_rate=0.1)

TINY_CONFIG = PipelineConfig(
    seed=1,
    dimension=128,
    head=TrainParams(epochs=25),
    lda_topics=12,
    lda_iterations=60,
    min_cluster_size=4,
    ann_trees=8,
    ann_leaf_size=16,
    similar_neighbors=50,
    search_budget=400,
)


@pytest.fixture(scope="session")
def tiny_split():
    corpus = synth_corpus(TINY_SPEC, seed=1)
    return split(corpus, seed=1)


@pytest.fixture(scope="session")
def tiny_bundle(tiny_split):
    return train_pipeline(tiny_split, TINY_CONFIG)


@pytest.fixture(scope="session")
def tiny_bundle_dir(tiny_bundle, tmp_path_factory):
    directory = tmp_path_factory.mktemp("bundle")
    save_bundle(tiny_bundle, directory)
    return directory
