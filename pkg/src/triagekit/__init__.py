"""triagekit: suggest assignment groups, resolvers, and similar tickets.

The library trains four resolver models over a historical ticket corpus
(a direct classifier, a resolver-list classifier, a group-prior model,
and a similar-ticket scorer), combines them by fitted weighted average,
and serves real-time suggestions backed by an approximate nearest
neighbor index.
"""

from .ann import (AnnIndex, Neighbor, brute_force_knn, build_index,
                  load_index, query, save_index)
from .classifier import (LabelVocabulary, ProbVector, SoftmaxHead,
                         TrainParams, predict_proba, top_k, train_head)
from .corpus import (CleanTicket, DatasetSplit, RawTicket, SynthSpec, clean,
                     ingest, split, synth_corpus, tokenize)
from .density import cluster_topic
from .discovery import (ResolverList, build_resolver_lists,
                        discover_resolver_lists, list_to_resolver_probs)
from .encoder import (EncoderModel, encode, fit_encoder, remote_encode)
from .ensemble import (EnsembleWeights, GroupResolverPrior, align_probs,
                       ensemble_probs, fit_group_prior, fit_weights,
                       group_based_probs)
from .metrics import EvalReport, evaluate_all, top_k_accuracy
from .pipeline import (ModelBundle, PipelineConfig, Suggestions, load_bundle,
                       save_bundle, suggest, train_pipeline)
from .similar import (ScorerParams, fit_params, resolver_scores,
                      scale_distance, scores_to_probs)
from .topics import TopicModel, assign_topic, fit_lda

__version__ = "0.1.0"

__all__ = [
    "AnnIndex", "Neighbor", "brute_force_knn", "build_index", "load_index",
    "query", "save_index",
    "LabelVocabulary", "ProbVector", "SoftmaxHead", "TrainParams",
    "predict_proba", "top_k", "train_head",
    "CleanTicket", "DatasetSplit", "RawTicket", "SynthSpec", "clean",
    "ingest", "split", "synth_corpus", "tokenize",
    "cluster_topic",
    "ResolverList", "build_resolver_lists", "discover_resolver_lists",
    "list_to_resolver_probs",
    "EncoderModel", "encode", "fit_encoder", "remote_encode",
    "EnsembleWeights", "GroupResolverPrior", "align_probs", "ensemble_probs",
    "fit_group_prior", "fit_weights", "group_based_probs",
    "EvalReport", "evaluate_all", "top_k_accuracy",
    "ModelBundle", "PipelineConfig", "Suggestions", "load_bundle",
    "save_bundle", "suggest", "train_pipeline",
    "ScorerParams", "fit_params", "resolver_scores", "scale_distance",
    "scores_to_probs",
    "TopicModel", "assign_topic", "fit_lda",
    "__version__",
]
