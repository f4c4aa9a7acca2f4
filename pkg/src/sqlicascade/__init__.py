"""Cascaded SQL-injection detection: fast sparse linear filters backed by a
slow, accurate second-stage re-checker, with the benchmark harness used to
evaluate the trade-off."""

from .corpus import LabeledCorpus, SplitSpec, class_counts, load_csv, save_csv, stratified_split
from .textprep import Termizer, char_ngrams, char_termizer, word_termizer, word_tokens
from .features import (
    FeaturePipeline,
    IdfVector,
    SparseMatrix,
    SparseVector,
    Vocabulary,
    build_vocabulary,
    concat_features,
    count_matrix,
    document_frequency,
    family_pipeline,
    idf,
    tf_normalize,
    tfidf,
    vectorize,
)
from .linear_models import (
    CentroidModel,
    LinearModel,
    NbModel,
    TrainConfig,
    decision_score,
    fit,
    load_model,
    pa_step,
    predict,
    save_model,
)
from .ensemble import EnsembleModel, EnsembleSpec, ensemble_predict, fit_ensemble, majority_vote
from .cascade import (
    CascadeConfig,
    CascadeModel,
    CascadeTrace,
    Stage2Error,
    Stage2Handle,
    fit_cascade,
    trigger_rate,
)
from .metrics import (
    ClassificationMetrics,
    ConfusionCounts,
    LatencyModelInputs,
    MethodMeasurement,
    cascade_speedup,
    confusion,
    effective_latency,
    effective_positive_rate,
    fe_score,
    prf1,
    rank_by_fe,
)

__version__ = "0.1.0"
