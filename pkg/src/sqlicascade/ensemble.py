"""Majority-voting ensembles over (classifier kind x feature family) grids.

Three strategies:

* by_classifier -- each classifier kind votes across feature families, then
  the per-kind decisions are majority-voted.
* by_feature    -- each feature family votes across classifier kinds, then
  the per-family decisions are majority-voted.
* concat        -- families are concatenated into one vector and the
  classifier kinds vote once on it.

A ``flat`` switch collapses the two-level strategies into a single vote over
every grid cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linear_models as lm
from .corpus import LabeledCorpus
from .features import FeaturePipeline, SparseVector, concat_features, family_pipeline, hconcat

BY_CLASSIFIER = "by_classifier"
BY_FEATURE = "by_feature"
CONCAT = "concat"
STRATEGIES = (BY_CLASSIFIER, BY_FEATURE, CONCAT)

DEFAULT_KINDS = (lm.MULTINOMIAL_NB, lm.SGD_HINGE, lm.PA)
DEFAULT_FAMILIES = ("boc", "bow", "tf-char1", "tfidf-char1", "tfidf-char2", "tfidf-char3")


@dataclass(frozen=True)
class EnsembleSpec:
    strategy: str = BY_CLASSIFIER
    classifier_kinds: tuple[str, ...] = DEFAULT_KINDS
    feature_families: tuple[str, ...] = DEFAULT_FAMILIES
    tie_break: int = 1  # attack wins exact ties: security-conservative
    flat: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not self.classifier_kinds or not self.feature_families:
            raise ValueError("need at least one classifier kind and one feature family")
        if self.tie_break not in (0, 1):
            raise ValueError("tie_break must be 0 or 1")
        object.__setattr__(self, "classifier_kinds", tuple(self.classifier_kinds))
        object.__setattr__(self, "feature_families", tuple(self.feature_families))

    @staticmethod
    def from_dict(d: dict) -> "EnsembleSpec":
        return EnsembleSpec(
            strategy=d.get("strategy", BY_CLASSIFIER),
            classifier_kinds=tuple(d.get("classifier_kinds", DEFAULT_KINDS)),
            feature_families=tuple(d.get("feature_families", DEFAULT_FAMILIES)),
            tie_break=int(d.get("tie_break", 1)),
            flat=bool(d.get("flat", False)),
        )


def majority_vote(votes: Sequence[int], tie_break: int = 1) -> int:
    """The label with strictly more votes wins; an exact tie returns tie_break."""
    if len(votes) == 0:
        raise ValueError("cannot vote on an empty list")
    ones = sum(1 for v in votes if v == 1)
    zeros = len(votes) - ones
    if ones > zeros:
        return 1
    if zeros > ones:
        return 0
    return tie_break


@dataclass
class EnsembleModel:
    """A fitted grid: one pipeline per family, one model per (kind, family) cell.

    Under the concat strategy the grid has a single pseudo-family holding the
    concatenation, with one model per classifier kind.
    """

    spec: EnsembleSpec
    pipelines: dict[str, FeaturePipeline]
    models: dict[tuple[str, str], lm.Model]

    def cell(self, kind: str, family: str) -> lm.Model:
        try:
            return self.models[(kind, family)]
        except KeyError:
            raise ValueError(f"ensemble grid is missing cell ({kind}, {family})") from None

    def _features_for(self, payload: str) -> dict[str, SparseVector]:
        if self.spec.strategy == CONCAT:
            parts = [self.pipelines[f].transform_payload(payload)
                     for f in self.spec.feature_families]
            return {CONCAT: concat_features(parts)}
        return {f: self.pipelines[f].transform_payload(payload)
                for f in self.spec.feature_families}

    def predict(self, payload: str) -> int:
        return self._decide(self._features_for(payload))

    def _decide(self, feats: dict[str, SparseVector]) -> int:
        spec = self.spec
        tie = spec.tie_break
        if spec.strategy == CONCAT:
            votes = [lm.predict(self.cell(k, CONCAT), feats[CONCAT])
                     for k in spec.classifier_kinds]
            return majority_vote(votes, tie)

        cell_votes = {
            (k, f): lm.predict(self.cell(k, f), feats[f])
            for k in spec.classifier_kinds for f in spec.feature_families
        }
        if spec.flat:
            return majority_vote(list(cell_votes.values()), tie)
        if spec.strategy == BY_CLASSIFIER:
            per_kind = [majority_vote([cell_votes[(k, f)] for f in spec.feature_families], tie)
                        for k in spec.classifier_kinds]
            return majority_vote(per_kind, tie)
        per_family = [majority_vote([cell_votes[(k, f)] for k in spec.classifier_kinds], tie)
                      for f in spec.feature_families]
        return majority_vote(per_family, tie)

    def predict_corpus(self, corpus: LabeledCorpus) -> np.ndarray:
        """Batch prediction; transforms each family once for the whole corpus."""
        if self.spec.strategy == CONCAT:
            matrix = hconcat([self.pipelines[f].transform(corpus)
                              for f in self.spec.feature_families])
            mats = {CONCAT: matrix}
        else:
            mats = {f: self.pipelines[f].transform(corpus)
                    for f in self.spec.feature_families}
        out = np.empty(len(corpus), dtype=np.int64)
        for i in range(len(corpus)):
            feats = {name: m.row(i) for name, m in mats.items()}
            out[i] = self._decide(feats)
        return out


def fit_ensemble(train: LabeledCorpus, spec: EnsembleSpec,
                 config: lm.TrainConfig = lm.TrainConfig()) -> EnsembleModel:
    """Fit one pipeline per feature family and one model per grid cell."""
    pipelines: dict[str, FeaturePipeline] = {}
    matrices = {}
    for fam in spec.feature_families:
        pipe = family_pipeline(fam)
        matrices[fam] = pipe.fit_transform(train)
        pipelines[fam] = pipe

    models: dict[tuple[str, str], lm.Model] = {}
    if spec.strategy == CONCAT:
        concat_matrix = hconcat([matrices[f] for f in spec.feature_families])
        for kind in spec.classifier_kinds:
            models[(kind, CONCAT)] = lm.fit(kind, concat_matrix, train.labels, config)
    else:
        for kind in spec.classifier_kinds:
            for fam in spec.feature_families:
                models[(kind, fam)] = lm.fit(kind, matrices[fam], train.labels, config)

    return EnsembleModel(spec=spec, pipelines=pipelines, models=models)


def ensemble_predict(model: EnsembleModel, payload: str) -> int:
    return model.predict(payload)
