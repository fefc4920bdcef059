"""Eleven classifier families behind one train/predict contract.

``ModelSpec`` names a family, its hyperparameters, and a seed;
``fit_model`` turns a spec plus data into an immutable ``TrainedModel``
whose ``predict_label``/``predict_score`` enforce the catalog version of
the features it was trained on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import CatalogMismatchError, ModelError
from ..urlfeat import FeatureVector
from .base import (
    FAMILIES,
    SUPERVISED_FAMILIES,
    UNSUPERVISED_FAMILIES,
    AlwaysMaliciousBaseline,
    BinaryClassifier,
)
from .bayes import GaussianNaiveBayes
from .clustering import GaussianMixtureDetector, KMeansDetector
from .linear import LinearSvmSubgradient, LogisticRegressionGD
from .neighbors import KNearestNeighbors
from .neural import MlpClassifier
from .trees import DecisionTreeCART, GradientBoostedTrees, RandomForest

_REGISTRY: dict[str, type[BinaryClassifier]] = {
    "BASELINE": AlwaysMaliciousBaseline,
    "LR": LogisticRegressionGD,
    "LINEAR_SVM": LinearSvmSubgradient,
    "DT": DecisionTreeCART,
    "RF": RandomForest,
    "GBT": GradientBoostedTrees,
    "KNN": KNearestNeighbors,
    "GNB": GaussianNaiveBayes,
    "MLP": MlpClassifier,
    "KMEANS": KMeansDetector,
    "GMM": GaussianMixtureDetector,
}

# Families whose fit consumes random numbers; they receive the spec seed.
STOCHASTIC_FAMILIES = frozenset({"RF", "MLP", "KMEANS", "GMM"})

HYPERPARAMETER_SCHEMA: dict[str, frozenset[str]] = {
    "BASELINE": frozenset(),
    "LR": frozenset({"learning_rate", "n_iters", "l2"}),
    "LINEAR_SVM": frozenset({"learning_rate", "n_iters", "l2"}),
    "DT": frozenset({"max_depth", "min_samples_split"}),
    "RF": frozenset({"n_trees", "max_depth", "min_samples_split", "bootstrap", "max_features"}),
    "GBT": frozenset({"n_trees", "learning_rate", "max_depth", "min_samples_split"}),
    "KNN": frozenset({"k"}),
    "GNB": frozenset(),
    "MLP": frozenset({"hidden_units", "learning_rate", "n_iters", "l2"}),
    "KMEANS": frozenset({"n_clusters", "max_iter"}),
    "GMM": frozenset({"n_components", "max_iter", "tol"}),
}


@dataclass(frozen=True)
class ModelSpec:
    """A family plus hyperparameters plus the seed that fixes its randomness."""

    family: str
    hyperparameters: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in _REGISTRY:
            raise ModelError(
                f"unknown model family {self.family!r}; known: {', '.join(FAMILIES)}"
            )
        allowed = HYPERPARAMETER_SCHEMA[self.family]
        unknown = sorted(set(self.hyperparameters) - allowed)
        if unknown:
            raise ModelError(
                f"unknown hyperparameters for {self.family}: {', '.join(unknown)}"
            )


def make_classifier(spec: ModelSpec) -> BinaryClassifier:
    """Instantiate the family named by the spec, unfitted."""
    kwargs = dict(spec.hyperparameters)
    if spec.family in STOCHASTIC_FAMILIES:
        kwargs["seed"] = spec.seed
    return _REGISTRY[spec.family](**kwargs)


@dataclass(frozen=True)
class TrainedModel:
    """A fitted classifier bound to the feature catalog it was trained on."""

    spec: ModelSpec
    classifier: BinaryClassifier
    catalog_version: str
    cluster_label_map: dict[int, int] | None = None

    def _check_vector(self, x: FeatureVector) -> np.ndarray:
        if x.catalog_version != self.catalog_version:
            raise CatalogMismatchError(
                f"feature vector catalog {x.catalog_version!r} does not match "
                f"model catalog {self.catalog_version!r}"
            )
        return x.values.reshape(1, -1)

    def predict_label(self, x: FeatureVector) -> int:
        return int(self.classifier.predict_batch(self._check_vector(x))[0])

    def predict_score(self, x: FeatureVector) -> float:
        return float(self.classifier.score_batch(self._check_vector(x))[0])

    def predict_labels(self, X) -> np.ndarray:
        return self.classifier.predict_batch(X)

    def predict_scores(self, X) -> np.ndarray:
        return self.classifier.score_batch(X)


def fit_model(spec: ModelSpec, X, y, catalog_version: str) -> TrainedModel:
    """Fit one family on a feature matrix; unsupervised families also get
    their cluster-to-label map (majority training vote, ties to 1)."""
    clf = make_classifier(spec)
    clf.fit(X, y)
    label_map = None
    if spec.family in UNSUPERVISED_FAMILIES:
        label_map = clf.cluster_label_map()
    return TrainedModel(
        spec=spec,
        classifier=clf,
        catalog_version=catalog_version,
        cluster_label_map=label_map,
    )


def predict_label(model: TrainedModel, x: FeatureVector) -> int:
    return model.predict_label(x)


def predict_score(model: TrainedModel, x: FeatureVector) -> float:
    return model.predict_score(x)


__all__ = [
    "FAMILIES",
    "SUPERVISED_FAMILIES",
    "UNSUPERVISED_FAMILIES",
    "STOCHASTIC_FAMILIES",
    "HYPERPARAMETER_SCHEMA",
    "ModelSpec",
    "TrainedModel",
    "BinaryClassifier",
    "AlwaysMaliciousBaseline",
    "LogisticRegressionGD",
    "LinearSvmSubgradient",
    "DecisionTreeCART",
    "RandomForest",
    "GradientBoostedTrees",
    "KNearestNeighbors",
    "GaussianNaiveBayes",
    "MlpClassifier",
    "KMeansDetector",
    "GaussianMixtureDetector",
    "make_classifier",
    "fit_model",
    "predict_label",
    "predict_score",
]
