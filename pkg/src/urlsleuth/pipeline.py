"""Fitted preprocessing chain and hyperparameter grid search.

Stage order is fixed: extract the 78 lexical features, append the two
language-model scores (80 columns), z-scale, select by mutual
information, optionally project onto principal components, then hand the
matrix to a model.  Every stage is fitted on training rows only and is a
pure function afterwards.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .charlm import LmScorePair
from .errors import ArtifactError, ConfigError, DataError, ModelError
from .evaluation import compute_metrics
from .fileio import read_json, write_json_atomic
from .models import ModelSpec, TrainedModel, fit_model
from .models.persist import model_from_dict, model_to_dict
from .urlfeat import CATALOG_VERSION, extract_matrix

PIPELINE_ARTIFACT_TAG = "urlsleuth-pipeline"
PIPELINE_ARTIFACT_VERSION = 1

MI_BIN_COUNT = 10


@dataclass(frozen=True)
class Scaler:
    """Per-column z-normalization; constant columns keep std 1."""

    mean: np.ndarray
    std: np.ndarray


def fit_scaler(X) -> Scaler:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise DataError("scaler fitting requires a matrix with at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population std
    std = np.where(std > 0, std, 1.0)
    return Scaler(mean=mean, std=std)


def apply_scaler(scaler: Scaler, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != len(scaler.mean):
        raise DataError(
            f"scaler expects {len(scaler.mean)} columns, got {X.shape[-1]}"
        )
    return (X - scaler.mean) / scaler.std


@dataclass(frozen=True)
class Selector:
    """Top-k columns by mutual information with the label (in nats)."""

    retained_indices: np.ndarray
    score_per_feature: np.ndarray


def _quantile_bins(col: np.ndarray, n_bins: int) -> np.ndarray:
    """Equal-frequency bin ids; equal values always share a bin."""
    edges = np.quantile(col, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    return np.searchsorted(edges, col, side="right")


def mutual_information(bins: np.ndarray, labels: np.ndarray) -> float:
    """I(bin; label) in nats from empirical joint frequencies."""
    n = len(bins)
    joint: dict[tuple[int, int], int] = {}
    for b, y in zip(bins.tolist(), labels.tolist()):
        joint[(b, y)] = joint.get((b, y), 0) + 1
    p_b: dict[int, float] = {}
    p_y: dict[int, float] = {}
    for (b, y), c in joint.items():
        p_b[b] = p_b.get(b, 0.0) + c / n
        p_y[y] = p_y.get(y, 0.0) + c / n
    mi = 0.0
    for (b, y), c in joint.items():
        p_joint = c / n
        mi += p_joint * np.log(p_joint / (p_b[b] * p_y[y]))
    return max(0.0, float(mi))


def fit_selector(X, y, top_k: int) -> Selector:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if top_k < 1:
        raise ConfigError(f"top_k must be >= 1, got {top_k}")
    d = X.shape[1]
    if top_k > d:
        warnings.warn(
            f"top_k={top_k} exceeds the {d} available features; clamping to {d}",
            stacklevel=2,
        )
        top_k = d
    scores = np.array(
        [mutual_information(_quantile_bins(X[:, j], MI_BIN_COUNT), y) for j in range(d)]
    )
    # highest score first; equal scores prefer the lower index
    order = np.lexsort((np.arange(d), -scores))
    kept = np.sort(order[:top_k])
    return Selector(retained_indices=kept, score_per_feature=scores)


def apply_selector(selector: Selector, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return X[:, selector.retained_indices]


@dataclass(frozen=True)
class Projection:
    """Principal components kept up to a cumulative variance target."""

    mean: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # non-increasing


def fit_projection(X, variance_target: float = 0.95) -> Projection:
    X = np.asarray(X, dtype=np.float64)
    if not 0.0 < variance_target <= 1.0:
        raise ConfigError(f"variance_target must be in (0, 1], got {variance_target}")
    mean = X.mean(axis=0)
    centered = X - mean
    _, singulars, vt = np.linalg.svd(centered, full_matrices=False)
    variances = singulars**2 / len(X)
    total = float(variances.sum())
    if total <= 0.0:
        warnings.warn(
            "projection input has zero variance; keeping a single zero component",
            stacklevel=2,
        )
        return Projection(
            mean=mean,
            components=np.zeros((1, X.shape[1])),
            explained_variance=np.zeros(1),
        )
    # deterministic sign: the largest-magnitude entry of each component is positive
    for row in range(len(vt)):
        pivot = int(np.argmax(np.abs(vt[row])))
        if vt[row, pivot] < 0:
            vt[row] = -vt[row]
    cumulative = np.cumsum(variances) / total
    k = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    k = min(k, len(variances))
    return Projection(
        mean=mean, components=vt[:k], explained_variance=variances[:k]
    )


def apply_projection(projection: Projection, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - projection.mean) @ projection.components.T


@dataclass(frozen=True)
class PipelineArtifact:
    """Everything needed to score a raw URL: both language models, the
    fitted preprocessing stages, and the trained model."""

    lm_pair: LmScorePair
    scaler: Scaler
    selector: Selector
    projection: Projection | None
    model: TrainedModel
    catalog_version: str = CATALOG_VERSION

    def featurize(self, urls) -> np.ndarray:
        """Raw URLs to the model's input space (78 lexical + 2 LM scores,
        then scale/select/project)."""
        X = np.hstack([extract_matrix(urls), self.lm_pair.transform(urls)])
        X = apply_scaler(self.scaler, X)
        X = apply_selector(self.selector, X)
        if self.projection is not None:
            X = apply_projection(self.projection, X)
        return X

    def predict(self, urls) -> tuple[np.ndarray, np.ndarray]:
        """(labels, scores) for raw URLs."""
        X = self.featurize(urls)
        scores = self.model.predict_scores(X)
        return (scores >= 0.5).astype(np.int64), scores


def fit_pipeline(
    urls,
    labels,
    spec: ModelSpec,
    *,
    lm_order: int = 3,
    lm_smoothing: float = 1.0,
    top_k: int | None = None,
    use_projection: bool = False,
    variance_target: float = 0.95,
) -> PipelineArtifact:
    """Fit every stage on the given training rows only.

    ``top_k=None`` keeps all features (the selector still reports its
    scores, so the chain shape never changes with the toggle).
    """
    urls = list(urls)
    y = np.asarray(labels)
    lm_pair = LmScorePair(order=lm_order, k=lm_smoothing).fit(urls, y)
    X = np.hstack([extract_matrix(urls), lm_pair.transform(urls)])
    scaler = fit_scaler(X)
    X = apply_scaler(scaler, X)
    selector = fit_selector(X, y, top_k if top_k is not None else X.shape[1])
    X = apply_selector(selector, X)
    projection = None
    if use_projection:
        projection = fit_projection(X, variance_target)
        X = apply_projection(projection, X)
    model = fit_model(spec, X, y, CATALOG_VERSION)
    return PipelineArtifact(
        lm_pair=lm_pair,
        scaler=scaler,
        selector=selector,
        projection=projection,
        model=model,
    )


def grid_search(
    family: str,
    grid: dict[str, list],
    train_pool: tuple[np.ndarray, np.ndarray],
    val_sets,
    target_metric: str = "f1",
    seed: int = 0,
) -> ModelSpec:
    """Exhaustive search, scored by the mean of ``target_metric`` over the
    validation sets; ties keep the earlier enumeration point.

    A grid point whose fit fails scores 0 and the search continues.
    """
    if not grid:
        raise ConfigError("hyperparameter grid must not be empty")
    val_sets = list(val_sets)
    if not val_sets:
        raise ConfigError("grid search requires at least one validation set")
    X_train, y_train = train_pool
    names = list(grid.keys())
    best_spec: ModelSpec | None = None
    best_score = -np.inf
    for values in itertools.product(*(grid[name] for name in names)):
        spec = ModelSpec(
            family=family, hyperparameters=dict(zip(names, values)), seed=seed
        )
        try:
            model = fit_model(spec, X_train, y_train, CATALOG_VERSION)
            per_set = []
            for X_val, y_val in val_sets:
                scores = model.predict_scores(X_val)
                report = compute_metrics(
                    y_val, (scores >= 0.5).astype(np.int64), scores
                )
                per_set.append(getattr(report, target_metric))
            mean_score = float(np.mean(per_set))
        except ModelError as exc:
            warnings.warn(
                f"grid point {spec.hyperparameters} failed to fit: {exc}; scored 0",
                stacklevel=2,
            )
            mean_score = 0.0
        if mean_score > best_score:
            best_score = mean_score
            best_spec = spec
    return best_spec


def pipeline_to_dict(artifact: PipelineArtifact) -> dict:
    proj = None
    if artifact.projection is not None:
        proj = {
            "mean": artifact.projection.mean.tolist(),
            "components": artifact.projection.components.tolist(),
            "explained_variance": artifact.projection.explained_variance.tolist(),
        }
    return {
        "artifact": PIPELINE_ARTIFACT_TAG,
        "format_version": PIPELINE_ARTIFACT_VERSION,
        "catalog_version": artifact.catalog_version,
        "lm": artifact.lm_pair.to_dict(),
        "scaler": {
            "mean": artifact.scaler.mean.tolist(),
            "std": artifact.scaler.std.tolist(),
        },
        "selector": {
            "retained_indices": artifact.selector.retained_indices.tolist(),
            "score_per_feature": artifact.selector.score_per_feature.tolist(),
        },
        "projection": proj,
        "model": model_to_dict(artifact.model),
    }


def pipeline_from_dict(payload: dict) -> PipelineArtifact:
    try:
        tag = payload["artifact"]
        version = payload["format_version"]
    except KeyError as exc:
        raise ArtifactError(f"artifact is missing the {exc.args[0]!r} field") from exc
    if tag != PIPELINE_ARTIFACT_TAG:
        raise ArtifactError(f"expected a {PIPELINE_ARTIFACT_TAG!r} artifact, got {tag!r}")
    if version != PIPELINE_ARTIFACT_VERSION:
        raise ArtifactError(
            f"unsupported pipeline artifact version {version!r}; "
            f"this build reads version {PIPELINE_ARTIFACT_VERSION}"
        )
    try:
        scaler = Scaler(
            mean=np.asarray(payload["scaler"]["mean"], dtype=np.float64),
            std=np.asarray(payload["scaler"]["std"], dtype=np.float64),
        )
        selector = Selector(
            retained_indices=np.asarray(
                payload["selector"]["retained_indices"], dtype=np.int64
            ),
            score_per_feature=np.asarray(
                payload["selector"]["score_per_feature"], dtype=np.float64
            ),
        )
        projection = None
        if payload["projection"] is not None:
            projection = Projection(
                mean=np.asarray(payload["projection"]["mean"], dtype=np.float64),
                components=np.asarray(
                    payload["projection"]["components"], dtype=np.float64
                ),
                explained_variance=np.asarray(
                    payload["projection"]["explained_variance"], dtype=np.float64
                ),
            )
        return PipelineArtifact(
            lm_pair=LmScorePair.from_dict(payload["lm"]),
            scaler=scaler,
            selector=selector,
            projection=projection,
            model=model_from_dict(payload["model"]),
            catalog_version=payload["catalog_version"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"pipeline artifact is malformed: {exc}") from exc


def save_pipeline(artifact: PipelineArtifact, path) -> None:
    write_json_atomic(pipeline_to_dict(artifact), path)


def load_pipeline(path) -> PipelineArtifact:
    return pipeline_from_dict(read_json(path))
