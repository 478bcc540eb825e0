"""One-vs-all linear SVM with squared hinge loss, trained by dual
coordinate descent.

The primal objective for each binary problem is

    min_w  0.5 ||w||^2 + (reg_c / n) * sum_i max(0, 1 - y_i w.x_i)^2

The 1/n weighting makes the solution invariant to duplicating the training
set. Features are standardized per dimension before training; a constant
bias feature is appended, so the bias is regularized like the weights.
Coordinates are visited in fixed order, making training deterministic for
a given data order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels, DimError
from .tensor import assert_array_finite

STD_FLOOR = 1e-8
DEFAULT_EPOCHS = 1000
DEFAULT_TOL = 1e-4


@dataclass(frozen=True)
class Descriptor:
    """Flattened final feature maps for one image."""

    values: np.ndarray
    image_id: int = -1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        assert_array_finite(values, what=f"descriptor of image {self.image_id}")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ScoreVector:
    """Per-class classifier outputs for one image."""

    scores: np.ndarray
    normalized: bool = False
    image_id: int = -1

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64).ravel()
        if scores.size < 1:
            raise DimError("score vector must have at least one entry")
        if self.normalized and (scores.min() < 0.0 or scores.max() > 1.0):
            raise ValueError("normalized scores must lie in [0, 1]")
        object.__setattr__(self, "scores", scores)

    @property
    def n_classes(self) -> int:
        return self.scores.size


@dataclass(frozen=True)
class SvmModel:
    """C binary classifiers: scores = weights @ standardized(x) + biases."""

    weights: np.ndarray  # (C, d)
    biases: np.ndarray  # (C,)
    reg_c: float
    feature_mean: np.ndarray  # (d,)
    feature_std: np.ndarray  # (d,), floored at STD_FLOOR

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        biases = np.asarray(self.biases, dtype=np.float64)
        feature_mean = np.asarray(self.feature_mean, dtype=np.float64)
        feature_std = np.asarray(self.feature_std, dtype=np.float64)
        c, d = weights.shape
        if c < 2 or d < 1:
            raise DimError(f"need >= 2 classes and >= 1 feature, got {weights.shape}")
        if biases.shape != (c,) or feature_mean.shape != (d,) or feature_std.shape != (d,):
            raise DimError("inconsistent SVM model shapes")
        if feature_std.min() <= 0.0:
            raise ValueError("feature_std entries must be positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "feature_mean", feature_mean)
        object.__setattr__(self, "feature_std", feature_std)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def _dual_cd_l2svm(
    x: np.ndarray,
    y: np.ndarray,
    c_eff: float,
    max_epochs: int,
    tol: float,
):
    """Dual coordinate descent for the L2-loss SVM (LIBLINEAR-style).

    x is (n, d) with the bias feature already appended, y in {-1, +1}.
    Returns (w, dual objective per epoch). Each coordinate step exactly
    minimizes the dual along one alpha_i subject to alpha_i >= 0, so the
    dual objective never increases.
    """
    n = x.shape[0]
    d_ii = 1.0 / (2.0 * c_eff)
    q_ii = np.einsum("nd,nd->n", x, x) + d_ii
    alpha = np.zeros(n, dtype=np.float64)
    w = np.zeros(x.shape[1], dtype=np.float64)
    objectives = []
    for _ in range(max_epochs):
        max_pg = 0.0
        for i in range(n):
            g = y[i] * (w @ x[i]) - 1.0 + d_ii * alpha[i]
            pg = min(g, 0.0) if alpha[i] == 0.0 else g
            if pg != 0.0:
                max_pg = max(max_pg, abs(pg))
                new_alpha = max(alpha[i] - g / q_ii[i], 0.0)
                delta = new_alpha - alpha[i]
                if delta != 0.0:
                    w += (delta * y[i]) * x[i]
                    alpha[i] = new_alpha
        objectives.append(
            0.5 * float(w @ w) + 0.5 * d_ii * float(alpha @ alpha) - float(alpha.sum())
        )
        if max_pg < tol:
            break
    return w, objectives


def standardize_fit(values: np.ndarray):
    """Per-dimension mean and std (floored) over training rows."""
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    return mean, np.maximum(std, STD_FLOOR)


def train_ova_svm(
    descriptors: list[Descriptor],
    labels,
    reg_c: float = 1.0,
    max_epochs: int = DEFAULT_EPOCHS,
    tol: float = DEFAULT_TOL,
) -> SvmModel:
    """One binary L2 SVM per class over standardized descriptor features.

    Class c's problem labels its images +1 and all others -1. Deterministic
    for a given descriptor order.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(descriptors) != labels.size:
        raise DimError(f"{len(descriptors)} descriptors but {labels.size} labels")
    classes = np.unique(labels)
    if classes.size < 2:
        raise DegenerateLabels(f"need >= 2 classes, got {classes.size}")
    if classes.min() < 0:
        raise DegenerateLabels("labels must be non-negative")
    n_classes = int(classes.max()) + 1

    dims = {d.dim for d in descriptors}
    if len(dims) != 1:
        raise DimError(f"descriptor dimensions differ: {sorted(dims)}")

    values = np.stack([d.values for d in descriptors])
    mean, std = standardize_fit(values)
    x = (values - mean) / std
    x = np.hstack([x, np.ones((x.shape[0], 1))])  # bias feature

    n = x.shape[0]
    c_eff = reg_c / n
    weights = np.zeros((n_classes, x.shape[1] - 1), dtype=np.float64)
    biases = np.zeros(n_classes, dtype=np.float64)
    for cls in range(n_classes):
        y = np.where(labels == cls, 1.0, -1.0)
        w, _ = _dual_cd_l2svm(x, y, c_eff, max_epochs, tol)
        weights[cls] = w[:-1]
        biases[cls] = w[-1]
    return SvmModel(
        weights=weights,
        biases=biases,
        reg_c=float(reg_c),
        feature_mean=mean,
        feature_std=std,
    )


def score(model: SvmModel, descriptor: Descriptor) -> ScoreVector:
    """Raw per-class scores w_c . standardized(x) + b_c."""
    if descriptor.dim != model.dim:
        raise DimError(
            f"descriptor dim {descriptor.dim} does not match model dim {model.dim}"
        )
    z = (descriptor.values - model.feature_mean) / model.feature_std
    return ScoreVector(
        model.weights @ z + model.biases, normalized=False, image_id=descriptor.image_id
    )


def score_many(model: SvmModel, descriptors: list[Descriptor]) -> list[ScoreVector]:
    values = np.stack([d.values for d in descriptors])
    if values.shape[1] != model.dim:
        raise DimError(
            f"descriptor dim {values.shape[1]} does not match model dim {model.dim}"
        )
    z = (values - model.feature_mean) / model.feature_std
    raw = z @ model.weights.T + model.biases
    return [
        ScoreVector(raw[i], normalized=False, image_id=d.image_id)
        for i, d in enumerate(descriptors)
    ]


def predict(scores: ScoreVector) -> int:
    """Index of the maximum score; ties go to the lowest class index."""
    return int(np.argmax(scores.scores))


def cross_validate_c(
    descriptors: list[Descriptor],
    labels,
    grid=(0.01, 0.1, 1.0, 10.0),
    n_folds: int = 5,
    max_epochs: int = 200,
) -> float:
    """Pick reg_c from the grid by deterministic k-fold accuracy.

    Folds are contiguous index ranges, so the split depends only on the data
    order. Ties prefer the smaller reg_c.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = len(descriptors)
    if n < n_folds:
        raise DimError(f"need >= {n_folds} samples for {n_folds}-fold CV")
    bounds = np.linspace(0, n, n_folds + 1, dtype=int)
    best_c, best_acc = None, -1.0
    for c in grid:
        hits = 0
        for f in range(n_folds):
            lo, hi = bounds[f], bounds[f + 1]
            val_idx = list(range(lo, hi))
            train_idx = [i for i in range(n) if not lo <= i < hi]
            model = train_ova_svm(
                [descriptors[i] for i in train_idx],
                labels[train_idx],
                reg_c=c,
                max_epochs=max_epochs,
            )
            for i in val_idx:
                if predict(score(model, descriptors[i])) == labels[i]:
                    hits += 1
        acc = hits / n
        if acc > best_acc:
            best_c, best_acc = c, acc
    return float(best_c)
