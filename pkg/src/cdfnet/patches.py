"""Volume-patch extraction, patch-wise normalization, and ZCA whitening.

A patch is a p x p x depth block unrolled into one column with depth as the
slowest axis, then rows, then columns (C-order over (depth, row, col)).
Training-time sampling and dense extraction at convolution time share this
layout; see :func:`unroll_patch` and :mod:`cdfnet.layer`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimError, InvalidPatchSize
from .tensor import FeatureMapSet, SeededRng, assert_array_finite

# Eigenvalues below this fraction of the largest are numerical noise and are
# clamped before the inverse square root.
EIGENVALUE_FLOOR = 1e-12


@dataclass(frozen=True)
class PatchMatrix:
    """Unrolled patches as columns: data is (patch_side^2 * depth, n_patches)."""

    data: np.ndarray
    patch_side: int
    depth: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DimError(f"patch matrix must be 2D, got ndim={data.ndim}")
        expected = self.patch_side * self.patch_side * self.depth
        if data.shape[0] != expected:
            raise DimError(
                f"patch matrix has {data.shape[0]} rows, expected "
                f"{self.patch_side}^2 * {self.depth} = {expected}"
            )
        if data.shape[1] < 1:
            raise DimError("patch matrix must contain at least one patch")
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_patches(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ZcaTransform:
    """Whitening y = matrix @ (x - mean); matrix is symmetric PD."""

    mean: np.ndarray
    matrix: np.ndarray
    epsilon: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if mean.ndim != 1 or matrix.shape != (mean.size, mean.size):
            raise DimError(
                f"inconsistent ZCA shapes: mean {mean.shape}, matrix {matrix.shape}"
            )
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not np.allclose(matrix, matrix.T, atol=1e-9):
            raise ValueError("ZCA matrix must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return self.mean.size


def unroll_patch(maps: np.ndarray, row: int, col: int, p: int) -> np.ndarray:
    """One p x p x depth block as a column vector, depth-major layout."""
    vol = maps[row : row + p, col : col + p, :]
    return np.ascontiguousarray(vol.transpose(2, 0, 1)).ravel()


def extract_patches(
    sets: list[FeatureMapSet], p: int, n_patches: int, rng: SeededRng
) -> PatchMatrix:
    """Sample patches uniformly over (image, row, column), with replacement.

    The image index is drawn first, then a valid top-left position inside
    that image, so every image is equally likely regardless of its size.
    """
    if not sets:
        raise ValueError("need at least one feature-map set")
    if n_patches < 1:
        raise ValueError(f"n_patches must be >= 1, got {n_patches}")
    depth = sets[0].depth
    for s in sets:
        if s.depth != depth:
            raise DimError("all feature-map sets must share one depth")
        if p > min(s.height, s.width):
            raise InvalidPatchSize(
                f"patch side {p} exceeds map size {s.height}x{s.width}"
            )

    gen = rng.generator()
    img_idx = gen.integers(0, len(sets), size=n_patches)
    row_u = gen.random(n_patches)
    col_u = gen.random(n_patches)

    dim = p * p * depth
    data = np.empty((dim, n_patches), dtype=np.float64)
    for j in range(n_patches):
        s = sets[img_idx[j]]
        row = int(row_u[j] * (s.height - p + 1))
        col = int(col_u[j] * (s.width - p + 1))
        data[:, j] = unroll_patch(s.maps, row, col, p)
    return PatchMatrix(data, patch_side=p, depth=depth)


def normalize_patch(patch: np.ndarray) -> np.ndarray:
    """Scale by 1/max|x_i|, then subtract the mean; the zero vector stays zero."""
    patch = np.asarray(patch, dtype=np.float64)
    peak = np.max(np.abs(patch))
    if peak == 0.0:
        return np.zeros_like(patch)
    scaled = patch / peak
    return scaled - scaled.mean()


def normalize_columns(data: np.ndarray) -> np.ndarray:
    """Column-wise :func:`normalize_patch` for a (dim, n) matrix."""
    peak = np.max(np.abs(data), axis=0)
    safe = np.where(peak == 0.0, 1.0, peak)
    scaled = data / safe
    out = scaled - scaled.mean(axis=0)
    out[:, peak == 0.0] = 0.0
    return out


def fit_zca(patches: PatchMatrix, epsilon: float) -> ZcaTransform:
    """Fit V (D + eps I)^(-1/2) V^T on the column covariance of the patches."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    assert_array_finite(patches.data, what="patch matrix")
    mean = patches.data.mean(axis=1)
    centered = patches.data - mean[:, None]
    denom = max(patches.n_patches - 1, 1)
    cov = (centered @ centered.T) / denom
    eigvals, eigvecs = np.linalg.eigh(cov)
    floor = EIGENVALUE_FLOOR * max(float(eigvals[-1]), 0.0)
    eigvals = np.maximum(eigvals, floor)
    inv_sqrt = 1.0 / np.sqrt(eigvals + epsilon)
    matrix = (eigvecs * inv_sqrt) @ eigvecs.T
    matrix = (matrix + matrix.T) / 2.0
    return ZcaTransform(mean=mean, matrix=matrix, epsilon=float(epsilon))


def apply_zca(transform: ZcaTransform, patches: PatchMatrix) -> PatchMatrix:
    """Whiten every column: y = matrix @ (x - mean)."""
    if patches.dim != transform.dim:
        raise DimError(
            f"patch dim {patches.dim} does not match transform dim {transform.dim}"
        )
    data = transform.matrix @ (patches.data - transform.mean[:, None])
    return PatchMatrix(data, patches.patch_side, patches.depth)
