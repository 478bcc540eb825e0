"""Dense feature-map containers and deterministic randomness.

All numeric work in this package is done in 64-bit floats so that results
are reproducible bit-for-bit across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteValue

# Every stochastic step in the package draws from this one generator family.
# Philox is counter-based and numpy's SeedSequence hashing is documented and
# stable, so a (seed, stream-path) pair fully determines the draw sequence.
ALGORITHM_ID = "philox4x64-10+numpy-seedseq"


@dataclass(frozen=True)
class SeededRng:
    """A reproducible random source identified by a seed and a stream path.

    Parallel or per-group work must not share one generator; derive an
    independent stream with :meth:`child` instead.
    """

    seed: int
    stream: tuple[int, ...] = ()
    algorithm_id: str = ALGORITHM_ID

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.algorithm_id != ALGORITHM_ID:
            raise ValueError(f"unknown rng algorithm {self.algorithm_id!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "SeededRng":
        """Independent stream ``index`` derived from this one."""
        if index < 0:
            raise ValueError("stream index must be non-negative")
        return SeededRng(self.seed, self.stream + (int(index),))


@dataclass(frozen=True)
class FeatureMapSet:
    """Stack of 2D feature maps for one image, shaped (height, width, depth).

    Instances are immutable: the wrapped array view is marked read-only and
    may be shared freely across threads.
    """

    maps: np.ndarray
    source_image_id: int = -1

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.float64)
        if maps.ndim == 2:
            maps = maps[:, :, np.newaxis]
        if maps.ndim != 3:
            raise ValueError(f"feature maps must be 3D, got ndim={maps.ndim}")
        if min(maps.shape) < 1:
            raise ValueError(f"all dimensions must be >= 1, got {maps.shape}")
        view = maps.view()
        view.setflags(write=False)
        object.__setattr__(self, "maps", view)

    @property
    def height(self) -> int:
        return self.maps.shape[0]

    @property
    def width(self) -> int:
        return self.maps.shape[1]

    @property
    def depth(self) -> int:
        return self.maps.shape[2]


def tensor_slice(fmset: FeatureMapSet, depth_indices) -> FeatureMapSet:
    """Select feature maps at the given depths, preserving order."""
    indices = list(depth_indices)
    for i in indices:
        if not 0 <= i < fmset.depth:
            raise IndexError(f"depth index {i} out of range [0, {fmset.depth})")
    return FeatureMapSet(fmset.maps[:, :, indices], fmset.source_image_id)


def concat_depth(sets: list[FeatureMapSet]) -> FeatureMapSet:
    """Stack several map sets of equal spatial size along depth."""
    if not sets:
        raise ValueError("need at least one feature-map set")
    base = sets[0]
    for s in sets[1:]:
        if (s.height, s.width) != (base.height, base.width):
            raise ValueError("spatial dimensions differ across sets")
    return FeatureMapSet(
        np.concatenate([s.maps for s in sets], axis=2), base.source_image_id
    )


def assert_finite(fmset: FeatureMapSet) -> None:
    """Raise :class:`NonFiniteValue` at the first NaN/Inf coordinate."""
    assert_array_finite(fmset.maps, what=f"feature maps of image {fmset.source_image_id}")


def assert_array_finite(arr: np.ndarray, what: str = "array") -> None:
    finite = np.isfinite(arr)
    if finite.all():
        return
    flat_idx = int(np.argmin(finite))
    coord = np.unravel_index(flat_idx, arr.shape)
    value = arr[coord]
    raise NonFiniteValue(f"non-finite value {value!r} in {what} at {coord}", coord=coord)
