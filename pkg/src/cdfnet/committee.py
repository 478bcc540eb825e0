"""Score rescaling, summation across networks, and the committee decision.

Each network contributes one [0,1]-rescaled score vector per test image;
the committee adds them up and takes the argmax. Rescaling is per image
across its class scores, so every network contributes exactly one unit of
dynamic range per image. A per-network mode (rescaling over the whole test
set at once) is available for reproduction sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, ContractError, FormatError
from .svm import ScoreVector

SCORE_MAGIC = "scores"
SCORE_VERSION = "v1"


@dataclass(frozen=True)
class ScoreTable:
    """Per-test-image score vectors produced by one network."""

    network_id: str
    image_ids: tuple[int, ...]
    scores: np.ndarray  # (n_images, n_classes)
    normalized: bool = False

    def __post_init__(self):
        if not self.network_id or any(ch.isspace() for ch in self.network_id):
            raise ValueError(f"network_id must be non-empty without spaces: {self.network_id!r}")
        scores = np.asarray(self.scores, dtype=np.float64)
        image_ids = tuple(int(i) for i in self.image_ids)
        if scores.ndim != 2 or scores.shape[0] != len(image_ids):
            raise ValueError(
                f"scores shape {scores.shape} inconsistent with {len(image_ids)} image ids"
            )
        if self.normalized and scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
            raise ContractError("normalized score table has entries outside [0, 1]")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "image_ids", image_ids)

    @property
    def n_images(self) -> int:
        return self.scores.shape[0]

    @property
    def n_classes(self) -> int:
        return self.scores.shape[1]


def minmax_normalize(sv: ScoreVector) -> ScoreVector:
    """Affine map of the scores onto [0, 1]; an all-equal vector maps to zeros.

    All-zero output makes an uninformative network abstain rather than vote
    for every class at once.
    """
    lo = float(sv.scores.min())
    hi = float(sv.scores.max())
    if hi == lo:
        out = np.zeros_like(sv.scores)
    else:
        out = (sv.scores - lo) / (hi - lo)
    return ScoreVector(out, normalized=True, image_id=sv.image_id)


def normalize_table(
    network_id: str, vectors: list[ScoreVector], per_network: bool = False
) -> ScoreTable:
    """Build a normalized ScoreTable from raw score vectors.

    per_network=False rescales each image's scores independently (default);
    per_network=True applies one min-max over the whole table.
    """
    raw = np.stack([sv.scores for sv in vectors])
    image_ids = tuple(sv.image_id for sv in vectors)
    if per_network:
        lo, hi = float(raw.min()), float(raw.max())
        scores = np.zeros_like(raw) if hi == lo else (raw - lo) / (hi - lo)
    else:
        scores = np.stack([minmax_normalize(sv).scores for sv in vectors])
    return ScoreTable(network_id, image_ids, scores, normalized=True)


def _check_aligned(tables: list[ScoreTable]) -> None:
    if not tables:
        raise AlignmentError("need at least one score table")
    base = tables[0]
    for t in tables[1:]:
        if t.image_ids != base.image_ids:
            raise AlignmentError(
                f"tables {base.network_id!r} and {t.network_id!r} cover different images"
            )
        if t.n_classes != base.n_classes:
            raise AlignmentError(
                f"tables {base.network_id!r} and {t.network_id!r} disagree on class count"
            )
    for t in tables:
        if not t.normalized:
            raise ContractError(f"table {t.network_id!r} is not normalized")


def sum_scores(tables: list[ScoreTable]) -> ScoreTable:
    """Elementwise sum of normalized tables; the output is not renormalized."""
    _check_aligned(tables)
    total = np.zeros_like(tables[0].scores)
    for t in tables:
        total += t.scores
    member_ids = "+".join(t.network_id for t in tables)
    return ScoreTable(member_ids, tables[0].image_ids, total, normalized=False)


def committee_predict(tables: list[ScoreTable]) -> list[int]:
    """Per-image argmax of the summed scores; ties go to the lowest index."""
    summed = sum_scores(tables)
    return [int(i) for i in np.argmax(summed.scores, axis=1)]


def table_predict(table: ScoreTable) -> list[int]:
    return [int(i) for i in np.argmax(table.scores, axis=1)]


def accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise AlignmentError(
            f"{predictions.size} predictions but {labels.size} labels"
        )
    return float(np.mean(predictions == labels))


def write_score_file(path, table: ScoreTable) -> None:
    """Text format: `scores v1 <network_id> <C>` then one line per image.

    Floats are written with repr, which round-trips bit-exactly.
    """
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{SCORE_MAGIC} {SCORE_VERSION} {table.network_id} {table.n_classes}\n")
        for i, image_id in enumerate(table.image_ids):
            row = " ".join(repr(float(v)) for v in table.scores[i])
            fh.write(f"{image_id} {row}\n")


def read_score_file(path) -> ScoreTable:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != SCORE_MAGIC:
            raise FormatError(f"{path}: bad score-file header")
        if header[1] != SCORE_VERSION:
            raise FormatError(f"{path}: unsupported score-file version {header[1]!r}")
        network_id = header[2]
        try:
            n_classes = int(header[3])
        except ValueError as exc:
            raise FormatError(f"{path}: bad class count in header") from exc
        image_ids = []
        rows = []
        for lineno, line in enumerate(fh, start=2):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != n_classes + 1:
                raise FormatError(
                    f"{path}:{lineno}: expected {n_classes + 1} tokens, got {len(tokens)}"
                )
            try:
                image_ids.append(int(tokens[0]))
                rows.append([float(t) for t in tokens[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad token") from exc
    if not rows:
        raise FormatError(f"{path}: score file has no rows")
    scores = np.array(rows, dtype=np.float64)
    normalized = bool(scores.min() >= 0.0 and scores.max() <= 1.0)
    return ScoreTable(network_id, tuple(image_ids), scores, normalized=normalized)
