"""Training orchestration, model persistence, and the 10-fold protocol.

A trained network is layer-1 filters (with their whitening transform), a
random group assignment, and one layer-2 filter bank per group. Everything
downstream of the seeds is deterministic, so a NetworkConfig plus its seeds
reproduces models, descriptors, and score files bit for bit.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace

import numpy as np

from .augment import AugmentPlan, expand_set, scale
from .committee import (
    ScoreTable,
    accuracy,
    committee_predict,
    normalize_table,
    sum_scores,
    table_predict,
    write_score_file,
)
from .config import NetworkConfig, network_config_from_text, network_config_to_text
from .errors import DimError, FormatError
from .kmeans import FilterBank, kmeans
from .layer import GroupAssignment, make_groups, run_layer, layer_output_shape
from .model_io import read_container, write_container
from .patches import PatchMatrix, ZcaTransform, apply_zca, extract_patches, fit_zca, normalize_columns
from .stl10 import FoldPlan, LabeledImage
from .svm import Descriptor, SvmModel, score_many, train_ova_svm
from .tensor import FeatureMapSet, SeededRng, tensor_slice

logger = logging.getLogger(__name__)

KMEANS_MAX_ITERS = 100


@dataclass(frozen=True)
class NetworkModel:
    """A trained feature extractor: both layers plus the group wiring."""

    config: NetworkConfig
    bank1: FilterBank
    groups: GroupAssignment
    banks2: tuple[FilterBank, ...]
    input_shape: tuple[int, int]

    def __post_init__(self):
        if len(self.banks2) != self.groups.n_groups:
            raise DimError(
                f"{len(self.banks2)} layer-2 banks for {self.groups.n_groups} groups"
            )


def _resolution_factor(cfg: NetworkConfig) -> float | None:
    """The network's working resolution (None = native)."""
    if cfg.scale_factor is not None:
        return cfg.scale_factor
    return cfg.augment.scale_factor


def _prepare_image(img: LabeledImage, factor: float | None) -> LabeledImage:
    return scale(img, factor) if factor is not None and factor != 1.0 else img


def _augmented(images: list[LabeledImage], cfg: NetworkConfig) -> list[LabeledImage]:
    """Mirror/rotation copies at native resolution; scaling happens later."""
    return expand_set(images, replace(cfg.augment, scale_factor=None))


def _to_fmset(img: LabeledImage) -> FeatureMapSet:
    return FeatureMapSet(img.pixels[:, :, np.newaxis], img.image_id)


def _train_bank(
    sets: list[FeatureMapSet],
    patch_side: int,
    depth: int,
    n_patches: int,
    k: int,
    zca_epsilon: float,
    patch_rng: SeededRng,
    kmeans_rng: SeededRng,
    layer_index: int,
) -> FilterBank:
    """Sample patches, normalize, whiten, and cluster them into filters."""
    raw = extract_patches(sets, patch_side, n_patches, patch_rng)
    normed = PatchMatrix(normalize_columns(raw.data), patch_side, depth)
    zca = fit_zca(normed, zca_epsilon)
    white = apply_zca(zca, normed)
    result = kmeans(white, k, KMEANS_MAX_ITERS, kmeans_rng)
    return FilterBank(
        filters=result.centroids,
        patch_side=patch_side,
        depth=depth,
        whitening=zca,
        layer_index=layer_index,
    )


def train_network(cfg: NetworkConfig, fold_images: list[LabeledImage]) -> NetworkModel:
    """Train both layers' filters on the (augmented) fold images."""
    factor = _resolution_factor(cfg)
    train_imgs = [_prepare_image(img, factor) for img in _augmented(fold_images, cfg)]
    sets = [_to_fmset(img) for img in train_imgs]
    input_shape = (sets[0].height, sets[0].width)
    for s in sets:
        if (s.height, s.width) != input_shape:
            raise DimError(
                f"training images must share one size, got {input_shape} and "
                f"{(s.height, s.width)}"
            )
    # grouping depends only on the config, so settle it before the heavy work
    depth_out = cfg.layer1.k * (2 if cfg.rectifier == "on_off" else 1)
    groups = make_groups(depth_out, cfg.layer2.group_size, SeededRng(cfg.seeds.grouping))

    patches_rng = SeededRng(cfg.seeds.patches)
    logger.info("%s: training layer-1 filters (K=%d)", cfg.name, cfg.layer1.k)
    bank1 = _train_bank(
        sets,
        patch_side=cfg.layer1.patch_side,
        depth=1,
        n_patches=cfg.layer1.n_patches,
        k=cfg.layer1.k,
        zca_epsilon=cfg.layer1.zca_epsilon,
        patch_rng=patches_rng.child(0),
        kmeans_rng=SeededRng(cfg.seeds.kmeans1),
        layer_index=1,
    )

    layer1_cfg = cfg.layer1_runtime()
    outputs1 = [run_layer(s, bank1, layer1_cfg) for s in sets]
    logger.info(
        "%s: layer-1 output %dx%dx%d, %d groups of %d",
        cfg.name,
        outputs1[0].height,
        outputs1[0].width,
        depth_out,
        groups.n_groups,
        groups.group_size,
    )

    kmeans2_rng = SeededRng(cfg.seeds.kmeans2)
    banks2 = []
    for g, group in enumerate(groups.groups):
        group_sets = [tensor_slice(o, group) for o in outputs1]
        banks2.append(
            _train_bank(
                group_sets,
                patch_side=cfg.layer2.patch_side,
                depth=cfg.layer2.group_size,
                n_patches=cfg.layer2.n_patches,
                k=cfg.layer2.k_per_group,
                zca_epsilon=cfg.layer2.zca_epsilon,
                patch_rng=patches_rng.child(1 + g),
                kmeans_rng=kmeans2_rng.child(g),
                layer_index=2,
            )
        )
    return NetworkModel(cfg, bank1, groups, tuple(banks2), input_shape)


def extract_descriptors(
    model: NetworkModel, images: list[LabeledImage]
) -> list[Descriptor]:
    """Run both layers and flatten the final pooled maps, one per image.

    Images are rescaled to the model's working resolution internally; pass
    native-resolution images.
    """
    cfg = model.config
    factor = _resolution_factor(cfg)
    layer1_cfg = cfg.layer1_runtime()
    layer2_cfg = cfg.layer2_runtime()
    descriptors = []
    for img in images:
        fmset = _to_fmset(_prepare_image(img, factor))
        if (fmset.height, fmset.width) != model.input_shape:
            raise DimError(
                f"image {img.image_id!r} is {(fmset.height, fmset.width)} after "
                f"rescaling, model was trained at {model.input_shape}"
            )
        out1 = run_layer(fmset, model.bank1, layer1_cfg)
        parts = []
        for group, bank2 in zip(model.groups.groups, model.banks2):
            out2 = run_layer(tensor_slice(out1, group), bank2, layer2_cfg)
            parts.append(out2.maps.ravel())
        if cfg.descriptor_mode == "concat_layers":
            parts.append(out1.maps.ravel())
        descriptors.append(Descriptor(np.concatenate(parts), image_id=img.image_id))
    return descriptors


def descriptor_shape(cfg: NetworkConfig, height: int, width: int):
    """Closed-form layer shapes and descriptor length for one input size."""
    factor = _resolution_factor(cfg)
    if factor is not None and factor != 1.0:
        height = max(1, round(height * factor))
        width = max(1, round(width * factor))
    l1 = layer_output_shape(height, width, cfg.layer1.k, cfg.layer1.patch_side, cfg.layer1_runtime())
    l2 = layer_output_shape(l1[0], l1[1], cfg.layer2.k_per_group, cfg.layer2.patch_side, cfg.layer2_runtime())
    n_groups = l1[2] // cfg.layer2.group_size
    dim = n_groups * l2[0] * l2[1] * l2[2]
    if cfg.descriptor_mode == "concat_layers":
        dim += l1[0] * l1[1] * l1[2]
    return l1, l2, n_groups, dim


# -- persistence --------------------------------------------------------------


def save_model(path, model: NetworkModel) -> None:
    tensors = {
        "input_shape": np.array(model.input_shape, dtype=np.float64),
        "layer1/filters": model.bank1.filters,
        "layer1/zca_mean": model.bank1.whitening.mean,
        "layer1/zca_matrix": model.bank1.whitening.matrix,
        "layer1/zca_epsilon": np.array([model.bank1.whitening.epsilon]),
        "groups": np.array(model.groups.groups, dtype=np.float64),
    }
    for g, bank in enumerate(model.banks2):
        prefix = f"layer2/g{g:04d}"
        tensors[f"{prefix}/filters"] = bank.filters
        tensors[f"{prefix}/zca_mean"] = bank.whitening.mean
        tensors[f"{prefix}/zca_matrix"] = bank.whitening.matrix
        tensors[f"{prefix}/zca_epsilon"] = np.array([bank.whitening.epsilon])
    write_container(path, tensors, network_config_to_text(model.config))


def load_model(path) -> NetworkModel:
    tensors, config_text = read_container(path)
    cfg = network_config_from_text(config_text)
    try:
        bank1 = FilterBank(
            filters=tensors["layer1/filters"],
            patch_side=cfg.layer1.patch_side,
            depth=1,
            whitening=ZcaTransform(
                mean=tensors["layer1/zca_mean"],
                matrix=tensors["layer1/zca_matrix"],
                epsilon=float(tensors["layer1/zca_epsilon"][0]),
            ),
            layer_index=1,
        )
        groups = GroupAssignment(
            tuple(tuple(int(i) for i in row) for row in tensors["groups"])
        )
        banks2 = []
        for g in range(groups.n_groups):
            prefix = f"layer2/g{g:04d}"
            banks2.append(
                FilterBank(
                    filters=tensors[f"{prefix}/filters"],
                    patch_side=cfg.layer2.patch_side,
                    depth=cfg.layer2.group_size,
                    whitening=ZcaTransform(
                        mean=tensors[f"{prefix}/zca_mean"],
                        matrix=tensors[f"{prefix}/zca_matrix"],
                        epsilon=float(tensors[f"{prefix}/zca_epsilon"][0]),
                    ),
                    layer_index=2,
                )
            )
        input_shape = tuple(int(v) for v in tensors["input_shape"])
    except KeyError as exc:
        raise FormatError(f"{path}: missing tensor {exc}") from exc
    return NetworkModel(cfg, bank1, groups, tuple(banks2), input_shape)


def save_svm(path, model: SvmModel) -> None:
    tensors = {
        "weights": model.weights,
        "biases": model.biases,
        "feature_mean": model.feature_mean,
        "feature_std": model.feature_std,
    }
    write_container(path, tensors, f"[svm]\nreg_c = {model.reg_c!r}\n")


def load_svm(path) -> SvmModel:
    import configparser

    tensors, config_text = read_container(path)
    cp = configparser.ConfigParser()
    cp.read_string(config_text)
    try:
        reg_c = float(cp["svm"]["reg_c"])
        return SvmModel(
            weights=tensors["weights"],
            biases=tensors["biases"],
            reg_c=reg_c,
            feature_mean=tensors["feature_mean"],
            feature_std=tensors["feature_std"],
        )
    except (KeyError, configparser.Error) as exc:
        raise FormatError(f"{path}: bad SVM container: {exc}") from exc


# -- fold protocol -------------------------------------------------------------


@dataclass(frozen=True)
class ReportSection:
    """Per-fold accuracies for one network (or the committee)."""

    name: str
    fold_indices: tuple[int, ...]
    accuracies: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))


@dataclass(frozen=True)
class ExperimentReport:
    networks: tuple[ReportSection, ...]
    committee: ReportSection
    committee_members: tuple[str, ...]


def train_and_score(
    cfg: NetworkConfig,
    fold_images: list[LabeledImage],
    test_images: list[LabeledImage],
    per_network_rescale: bool = False,
) -> tuple[NetworkModel, SvmModel, ScoreTable]:
    """One committee member on one fold: features, classifier, test scores."""
    model = train_network(cfg, fold_images)
    aug = _augmented(fold_images, cfg)
    train_descs = extract_descriptors(model, aug)
    train_labels = [img.label for img in aug]
    svm = train_ova_svm(train_descs, train_labels, reg_c=cfg.svm_reg_c)
    test_descs = extract_descriptors(model, test_images)
    raw = score_many(svm, test_descs)
    table = normalize_table(cfg.name, raw, per_network=per_network_rescale)
    return model, svm, table


def evaluate_protocol(
    cfgs: list[NetworkConfig],
    train_images: list[LabeledImage],
    test_images: list[LabeledImage],
    fold_plan: FoldPlan,
    fold_indices=None,
    out_dir=None,
    per_network_rescale: bool = False,
) -> ExperimentReport:
    """Train each network on each fold, score the test set, fuse, aggregate.

    When out_dir is given, per-(fold, network) score files, the text report,
    and the accuracy CSV are persisted there.
    """
    names = [cfg.name for cfg in cfgs]
    if len(set(names)) != len(names):
        raise ValueError(f"network names must be unique, got {names}")
    if fold_indices is None:
        fold_indices = tuple(range(len(fold_plan.folds)))
    fold_indices = tuple(int(f) for f in fold_indices)
    test_labels = [img.label for img in test_images]

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    per_net_acc: dict[str, list[float]] = {name: [] for name in names}
    committee_acc: list[float] = []
    for fold in fold_indices:
        fold_images = [train_images[i] for i in fold_plan.folds[fold]]
        tables = []
        for cfg in cfgs:
            logger.info("fold %d: network %s", fold, cfg.name)
            _, _, table = train_and_score(
                cfg, fold_images, test_images, per_network_rescale
            )
            tables.append(table)
            acc = accuracy(table_predict(table), test_labels)
            per_net_acc[cfg.name].append(acc)
            logger.info("fold %d: %s accuracy %.4f", fold, cfg.name, acc)
            if out_dir is not None:
                write_score_file(
                    os.path.join(out_dir, f"scores_fold{fold}_{cfg.name}.txt"), table
                )
        acc = accuracy(committee_predict(tables), test_labels)
        committee_acc.append(acc)
        logger.info("fold %d: committee accuracy %.4f", fold, acc)

    report = ExperimentReport(
        networks=tuple(
            ReportSection(name, fold_indices, tuple(per_net_acc[name])) for name in names
        ),
        committee=ReportSection("committee", fold_indices, tuple(committee_acc)),
        committee_members=tuple(names),
    )
    if out_dir is not None:
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="ascii") as fh:
            fh.write(render_report(report))
        with open(os.path.join(out_dir, "report.csv"), "w", encoding="ascii") as fh:
            fh.write(report_csv(report))
    return report


def render_report(report: ExperimentReport) -> str:
    lines = []
    for section in report.networks + (report.committee,):
        lines.append(f"[{section.name}]")
        if section.name == "committee":
            lines.append("members " + " ".join(report.committee_members))
        for fold, acc in zip(section.fold_indices, section.accuracies):
            lines.append(f"fold {fold} accuracy {acc!r}")
        lines.append(f"mean {section.mean!r}")
        lines.append(f"std {section.std!r}")
        lines.append("")
    return "\n".join(lines)


def report_csv(report: ExperimentReport) -> str:
    lines = ["fold,network,accuracy"]
    for section in report.networks + (report.committee,):
        for fold, acc in zip(section.fold_indices, section.accuracies):
            lines.append(f"{fold},{section.name},{acc!r}")
    return "\n".join(lines) + "\n"
