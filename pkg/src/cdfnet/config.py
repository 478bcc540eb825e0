"""Network and experiment configuration: dataclasses plus an INI text form.

The same text form is used for standalone config files and for the config
block embedded in saved model containers, so a model file is always
self-describing.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

from .augment import AugmentPlan
from .errors import FormatError
from .layer import LayerConfig

DESCRIPTOR_MODES = ("layer2_only", "concat_layers")


@dataclass(frozen=True)
class Layer1Config:
    k: int = 300
    patch_side: int = 16
    pool_side: int = 12
    pool_stride: int = 12
    pool_alpha: float = 1.0
    lcn_window: int = 9
    lcn_sigma: float = 2.25
    zca_epsilon: float = 0.01
    n_patches: int = 400_000
    dense_preprocess: bool = True


@dataclass(frozen=True)
class Layer2Config:
    k_per_group: int = 75
    patch_side: int = 3
    group_size: int = 4
    pool_side: int = 3
    pool_stride: int = 3
    pool_alpha: float = 1.0
    lcn_window: int = 3
    lcn_sigma: float = 0.75
    zca_epsilon: float = 0.1
    n_patches: int = 200_000
    dense_preprocess: bool = True


@dataclass(frozen=True)
class Seeds:
    patches: int = 1
    kmeans1: int = 2
    kmeans2: int = 3
    grouping: int = 4

    def shifted(self, base: int) -> "Seeds":
        """Derive all four seeds from one base seed (CLI --seed override)."""
        return Seeds(
            patches=base * 4 + 0,
            kmeans1=base * 4 + 1,
            kmeans2=base * 4 + 2,
            grouping=base * 4 + 3,
        )


@dataclass(frozen=True)
class NetworkConfig:
    """Complete hyperparameter record for one committee member."""

    name: str = "net"
    rectifier: str = "abs"
    scale_factor: float | None = None
    layer1: Layer1Config = field(default_factory=Layer1Config)
    layer2: Layer2Config = field(default_factory=Layer2Config)
    augment: AugmentPlan = field(default_factory=AugmentPlan)
    seeds: Seeds = field(default_factory=Seeds)
    descriptor_mode: str = "layer2_only"
    svm_reg_c: float = 1.0

    def __post_init__(self):
        if not self.name or any(ch.isspace() for ch in self.name):
            raise ValueError(f"network name must be non-empty without spaces: {self.name!r}")
        if self.descriptor_mode not in DESCRIPTOR_MODES:
            raise ValueError(
                f"descriptor_mode must be one of {DESCRIPTOR_MODES}, got {self.descriptor_mode!r}"
            )
        if self.scale_factor is not None and not 0.0 < self.scale_factor <= 1.0:
            raise ValueError(f"scale_factor must be in (0, 1], got {self.scale_factor}")
        # fail fast on invalid layer params
        self.layer1_runtime()
        self.layer2_runtime()

    def layer1_runtime(self) -> LayerConfig:
        l1 = self.layer1
        return LayerConfig(
            rectifier=self.rectifier,
            pool_side=l1.pool_side,
            pool_stride=l1.pool_stride,
            pool_alpha=l1.pool_alpha,
            lcn_window=l1.lcn_window,
            lcn_sigma=l1.lcn_sigma,
            dense_preprocess=l1.dense_preprocess,
        )

    def layer2_runtime(self) -> LayerConfig:
        l2 = self.layer2
        return LayerConfig(
            rectifier=self.rectifier,
            pool_side=l2.pool_side,
            pool_stride=l2.pool_stride,
            pool_alpha=l2.pool_alpha,
            lcn_window=l2.lcn_window,
            lcn_sigma=l2.lcn_sigma,
            dense_preprocess=l2.dense_preprocess,
        )

    def training_plan(self) -> AugmentPlan:
        """Augment plan for training images, with the network's resolution."""
        return replace(self.augment, scale_factor=self.scale_factor)


def parse_fraction(text: str) -> float:
    """Float parser that also accepts 'a/b' fractions (e.g. 1/3)."""
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        return float(num) / float(den)
    return float(text)


def _format_float(x: float) -> str:
    return repr(float(x))


def network_config_to_text(cfg: NetworkConfig) -> str:
    cp = configparser.ConfigParser()
    cp["network"] = {
        "name": cfg.name,
        "rectifier": cfg.rectifier,
        "scale_factor": "" if cfg.scale_factor is None else _format_float(cfg.scale_factor),
        "descriptor_mode": cfg.descriptor_mode,
        "svm_reg_c": _format_float(cfg.svm_reg_c),
    }
    l1 = cfg.layer1
    cp["layer1"] = {
        "filters": str(l1.k),
        "patch_side": str(l1.patch_side),
        "pool_side": str(l1.pool_side),
        "pool_stride": str(l1.pool_stride),
        "pool_alpha": _format_float(l1.pool_alpha),
        "lcn_window": str(l1.lcn_window),
        "lcn_sigma": _format_float(l1.lcn_sigma),
        "zca_epsilon": _format_float(l1.zca_epsilon),
        "patches": str(l1.n_patches),
        "dense_preprocess": str(l1.dense_preprocess).lower(),
    }
    l2 = cfg.layer2
    cp["layer2"] = {
        "filters_per_group": str(l2.k_per_group),
        "patch_side": str(l2.patch_side),
        "group_size": str(l2.group_size),
        "pool_side": str(l2.pool_side),
        "pool_stride": str(l2.pool_stride),
        "pool_alpha": _format_float(l2.pool_alpha),
        "lcn_window": str(l2.lcn_window),
        "lcn_sigma": _format_float(l2.lcn_sigma),
        "zca_epsilon": _format_float(l2.zca_epsilon),
        "patches": str(l2.n_patches),
        "dense_preprocess": str(l2.dense_preprocess).lower(),
    }
    cp["augment"] = {
        "mirror": str(cfg.augment.mirror).lower(),
        "rotations_deg": ", ".join(_format_float(a) for a in cfg.augment.rotations_deg),
        "scale_factor": ""
        if cfg.augment.scale_factor is None
        else _format_float(cfg.augment.scale_factor),
    }
    cp["seeds"] = {
        "patches": str(cfg.seeds.patches),
        "kmeans1": str(cfg.seeds.kmeans1),
        "kmeans2": str(cfg.seeds.kmeans2),
        "grouping": str(cfg.seeds.grouping),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def network_config_from_text(text: str) -> NetworkConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise FormatError(f"bad network config: {exc}") from exc
    try:
        net = cp["network"]
        l1 = cp["layer1"]
        l2 = cp["layer2"]
        aug = cp["augment"] if cp.has_section("augment") else {}
        seeds = cp["seeds"] if cp.has_section("seeds") else {}

        scale_text = net.get("scale_factor", "").strip()
        rot_text = (aug.get("rotations_deg", "") or "").strip()
        rotations = tuple(
            parse_fraction(tok) for tok in rot_text.split(",") if tok.strip()
        )
        aug_scale_text = (aug.get("scale_factor", "") or "").strip()
        return NetworkConfig(
            name=net.get("name", "net"),
            rectifier=net.get("rectifier", "abs"),
            scale_factor=parse_fraction(scale_text) if scale_text else None,
            descriptor_mode=net.get("descriptor_mode", "layer2_only"),
            svm_reg_c=parse_fraction(net.get("svm_reg_c", "1.0")),
            layer1=Layer1Config(
                k=int(l1.get("filters", "300")),
                patch_side=int(l1.get("patch_side", "16")),
                pool_side=int(l1.get("pool_side", "12")),
                pool_stride=int(l1.get("pool_stride", "12")),
                pool_alpha=parse_fraction(l1.get("pool_alpha", "1.0")),
                lcn_window=int(l1.get("lcn_window", "9")),
                lcn_sigma=parse_fraction(l1.get("lcn_sigma", "2.25")),
                zca_epsilon=parse_fraction(l1.get("zca_epsilon", "0.01")),
                n_patches=int(l1.get("patches", "400000")),
                dense_preprocess=_parse_bool(l1.get("dense_preprocess", "true")),
            ),
            layer2=Layer2Config(
                k_per_group=int(l2.get("filters_per_group", "75")),
                patch_side=int(l2.get("patch_side", "3")),
                group_size=int(l2.get("group_size", "4")),
                pool_side=int(l2.get("pool_side", "3")),
                pool_stride=int(l2.get("pool_stride", "3")),
                pool_alpha=parse_fraction(l2.get("pool_alpha", "1.0")),
                lcn_window=int(l2.get("lcn_window", "3")),
                lcn_sigma=parse_fraction(l2.get("lcn_sigma", "0.75")),
                zca_epsilon=parse_fraction(l2.get("zca_epsilon", "0.1")),
                n_patches=int(l2.get("patches", "200000")),
                dense_preprocess=_parse_bool(l2.get("dense_preprocess", "true")),
            ),
            augment=AugmentPlan(
                mirror=_parse_bool(aug.get("mirror", "false")),
                rotations_deg=rotations,
                scale_factor=parse_fraction(aug_scale_text) if aug_scale_text else None,
            ),
            seeds=Seeds(
                patches=int(seeds.get("patches", "1")),
                kmeans1=int(seeds.get("kmeans1", "2")),
                kmeans2=int(seeds.get("kmeans2", "3")),
                grouping=int(seeds.get("grouping", "4")),
            ),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad network config: {exc}") from exc


def load_network_config(path) -> NetworkConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return network_config_from_text(fh.read())


def save_network_config(path, cfg: NetworkConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(network_config_to_text(cfg))


def _parse_bool(text: str) -> bool:
    text = text.strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"bad boolean {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """A committee experiment: member configs and which folds to run."""

    name: str
    network_paths: tuple[str, ...]
    folds: tuple[int, ...]  # indices into the fold plan


def load_experiment_config(path) -> ExperimentConfig:
    import os

    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise FormatError(f"no such experiment config: {path}")
    try:
        exp = cp["experiment"]
        name = exp.get("name", "experiment")
        base = os.path.dirname(os.path.abspath(path))
        networks = tuple(
            os.path.join(base, tok.strip())
            for tok in exp["networks"].split(",")
            if tok.strip()
        )
        folds_text = exp.get("folds", "all").strip()
        if folds_text == "all":
            folds = tuple(range(10))
        else:
            folds = tuple(
                int(t) for t in folds_text.replace(",", " ").split() if t.strip()
            )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad experiment config {path}: {exc}") from exc
    if not networks:
        raise FormatError(f"{path}: experiment lists no networks")
    return ExperimentConfig(name=name, network_paths=networks, folds=folds)
