"""Command-line entry points.

Six subcommands cover the pipeline end to end: `train` fits a network on one
fold, `extract` turns images into descriptors, `svm` fits the one-vs-all
classifier, `score` writes a normalized score table for the test set,
`committee` fuses score tables, and `evaluate` runs the whole fold protocol
for a committee described by an experiment file.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .committee import (
    accuracy,
    committee_predict,
    normalize_table,
    read_score_file,
    table_predict,
    write_score_file,
)
from .config import (
    load_experiment_config,
    load_network_config,
)
from .errors import CdfnetError, FormatError
from .model_io import read_container, write_container
from .pipeline import (
    evaluate_protocol,
    extract_descriptors,
    load_model,
    load_svm,
    save_model,
    save_svm,
    train_network,
)
from .stl10 import (
    LabeledImage,
    load_fold_plan,
    load_stl10,
    read_stl10_labels,
)
from .svm import Descriptor, score_many, train_ova_svm

logger = logging.getLogger(__name__)


def _apply_seed(cfg, seed):
    if seed is None:
        return cfg
    from dataclasses import replace

    return replace(cfg, seeds=cfg.seeds.shifted(seed))


def _fold_images(args) -> list[LabeledImage]:
    images = load_stl10(args.train_x, args.train_y)
    if args.fold is None:
        return images
    if args.folds is None:
        raise FormatError("--fold requires --folds")
    plan = load_fold_plan(args.folds)
    return [images[i] for i in plan.folds[args.fold]]


def _write_descriptors(path, descriptors: list[Descriptor], labels) -> None:
    data = np.stack([d.values for d in descriptors])
    if labels is None:
        labels = np.full(len(descriptors), -1.0)
    tensors = {"descriptors": data, "labels": np.asarray(labels, dtype=np.float64)}
    ids = "\n".join(str(d.image_id) for d in descriptors)
    write_container(path, tensors, ids)


def _read_descriptors(path) -> tuple[list[Descriptor], np.ndarray]:
    tensors, ids_text = read_container(path)
    try:
        data = tensors["descriptors"]
        labels = tensors["labels"]
    except KeyError as exc:
        raise FormatError(f"{path}: missing tensor {exc}") from exc
    ids = ids_text.splitlines()
    if len(ids) != data.shape[0] or labels.shape[0] != data.shape[0]:
        raise FormatError(f"{path}: id/label/descriptor count mismatch")
    descs = [Descriptor(row, image_id=int(ids[i])) for i, row in enumerate(data)]
    return descs, labels


def _cmd_train(args) -> int:
    cfg = _apply_seed(load_network_config(args.config), args.seed)
    fold_images = _fold_images(args)
    logger.info("training %s on %d images", cfg.name, len(fold_images))
    model = train_network(cfg, fold_images)
    save_model(args.out, model)
    print(f"wrote model {args.out}")
    return 0


def _cmd_extract(args) -> int:
    model = load_model(args.model)
    images = load_stl10(args.images, args.labels)
    if args.fold is not None:
        if args.folds is None:
            raise FormatError("--fold requires --folds")
        plan = load_fold_plan(args.folds)
        images = [images[i] for i in plan.folds[args.fold]]
    if args.augment:
        from .pipeline import _augmented

        images = _augmented(images, model.config)
    descs = extract_descriptors(model, images)
    labels = None if args.labels is None else [img.label for img in images]
    _write_descriptors(args.out, descs, labels)
    print(f"wrote {len(descs)} descriptors to {args.out}")
    return 0


def _cmd_svm(args) -> int:
    descs, labels = _read_descriptors(args.descriptors)
    if np.any(labels < 0):
        raise FormatError(f"{args.descriptors}: labels missing, cannot train")
    model = train_ova_svm(descs, [int(v) for v in labels], reg_c=args.reg_c)
    save_svm(args.out, model)
    print(f"wrote SVM {args.out}")
    return 0


def _cmd_score(args) -> int:
    svm = load_svm(args.svm)
    descs, labels = _read_descriptors(args.descriptors)
    raw = score_many(svm, descs)
    table = normalize_table(args.network_id, raw, per_network=args.per_network)
    write_score_file(args.out, table)
    if not np.any(labels < 0):
        acc = accuracy(table_predict(table), [int(v) for v in labels])
        print(f"accuracy {acc!r}")
    print(f"wrote scores {args.out}")
    return 0


def _cmd_committee(args) -> int:
    tables = [read_score_file(path) for path in args.scores]
    predictions = committee_predict(tables)
    if args.labels is not None:
        labels = read_stl10_labels(args.labels)
        acc = accuracy(predictions, [int(v) for v in labels])
        print(f"committee accuracy {acc!r}")
    if args.out is not None:
        with open(args.out, "w", encoding="ascii") as fh:
            for image_id, pred in zip(tables[0].image_ids, predictions):
                fh.write(f"{image_id} {pred}\n")
        print(f"wrote predictions {args.out}")
    elif args.labels is None:
        # with nothing else to report, show the predictions
        for image_id, pred in zip(tables[0].image_ids, predictions):
            print(f"{image_id} {pred}")
    return 0


def _cmd_evaluate(args) -> int:
    exp = load_experiment_config(args.config)
    cfgs = [
        _apply_seed(load_network_config(p), args.seed) for p in exp.network_paths
    ]
    train_images = load_stl10(args.train_x, args.train_y)
    test_images = load_stl10(args.test_x, args.test_y)
    plan = load_fold_plan(args.folds)
    folds = exp.folds if args.fold is None else (args.fold,)
    report = evaluate_protocol(
        cfgs,
        train_images,
        test_images,
        plan,
        fold_indices=folds,
        out_dir=args.out,
        per_network_rescale=args.per_network,
    )
    for section in report.networks + (report.committee,):
        print(f"{section.name} mean {section.mean!r} std {section.std!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdfnet",
        description="Committees of k-means convolutional feature networks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one network on one training fold")
    p.add_argument("--config", required=True, help="network config file")
    p.add_argument("--train-x", required=True, help="training images (.bin)")
    p.add_argument("--train-y", required=True, help="training labels (.bin)")
    p.add_argument("--folds", help="fold index file")
    p.add_argument("--fold", type=int, help="fold number (omit: all images)")
    p.add_argument("--seed", type=int, help="override all seeds from one base")
    p.add_argument("--out", required=True, help="model container path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("extract", help="compute descriptors for an image file")
    p.add_argument("--model", required=True, help="model container path")
    p.add_argument("--images", required=True, help="images (.bin)")
    p.add_argument("--labels", help="labels (.bin), optional")
    p.add_argument("--folds", help="fold index file")
    p.add_argument("--fold", type=int, help="restrict to one fold")
    p.add_argument("--augment", action="store_true", help="apply the training augment plan")
    p.add_argument("--out", required=True, help="descriptor container path")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("svm", help="train the one-vs-all linear SVM")
    p.add_argument("--descriptors", required=True, help="descriptor container")
    p.add_argument("--reg-c", type=float, default=1.0, help="SVM regularization C")
    p.add_argument("--out", required=True, help="SVM container path")
    p.set_defaults(func=_cmd_svm)

    p = sub.add_parser("score", help="score descriptors and write a score table")
    p.add_argument("--svm", required=True, help="SVM container path")
    p.add_argument("--descriptors", required=True, help="descriptor container")
    p.add_argument("--network-id", required=True, help="network id for the table")
    p.add_argument("--per-network", action="store_true", help="rescale over the whole table")
    p.add_argument("--out", required=True, help="score file path")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("committee", help="fuse score tables and predict")
    p.add_argument("scores", nargs="+", help="score files to fuse")
    p.add_argument("--labels", help="labels (.bin) for accuracy")
    p.add_argument("--out", help="predictions output path")
    p.set_defaults(func=_cmd_committee)

    p = sub.add_parser("evaluate", help="full fold protocol for a committee")
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--train-x", required=True)
    p.add_argument("--train-y", required=True)
    p.add_argument("--test-x", required=True)
    p.add_argument("--test-y", required=True)
    p.add_argument("--folds", required=True, help="fold index file")
    p.add_argument("--fold", type=int, help="run a single fold")
    p.add_argument("--seed", type=int, help="override all seeds from one base")
    p.add_argument("--per-network", action="store_true", help="rescale per network, not per image")
    p.add_argument("--out", help="output directory for scores and reports")
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
    )
    try:
        return args.func(args)
    except (CdfnetError, OSError, ValueError) as exc:
        # ValueError covers dataclass contract checks (e.g. a --network-id
        # with spaces) that user input can reach.
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
