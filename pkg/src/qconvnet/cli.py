"""Command line interface.

Subcommands:
    train  --config F                       run the LR-selection protocol
    verify --params F [--samples N] [--tol T]   dense vs simulator cross-check
    report --dir D                          fold metrics CSVs into grid tables
    sweep  --config F                       train every kernel/factor combination
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
import time

from .config import TrainConfig, parse_config
from .errors import ConfigError, FormatError, QConvError
from .expansion import SUPPORTED_FACTORS
from .idx import load_split, resolve_data_dir
from .network import Geometry
from .params_io import load_params, save_params
from .report import MetricsRow, collect_metrics, render_tables, write_metrics
from .statevec import verify_model
from .train import EncodedData, RunRecord, select_lr

log = logging.getLogger(__name__)


def _run_stem(config: TrainConfig) -> str:
    return f"{config.dataset}{config.image_size}_c{config.kernel_size}_m{config.mult_factor}"


def _metrics_rows(config: TrainConfig, records: list[RunRecord], chosen: RunRecord,
                  stamp: float) -> list[MetricsRow]:
    """One row per protocol run plus a summary row flagging the chosen run."""
    def as_row(r: RunRecord, selected: bool) -> MetricsRow:
        return MetricsRow(
            timestamp=stamp, dataset=config.dataset, image_size=config.image_size,
            kernel_size=config.kernel_size, mult_factor=config.mult_factor,
            lr=r.lr, seed=r.seed, epoch=config.epochs, train_acc=r.train_accuracy,
            test_acc=r.test_accuracy, wall_seconds=r.wall_seconds, selected=selected,
        )

    return [as_row(r, False) for r in records] + [as_row(chosen, True)]


def train_with_config(config: TrainConfig) -> tuple[RunRecord, str, str]:
    """Load data, run the protocol, persist metrics and the chosen model."""
    train_set = load_split(config.dataset, "train", config.image_size, config.data_dir)
    test_set = load_split(config.dataset, "test", config.image_size, config.data_dir)
    geometry = Geometry(config.image_size, config.kernel_size,
                        config.mult_factor, config.n_kernels)
    data = EncodedData.from_sets(geometry, train_set, test_set)
    lr, chosen, records = select_lr(config, data)

    os.makedirs(config.out_dir, exist_ok=True)
    stamp = time.time()
    stem = _run_stem(config)
    metrics_path = os.path.join(config.out_dir, f"metrics_{stem}_{stamp:.6f}.csv")
    write_metrics(metrics_path, _metrics_rows(config, records, chosen, stamp))
    params_path = os.path.join(config.out_dir, f"params_{stem}.qcnv")
    save_params(params_path, chosen.params, config.dataset)
    print(f"selected lr={lr:g} seed={chosen.seed} "
          f"train={chosen.train_accuracy:.4f} test={chosen.test_accuracy:.4f}")
    print(f"metrics: {metrics_path}")
    print(f"params:  {params_path}")
    return chosen, metrics_path, params_path


def _load_config(path: str) -> TrainConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file missing: {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def cmd_train(args: argparse.Namespace) -> int:
    train_with_config(_load_config(args.config))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    params, dataset = load_params(args.params)
    data = load_split(dataset, "test", params.geometry.image_size,
                      data_dir=None, limit=args.samples)
    report = verify_model(params, data.images, data.labels, tol=args.tol)
    out_path = args.params + ".verify.csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "max_abs_diff", "label_matrix", "label_sim"])
        for s in report.samples:
            writer.writerow([s.index, repr(s.max_abs_diff), s.label_matrix, s.label_sim])
    print(f"samples={report.n_samples} tol={report.tol:g} "
          f"max_abs_diff={report.max_abs_diff:.3e}")
    print(f"accuracy matrix={report.matrix_accuracy:.4f} sim={report.sim_accuracy:.4f}")
    print(f"report: {out_path}")
    if report.passed:
        print("PASS")
        return 0
    print(f"FAIL: {len(report.failures)} samples over tol, "
          f"labels_agree={report.labels_agree}")
    return 1


def cmd_report(args: argparse.Namespace) -> int:
    text, flat = render_tables(collect_metrics(args.dir))
    print(text, end="")
    out_path = os.path.join(args.dir, "report.csv")
    with open(out_path, "w", newline="") as fh:
        fh.write(flat)
    print(f"report: {out_path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    base = _load_config(args.config)
    for kernel_size in sorted(SUPPORTED_FACTORS):
        for mult_factor in sorted(SUPPORTED_FACTORS):
            config = dataclasses.replace(base, kernel_size=kernel_size,
                                         mult_factor=mult_factor)
            print(f"== kernel {kernel_size}x{kernel_size}, factor {mult_factor}x{mult_factor} ==")
            train_with_config(config)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qconv",
        description="Unitary-kernel convolutional classifier: train, verify, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the LR-selection protocol from a config file")
    p_train.add_argument("--config", required=True, help="key=value config file")
    p_train.set_defaults(func=cmd_train)

    p_verify = sub.add_parser("verify", help="cross-check a trained model against the simulator")
    p_verify.add_argument("--params", required=True, help="trained params file")
    p_verify.add_argument("--samples", type=int, default=100, help="test samples to compare")
    p_verify.add_argument("--tol", type=float, default=1e-10,
                          help="max allowed probability deviation")
    p_verify.set_defaults(func=cmd_verify)

    p_report = sub.add_parser("report", help="fold metrics CSVs into accuracy tables")
    p_report.add_argument("--dir", required=True, help="directory holding metrics CSVs")
    p_report.set_defaults(func=cmd_report)

    p_sweep = sub.add_parser("sweep", help="train every kernel/factor combination")
    p_sweep.add_argument("--config", required=True, help="base config file")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QConvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
