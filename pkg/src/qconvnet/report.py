"""Run metrics CSVs and the accuracy grid report.

Every training run appends rows to a metrics CSV; the report command folds a
directory of such files into one accuracy grid per (dataset, image size),
kernel sizes down the side and expansion factors across the top. The
rendering is a pure function of the row multiset: rows are sorted internally,
so file order and row order never change the output.
"""
from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass

from .errors import FormatError
from .expansion import SUPPORTED_FACTORS

log = logging.getLogger(__name__)

METRICS_FIELDS = (
    "timestamp", "dataset", "image_size", "kernel_size", "mult_factor",
    "lr", "seed", "epoch", "train_acc", "test_acc", "wall_seconds", "selected",
)
GRID = tuple(sorted(SUPPORTED_FACTORS))


@dataclass
class MetricsRow:
    timestamp: float
    dataset: str
    image_size: int
    kernel_size: int
    mult_factor: int
    lr: float
    seed: int
    epoch: int
    train_acc: float
    test_acc: float
    wall_seconds: float
    selected: bool


def write_metrics(path: str, rows: list[MetricsRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_FIELDS)
        for r in rows:
            writer.writerow([
                repr(r.timestamp), r.dataset, r.image_size, r.kernel_size, r.mult_factor,
                repr(r.lr), r.seed, r.epoch, repr(r.train_acc), repr(r.test_acc),
                f"{r.wall_seconds:.3f}", int(r.selected),
            ])


def read_metrics_file(path: str) -> list[MetricsRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"empty metrics file: {path}") from None
        if tuple(header) != METRICS_FIELDS:
            raise FormatError(f"unexpected metrics header in {path}")
        rows = []
        for record in reader:
            if len(record) != len(METRICS_FIELDS):
                raise FormatError(f"short metrics row in {path}: {record!r}")
            rows.append(MetricsRow(
                timestamp=float(record[0]), dataset=record[1], image_size=int(record[2]),
                kernel_size=int(record[3]), mult_factor=int(record[4]), lr=float(record[5]),
                seed=int(record[6]), epoch=int(record[7]), train_acc=float(record[8]),
                test_acc=float(record[9]), wall_seconds=float(record[10]),
                selected=bool(int(record[11])),
            ))
        return rows


def collect_metrics(directory: str) -> list[MetricsRow]:
    """Read every metrics CSV under a directory; other CSVs are skipped."""
    rows: list[MetricsRow] = []
    if not os.path.isdir(directory):
        raise FormatError(f"not a directory: {directory}")
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".csv"):
            continue
        path = os.path.join(directory, name)
        try:
            rows.extend(read_metrics_file(path))
        except FormatError:
            log.warning("skipping %s: not a metrics file", path)
    return rows


def _cell_rows(rows: list[MetricsRow]) -> dict[tuple, MetricsRow]:
    """Selected row per table cell; repeated cells keep the newest row."""
    cells: dict[tuple, MetricsRow] = {}
    for row in sorted((r for r in rows if r.selected),
                      key=lambda r: (r.dataset, r.image_size, r.kernel_size,
                                     r.mult_factor, r.timestamp)):
        key = (row.dataset, row.image_size, row.kernel_size, row.mult_factor)
        if key in cells:
            log.warning("duplicate result for %s: keeping the later timestamp", key)
        cells[key] = row
    return cells


def render_tables(rows: list[MetricsRow]) -> tuple[str, str]:
    """Fold metrics rows into grid tables.

    Returns (text, csv_text): a human-readable grid per (dataset, image
    size) with train/test percent cells and X for anything never run, plus a
    flat CSV of the filled cells.
    """
    cells = _cell_rows(rows)
    groups = sorted({(k[0], k[1]) for k in cells})
    out = io.StringIO()
    flat = io.StringIO()
    writer = csv.writer(flat)
    writer.writerow(["dataset", "image_size", "kernel_size", "mult_factor",
                     "lr", "seed", "train_acc", "test_acc"])
    width = 13
    for dataset, size in groups:
        out.write(f"{dataset} {size}x{size} accuracy, train/test %\n")
        header = "kernel".ljust(8) + "".join(f"factor {m}".rjust(width) for m in GRID)
        out.write(header + "\n")
        for c in GRID:
            line = f"{c}x{c}".ljust(8)
            for m in GRID:
                row = cells.get((dataset, size, c, m))
                if row is None:
                    line += "X".rjust(width)
                else:
                    line += f"{100 * row.train_acc:.1f}/{100 * row.test_acc:.1f}".rjust(width)
                    writer.writerow([dataset, size, c, m, repr(row.lr), row.seed,
                                     repr(row.train_acc), repr(row.test_acc)])
            out.write(line + "\n")
        out.write("\n")
    if not groups:
        out.write("no results found\n")
    return out.getvalue(), flat.getvalue()
