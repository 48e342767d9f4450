"""IDX dataset files: parsing, bilinear downscaling, split loading.

The IDX format stores a big-endian magic word, big-endian dimension sizes,
then the raw payload. Image files use magic 0x00000803 (unsigned byte,
3 dimensions), label files 0x00000801.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, FormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

N_CLASSES = 10
SUPPORTED_SIZES = (8, 32)

SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
DATASETS = ("mnist", "fashion")
DATA_DIR_ENV = "QCNV_DATA_DIR"


def parse_idx_images(raw: bytes) -> np.ndarray:
    """Decode an IDX image payload into a (count, rows, cols) uint8 array."""
    if len(raw) < 16:
        raise FormatError("image payload shorter than its 16-byte header")
    magic, count, rows, cols = struct.unpack(">llll", raw[:16])
    if magic != IMAGE_MAGIC:
        raise FormatError(f"bad image magic 0x{magic:08x}, want 0x{IMAGE_MAGIC:08x}")
    expected = 16 + count * rows * cols
    if len(raw) != expected:
        raise FormatError(f"image payload holds {len(raw)} bytes, header implies {expected}")
    data = np.frombuffer(raw, dtype=np.uint8, offset=16)
    return data.reshape(count, rows, cols).copy()


def parse_idx_labels(raw: bytes) -> np.ndarray:
    """Decode an IDX label payload into a (count,) uint8 array of class ids."""
    if len(raw) < 8:
        raise FormatError("label payload shorter than its 8-byte header")
    magic, count = struct.unpack(">ll", raw[:8])
    if magic != LABEL_MAGIC:
        raise FormatError(f"bad label magic 0x{magic:08x}, want 0x{LABEL_MAGIC:08x}")
    if len(raw) != 8 + count:
        raise FormatError(f"label payload holds {len(raw)} bytes, header implies {8 + count}")
    labels = np.frombuffer(raw, dtype=np.uint8, offset=8).copy()
    bad = np.nonzero(labels >= N_CLASSES)[0]
    if bad.size:
        raise DataError(f"label {int(labels[bad[0]])} at index {int(bad[0])} outside 0..{N_CLASSES - 1}")
    return labels


def resize_bilinear(grid: np.ndarray, target: int) -> np.ndarray:
    """Downscale one uint8 grid to (target, target) float64 in [0, 1].

    Sample points sit at half-pixel centers: output cell i reads source
    coordinate (i + 0.5) * scale - 0.5, clamped to the source grid, and
    interpolates bilinearly between the four surrounding pixels. Intensities
    are divided by 255 afterwards.
    """
    if target not in SUPPORTED_SIZES:
        raise ConfigError(f"target size {target} unsupported, expected one of {SUPPORTED_SIZES}")
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise DataError(f"grid has {grid.ndim} dimensions, want 2")
    src_h, src_w = grid.shape

    def axis_coords(src: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(target) + 0.5) * (src / target) - 0.5
        pos = np.clip(pos, 0.0, src - 1.0)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, src - 1)
        return lo, hi, pos - lo

    r_lo, r_hi, r_t = axis_coords(src_h)
    c_lo, c_hi, c_t = axis_coords(src_w)
    g = grid.astype(np.float64)
    top = g[np.ix_(r_lo, c_lo)] * (1 - c_t) + g[np.ix_(r_lo, c_hi)] * c_t
    bot = g[np.ix_(r_hi, c_lo)] * (1 - c_t) + g[np.ix_(r_hi, c_hi)] * c_t
    out = top * (1 - r_t[:, None]) + bot * r_t[:, None]
    return out / 255.0


@dataclass
class LabeledSet:
    """Preprocessed split: images (n, size, size) float64 in [0,1], labels (n,)."""

    images: np.ndarray
    labels: np.ndarray
    split_tag: str

    def __post_init__(self):
        if self.images.ndim != 3 or self.images.shape[1] != self.images.shape[2]:
            raise DataError(f"images shaped {self.images.shape}, want (n, size, size)")
        if self.labels.shape != (self.images.shape[0],):
            raise DataError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )

    def __len__(self) -> int:
        return self.images.shape[0]


def load_labeled_set(
    images_path: str, labels_path: str, image_size: int, split_tag: str = "", limit: int | None = None
) -> LabeledSet:
    """Parse one images/labels file pair and downscale to image_size."""
    for path in (images_path, labels_path):
        if not os.path.exists(path):
            raise DataError(f"dataset file missing: {path}")
    with open(images_path, "rb") as fh:
        grids = parse_idx_images(fh.read())
    with open(labels_path, "rb") as fh:
        labels = parse_idx_labels(fh.read())
    if grids.shape[0] != labels.shape[0]:
        raise DataError(f"{grids.shape[0]} images but {labels.shape[0]} labels")
    if limit is not None:
        grids = grids[:limit]
        labels = labels[:limit]
    images = np.empty((grids.shape[0], image_size, image_size), dtype=np.float64)
    for i in range(grids.shape[0]):
        images[i] = resize_bilinear(grids[i], image_size)
    return LabeledSet(images=images, labels=labels.astype(np.int64), split_tag=split_tag)


def resolve_data_dir(explicit: str | None = None) -> str:
    """Pick the dataset root: explicit value, then QCNV_DATA_DIR, then ./data."""
    if explicit:
        return explicit
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return env
    return os.path.join(os.getcwd(), "data")


def load_split(dataset: str, split: str, image_size: int, data_dir: str | None = None,
               limit: int | None = None) -> LabeledSet:
    """Load one split of a named dataset from data_dir/<dataset>/<idx files>."""
    if dataset not in DATASETS:
        raise ConfigError(f"unknown dataset {dataset!r}, expected one of {DATASETS}")
    if split not in SPLIT_FILES:
        raise ConfigError(f"unknown split {split!r}, expected one of {tuple(SPLIT_FILES)}")
    root = os.path.join(resolve_data_dir(data_dir), dataset)
    images_name, labels_name = SPLIT_FILES[split]
    return load_labeled_set(
        os.path.join(root, images_name),
        os.path.join(root, labels_name),
        image_size,
        split_tag=f"{dataset}-{split}",
        limit=limit,
    )
