import os
import struct

import numpy as np
import pytest

from qconvnet.errors import ConfigError, DataError, FormatError
from qconvnet.idx import (
    IMAGE_MAGIC,
    LABEL_MAGIC,
    load_split,
    parse_idx_images,
    parse_idx_labels,
    resize_bilinear,
)


def pack_images(grids: np.ndarray) -> bytes:
    count, rows, cols = grids.shape
    return struct.pack(">llll", IMAGE_MAGIC, count, rows, cols) + grids.astype(np.uint8).tobytes()


def pack_labels(labels: np.ndarray) -> bytes:
    return struct.pack(">ll", LABEL_MAGIC, len(labels)) + bytes(int(v) for v in labels)


def resize_oracle(grid: np.ndarray, target: int) -> np.ndarray:
    """Nested-loop bilinear resize with half-pixel centers, /255."""
    src = grid.shape[0]
    out = np.zeros((target, target))
    for r in range(target):
        for c in range(target):
            y = min(max((r + 0.5) * src / target - 0.5, 0.0), src - 1.0)
            x = min(max((c + 0.5) * src / target - 0.5, 0.0), src - 1.0)
            y0, x0 = int(np.floor(y)), int(np.floor(x))
            y1, x1 = min(y0 + 1, src - 1), min(x0 + 1, src - 1)
            ty, tx = y - y0, x - x0
            v = (grid[y0, x0] * (1 - ty) * (1 - tx) + grid[y0, x1] * (1 - ty) * tx
                 + grid[y1, x0] * ty * (1 - tx) + grid[y1, x1] * ty * tx)
            out[r, c] = v / 255.0
    return out


class TestParseImages:
    def test_round_trip_bit_exact(self, rng):
        grids = rng.integers(0, 256, size=(5, 28, 28), dtype=np.uint8)
        parsed = parse_idx_images(pack_images(grids))
        assert parsed.dtype == np.uint8
        np.testing.assert_array_equal(parsed, grids)

    def test_header_arithmetic(self):
        raw = struct.pack(">llll", IMAGE_MAGIC, 2, 28, 28) + bytes(1568)
        assert parse_idx_images(raw).shape == (2, 28, 28)

    def test_label_magic_rejected(self):
        raw = struct.pack(">llll", LABEL_MAGIC, 2, 28, 28) + bytes(1568)
        with pytest.raises(FormatError):
            parse_idx_images(raw)

    def test_truncated_payload(self, rng):
        raw = pack_images(rng.integers(0, 256, size=(3, 28, 28), dtype=np.uint8))
        with pytest.raises(FormatError):
            parse_idx_images(raw[:-10])

    def test_trailing_garbage(self, rng):
        raw = pack_images(rng.integers(0, 256, size=(3, 28, 28), dtype=np.uint8))
        with pytest.raises(FormatError):
            parse_idx_images(raw + b"x")


class TestParseLabels:
    def test_direct_decode(self):
        assert list(parse_idx_labels(pack_labels(np.array([7, 0, 9])))) == [7, 0, 9]

    def test_out_of_range_label(self):
        with pytest.raises(DataError):
            parse_idx_labels(pack_labels(np.array([3, 12, 1])))

    def test_truncation(self):
        raw = pack_labels(np.array([1, 2, 3]))
        with pytest.raises(FormatError):
            parse_idx_labels(raw[:-1])

    def test_wrong_magic(self):
        raw = struct.pack(">ll", IMAGE_MAGIC, 1) + b"\x01"
        with pytest.raises(FormatError):
            parse_idx_labels(raw)


class TestResize:
    def test_constant_image_is_exact(self):
        for target in (8, 32):
            out = resize_bilinear(np.full((28, 28), 255, dtype=np.uint8), target)
            np.testing.assert_array_equal(out, np.ones((target, target)))

    def test_zero_image(self):
        out = resize_bilinear(np.zeros((28, 28), dtype=np.uint8), 8)
        np.testing.assert_array_equal(out, np.zeros((8, 8)))

    def test_matches_nested_loop_oracle(self, rng):
        for target in (8, 32):
            for _ in range(10):
                grid = rng.integers(0, 256, size=(28, 28), dtype=np.uint8)
                np.testing.assert_allclose(
                    resize_bilinear(grid, target), resize_oracle(grid, target),
                    rtol=0, atol=1e-12)

    def test_ramp_preserved_within_one_level(self):
        ramp = np.tile(np.linspace(0, 255, 28, dtype=np.uint8), (28, 1))
        out = resize_bilinear(ramp, 8)
        expected = resize_oracle(ramp, 8)
        np.testing.assert_allclose(out, expected, atol=1 / 255)

    def test_bounded_by_input_range(self, rng):
        grid = rng.integers(40, 200, size=(28, 28), dtype=np.uint8)
        out = resize_bilinear(grid, 8)
        assert out.min() >= grid.min() / 255.0 - 1e-12
        assert out.max() <= grid.max() / 255.0 + 1e-12

    def test_unsupported_target(self):
        with pytest.raises(ConfigError):
            resize_bilinear(np.zeros((28, 28), dtype=np.uint8), 16)


class TestRealFiles:
    def test_mnist_split_sizes(self, mnist_dir):
        train = load_split("mnist", "train", 8, mnist_dir, limit=None)
        test = load_split("mnist", "test", 8, mnist_dir, limit=None)
        assert len(train) == 60000
        assert len(test) == 10000
        assert train.images.shape == (60000, 8, 8)
        assert train.images.min() >= 0.0 and train.images.max() <= 1.0

    def test_fashion_split_sizes(self, fashion_dir):
        train = load_split("fashion", "train", 8, fashion_dir, limit=100)
        assert train.images.shape == (100, 8, 8)

    def test_missing_files(self, tmp_path):
        with pytest.raises(DataError):
            load_split("mnist", "train", 8, str(tmp_path))
