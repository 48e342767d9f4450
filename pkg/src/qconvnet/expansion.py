"""Pairwise-product feature expansion and patch encoding.

An image is blown up by an integer factor m: each source pixel becomes an
m x m block whose (di, dj) entry is the product of the pixel with its
neighbor di rows down and dj columns right (zero when the neighbor falls
outside the image). Factor 1 leaves the image untouched. Expanded images are
then cut into overlapping square patches that are flattened and jointly
normalized into one unit vector per sample.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, EncodingError, GeometryError

SUPPORTED_FACTORS = (1, 2, 4, 8)
STRIDE_BLOCKS = 2
NORM_TOL = 1e-12


def expand(image: np.ndarray, m: int) -> np.ndarray:
    """Expand an (H, W) image into (H*m, W*m) neighbor products.

    out[i*m + di, j*m + dj] = image[i, j] * image[i + di, j + dj] for
    0 <= di, dj < m, with out-of-range neighbors treated as zero.
    """
    if m not in SUPPORTED_FACTORS:
        raise ConfigError(f"expansion factor {m} unsupported, expected one of {SUPPORTED_FACTORS}")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise GeometryError(f"image has {image.ndim} dimensions, want 2")
    if m == 1:
        return image.copy()
    h, w = image.shape
    out = np.zeros((h * m, w * m), dtype=np.float64)
    for di in range(m):
        for dj in range(m):
            shifted = np.zeros_like(image)
            shifted[: h - di, : w - dj] = image[di:, dj:]
            out[di::m, dj::m] = image * shifted
    return out


@dataclass(frozen=True)
class PatchLayout:
    """Patch geometry derived from image size, kernel size and factor."""

    image_size: int
    kernel_size: int
    mult_factor: int
    footprint: int      # patch side in expanded pixels
    stride: int         # patch step in expanded pixels
    per_axis: int       # patch count along one axis
    n_patches: int      # per_axis squared
    patch_len: int      # footprint squared


@lru_cache(maxsize=None)
def plan_patches(height: int, width: int, kernel_size: int, mult_factor: int) -> PatchLayout:
    """Compute the patch grid for an expanded (height*m, width*m) image.

    Patches are footprint = kernel_size*m on a side and advance by
    STRIDE_BLOCKS source pixels, i.e. STRIDE_BLOCKS*m expanded pixels.
    """
    if height != width:
        raise GeometryError(f"image {height}x{width} not square")
    if kernel_size not in SUPPORTED_FACTORS:
        raise ConfigError(f"kernel size {kernel_size} unsupported, expected one of {SUPPORTED_FACTORS}")
    if mult_factor not in SUPPORTED_FACTORS:
        raise ConfigError(f"expansion factor {mult_factor} unsupported, expected one of {SUPPORTED_FACTORS}")
    footprint = kernel_size * mult_factor
    stride = STRIDE_BLOCKS * mult_factor
    span = height * mult_factor
    if footprint > span:
        raise GeometryError(f"footprint {footprint} exceeds expanded image side {span}")
    per_axis = (span - footprint) // stride + 1
    return PatchLayout(
        image_size=height,
        kernel_size=kernel_size,
        mult_factor=mult_factor,
        footprint=footprint,
        stride=stride,
        per_axis=per_axis,
        n_patches=per_axis * per_axis,
        patch_len=footprint * footprint,
    )


def _cut_patches(expanded: np.ndarray, layout: PatchLayout) -> np.ndarray:
    """Slice an (n, span, span) batch into (n, n_patches, patch_len) rows."""
    f, s, t = layout.footprint, layout.stride, layout.per_axis
    windows = np.lib.stride_tricks.sliding_window_view(expanded, (f, f), axis=(1, 2))
    windows = windows[:, ::s, ::s][:, :t, :t]
    n = expanded.shape[0]
    out = np.empty((n, t, t, f, f), dtype=np.float64)
    np.copyto(out, windows)
    return out.reshape(n, layout.n_patches, layout.patch_len)


def encode_batch(images: np.ndarray, kernel_size: int, mult_factor: int) -> tuple[np.ndarray, PatchLayout]:
    """Encode (n, H, W) images into unit feature tensors (n, n_patches, patch_len).

    Each sample is expanded, cut into patches scanned row-major with each
    patch flattened row-major, and the whole per-sample vector is scaled to
    unit L2 norm. A sample whose expansion is identically zero cannot be
    normalized and raises EncodingError naming the sample.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3:
        raise GeometryError(f"image batch has {images.ndim} dimensions, want 3")
    n, h, w = images.shape
    layout = plan_patches(h, w, kernel_size, mult_factor)
    expanded = np.empty((n, h * mult_factor, w * mult_factor), dtype=np.float64)
    for i in range(n):
        expanded[i] = expand(images[i], mult_factor)
    feats = _cut_patches(expanded, layout)
    norms = np.sqrt(np.einsum("ntl,ntl->n", feats, feats))
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise EncodingError(f"sample {int(zero[0])} has zero feature norm, cannot encode")
    feats /= norms[:, None, None]
    return feats, layout


def encode_sample(image: np.ndarray, kernel_size: int, mult_factor: int) -> tuple[np.ndarray, PatchLayout]:
    """Encode one (H, W) image; returns ((n_patches, patch_len), layout)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise GeometryError(f"image has {image.ndim} dimensions, want 2")
    feats, layout = encode_batch(image[None], kernel_size, mult_factor)
    return feats[0], layout
