"""Binary model persistence.

Layout, all little-endian after the magic:

    magic            5 bytes, b"QCNV1"
    tag length       uint8
    dataset tag      UTF-8 bytes
    geometry         7 x uint32: image_size, kernel_size, mult_factor,
                     n_kernels, n_patches, dim, patch_len
    kernels          n_kernels * patch_len float64
    fc weight        10 * n_patches * dim float64
    fc bias          10 float64

The geometry block is redundant on purpose: the loader recomputes the patch
plan from the first four fields and refuses files whose stored counts
disagree, and the total byte length must match the header exactly.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError
from .network import Geometry, ModelParams

MAGIC = b"QCNV1"
N_CLASSES = 10
_GEOM = struct.Struct("<7I")


def save_params(path: str, params: ModelParams, dataset_tag: str) -> None:
    """Write a params file; the format is fixed to 10 readout classes."""
    if params.n_classes != N_CLASSES:
        raise FormatError(f"params file stores {N_CLASSES} classes, model has {params.n_classes}")
    tag = dataset_tag.encode("utf-8")
    if len(tag) > 255:
        raise FormatError("dataset tag longer than 255 bytes")
    g = params.geometry
    layout = g.layout
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<B", len(tag))
    blob += tag
    blob += _GEOM.pack(g.image_size, g.kernel_size, g.mult_factor, g.n_kernels,
                       layout.n_patches, g.dim, layout.patch_len)
    for arr in (params.kernels, params.fc_weight, params.fc_bias):
        blob += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_params(path: str) -> tuple[ModelParams, str]:
    """Read a params file back; returns (params, dataset tag)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 1 or raw[: len(MAGIC)] != MAGIC:
        raise FormatError(f"not a params file (bad magic): {path}")
    pos = len(MAGIC)
    tag_len = raw[pos]
    pos += 1
    if len(raw) < pos + tag_len + _GEOM.size:
        raise FormatError(f"params file truncated in header: {path}")
    tag = raw[pos : pos + tag_len].decode("utf-8")
    pos += tag_len
    image_size, kernel_size, mult_factor, n_kernels, n_patches, dim, patch_len = \
        _GEOM.unpack_from(raw, pos)
    pos += _GEOM.size

    geometry = Geometry(image_size, kernel_size, mult_factor, n_kernels)
    layout = geometry.layout
    if (layout.n_patches, geometry.dim, layout.patch_len) != (n_patches, dim, patch_len):
        raise FormatError(
            f"stored counts (patches={n_patches}, dim={dim}, len={patch_len}) disagree with "
            f"geometry (patches={layout.n_patches}, dim={geometry.dim}, len={layout.patch_len})")

    sizes = (n_kernels * patch_len, N_CLASSES * n_patches * dim, N_CLASSES)
    want = pos + 8 * sum(sizes)
    if len(raw) != want:
        raise FormatError(f"params file holds {len(raw)} bytes, header implies {want}")
    arrays = []
    for count in sizes:
        arrays.append(np.frombuffer(raw, dtype="<f8", count=count, offset=pos).astype(np.float64))
        pos += 8 * count
    kernels = arrays[0].reshape(n_kernels, patch_len)
    fc_weight = arrays[1].reshape(N_CLASSES, n_patches * dim)
    fc_bias = arrays[2]
    return ModelParams(geometry, kernels, fc_weight, fc_bias), tag
