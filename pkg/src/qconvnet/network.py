"""Model parameters, forward pass, loss and analytic gradients.

A sample is encoded into unit-norm patch features, every patch is rotated by
the shared orthogonal operator W = unitarize(kernels), squared amplitudes are
concatenated into a probability-style feature vector, and a linear readout
maps that vector to class logits trained with softmax cross-entropy.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EncodingError, ShapeError
from .expansion import PatchLayout, encode_batch, encode_sample, plan_patches
from .unitary import unitarize, unitarize_backward, unitarize_with_factors

log = logging.getLogger(__name__)

N_CLASSES = 10


@dataclass(frozen=True)
class Geometry:
    """Static model geometry; everything else derives from these four."""

    image_size: int
    kernel_size: int
    mult_factor: int
    n_kernels: int = 16

    @property
    def layout(self) -> PatchLayout:
        return plan_patches(self.image_size, self.image_size, self.kernel_size, self.mult_factor)

    @property
    def dim(self) -> int:
        """Side of the orthogonal operator: max(n_kernels, patch_len)."""
        return max(self.n_kernels, self.layout.patch_len)

    @property
    def n_readout(self) -> int:
        """Length of the squared-amplitude vector feeding the readout."""
        return self.layout.n_patches * self.dim


@dataclass
class ModelParams:
    """Trainable arrays: free kernel stack plus the linear readout."""

    geometry: Geometry
    kernels: np.ndarray       # (n_kernels, patch_len)
    fc_weight: np.ndarray     # (n_classes, n_patches * dim)
    fc_bias: np.ndarray       # (n_classes,)

    def __post_init__(self):
        g = self.geometry
        want_k = (g.n_kernels, g.layout.patch_len)
        if self.kernels.shape != want_k:
            raise ShapeError(f"kernels shaped {self.kernels.shape}, want {want_k}")
        n_classes = self.fc_weight.shape[0] if self.fc_weight.ndim == 2 else -1
        if self.fc_weight.shape != (n_classes, g.n_readout):
            raise ShapeError(f"fc_weight shaped {self.fc_weight.shape}, want (classes, {g.n_readout})")
        if self.fc_bias.shape != (n_classes,):
            raise ShapeError(f"fc_bias shaped {self.fc_bias.shape}, want ({n_classes},)")

    @property
    def n_classes(self) -> int:
        return self.fc_weight.shape[0]

    def copy(self) -> "ModelParams":
        return ModelParams(self.geometry, self.kernels.copy(),
                           self.fc_weight.copy(), self.fc_bias.copy())


@dataclass
class Grads:
    kernels: np.ndarray
    fc_weight: np.ndarray
    fc_bias: np.ndarray


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass."""

    feature: np.ndarray         # (n_patches, patch_len)
    operator: np.ndarray        # (dim, dim)
    amplitudes: np.ndarray      # (n_patches, dim)
    probabilities: np.ndarray   # (n_patches * dim,)
    logits: np.ndarray          # (n_classes,)


def operator_of(params: ModelParams) -> np.ndarray:
    """The orthogonal operator shared by every patch."""
    return unitarize(params.kernels)


def _check_features(params: ModelParams, feats: np.ndarray) -> np.ndarray:
    feats = np.asarray(feats, dtype=np.float64)
    layout = params.geometry.layout
    want = (layout.n_patches, layout.patch_len)
    if feats.ndim != 3 or feats.shape[1:] != want:
        raise ShapeError(f"features shaped {feats.shape}, want (n,) + {want}")
    return feats


def forward_encoded(params: ModelParams, feats: np.ndarray,
                    operator: np.ndarray | None = None
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch forward on encoded features.

    Returns (amplitudes (n, T, D), probabilities (n, T*D), logits (n, classes)).
    Each patch vector is zero-padded to dim implicitly by using only the
    first patch_len columns of the operator.
    """
    feats = _check_features(params, feats)
    w = operator_of(params) if operator is None else operator
    layout = params.geometry.layout
    amps = np.matmul(feats, w[:, : layout.patch_len].T)
    n = feats.shape[0]
    probs = (amps * amps).reshape(n, -1)
    logits = probs @ params.fc_weight.T + params.fc_bias
    return amps, probs, logits


def forward(params: ModelParams, feature: np.ndarray,
            operator: np.ndarray | None = None) -> ForwardCache:
    """Forward pass of one encoded sample, keeping intermediates."""
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 2:
        raise ShapeError(f"feature has {feature.ndim} dimensions, want 2")
    w = operator_of(params) if operator is None else operator
    amps, probs, logits = forward_encoded(params, feature[None], operator=w)
    return ForwardCache(feature=feature, operator=w, amplitudes=amps[0],
                        probabilities=probs[0], logits=logits[0])


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _cross_entropy(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1))
    return lse - shifted[np.arange(logits.shape[0]), labels]


def loss(params: ModelParams, feature: np.ndarray, label: int,
         operator: np.ndarray | None = None) -> float:
    """Softmax cross-entropy of one encoded sample."""
    cache = forward(params, feature, operator=operator)
    return float(_cross_entropy(cache.logits[None], np.array([label]))[0])


def loss_and_grad_encoded(params: ModelParams, feats: np.ndarray, labels: np.ndarray,
                          operator: np.ndarray | None = None) -> tuple[float, Grads]:
    """Mean loss and analytic gradients over an encoded batch.

    The kernel gradient is accumulated on the operator first (only its first
    patch_len columns receive signal, matching the zero padding of patch
    vectors) and then pulled back through the orthogonalization.
    """
    feats = _check_features(params, feats)
    labels = np.asarray(labels, dtype=np.int64)
    n = feats.shape[0]
    if labels.shape != (n,):
        raise ShapeError(f"labels shaped {labels.shape}, want ({n},)")
    layout = params.geometry.layout
    d = params.geometry.dim
    factors = None
    if operator is None:
        w, factors = unitarize_with_factors(params.kernels)
    else:
        w = operator

    amps = np.matmul(feats, w[:, : layout.patch_len].T)
    probs = (amps * amps).reshape(n, -1)
    logits = probs @ params.fc_weight.T + params.fc_bias
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    z = e.sum(axis=-1, keepdims=True)
    mean_loss = float(np.mean(np.log(z[:, 0]) - shifted[np.arange(n), labels]))

    dlogits = e / z
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    grad_b = dlogits.sum(axis=0)
    grad_a = dlogits.T @ probs
    damps = (dlogits @ params.fc_weight).reshape(n, layout.n_patches, d)
    damps *= 2.0 * amps
    grad_w = np.zeros((d, d), dtype=np.float64)
    grad_w[:, : layout.patch_len] = (
        damps.reshape(-1, d).T @ feats.reshape(-1, layout.patch_len))
    grad_k = unitarize_backward(params.kernels, grad_w, factors=factors)
    return mean_loss, Grads(kernels=grad_k, fc_weight=grad_a, fc_bias=grad_b)


def loss_and_grad(params: ModelParams, images: np.ndarray, labels: np.ndarray
                  ) -> tuple[float, Grads]:
    """Encode raw images then compute loss and gradients.

    Samples that cannot be encoded (zero feature norm) are reported and
    skipped; a batch with no encodable sample raises EncodingError.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    g = params.geometry
    kept_feats, kept_labels = [], []
    for i in range(images.shape[0]):
        try:
            feat, _ = encode_sample(images[i], g.kernel_size, g.mult_factor)
        except EncodingError:
            log.warning("skipping unencodable sample %d (zero feature norm)", i)
            continue
        kept_feats.append(feat)
        kept_labels.append(labels[i])
    if not kept_feats:
        raise EncodingError("every sample in the batch failed encoding")
    return loss_and_grad_encoded(params, np.stack(kept_feats), np.array(kept_labels))


def predict_encoded(params: ModelParams, feats: np.ndarray,
                    operator: np.ndarray | None = None) -> np.ndarray:
    """Class labels for encoded features; ties go to the smaller index."""
    _, _, logits = forward_encoded(params, feats, operator=operator)
    return np.argmax(logits, axis=1)


def predict(params: ModelParams, images: np.ndarray) -> np.ndarray:
    """Class labels for raw images (encoded internally)."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 2:
        images = images[None]
    g = params.geometry
    feats, _ = encode_batch(images, g.kernel_size, g.mult_factor)
    return predict_encoded(params, feats)
