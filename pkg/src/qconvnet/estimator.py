"""Scikit-learn style wrappers around the functional core."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .expansion import encode_batch
from .network import Geometry, _softmax, forward_encoded, loss_and_grad_encoded
from .train import OptState, _epoch_order, init_params, sgd_momentum_step
from .unitary import unitarize


def _as_image_batch(X, image_size: int | None = None) -> np.ndarray:
    """Accept (n, size, size) or flat (n, size*size) arrays of [0, 1] pixels."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        side = int(round(np.sqrt(X.shape[1])))
        if side * side != X.shape[1]:
            raise ValueError(f"cannot reshape {X.shape[1]} features into a square image")
        X = X.reshape(X.shape[0], side, side)
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise ValueError(f"X shaped {X.shape}, want (n, size, size) or (n, size*size)")
    if image_size is not None and X.shape[1] != image_size:
        raise ValueError(f"X holds {X.shape[1]}x{X.shape[1]} images, fitted for {image_size}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X holds non-finite pixels")
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    return X


class PairwiseProductEncoder(TransformerMixin, BaseEstimator):
    """Neighbor-product expansion + patch encoding as a transformer.

    transform returns one unit-norm row per image: the flattened
    (n_patches, patch_len) feature tensor.
    """

    def __init__(self, kernel_size: int = 2, mult_factor: int = 2):
        self.kernel_size = kernel_size
        self.mult_factor = mult_factor

    def fit(self, X, y=None):
        X = _as_image_batch(X)
        _, layout = encode_batch(X[:1], self.kernel_size, self.mult_factor)
        self.layout_ = layout
        self.n_features_in_ = X.shape[1] * X.shape[2]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "layout_")
        X = _as_image_batch(X, image_size=self.layout_.image_size)
        feats, _ = encode_batch(X, self.kernel_size, self.mult_factor)
        return feats.reshape(X.shape[0], -1)


class QuantumConvClassifier(ClassifierMixin, BaseEstimator):
    """Unitary-kernel convolutional classifier with a fixed learning rate.

    fit runs plain momentum SGD (no rate-selection protocol; use the
    training module directly for that). Labels may be arbitrary values;
    they are mapped onto classes_ in sorted order.
    """

    def __init__(self, kernel_size: int = 2, mult_factor: int = 2, n_kernels: int = 16,
                 learning_rate: float = 1e-2, epochs: int = 20, batch_size: int = 64,
                 momentum: float = 0.9, init_low: float = -0.5, init_high: float = 0.5,
                 random_state: int = 0):
        self.kernel_size = kernel_size
        self.mult_factor = mult_factor
        self.n_kernels = n_kernels
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.momentum = momentum
        self.init_low = init_low
        self.init_high = init_high
        self.random_state = random_state

    def fit(self, X, y):
        X = _as_image_batch(X)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError(f"y shaped {y.shape}, want ({X.shape[0]},)")
        self.classes_, encoded_y = np.unique(y, return_inverse=True)
        geometry = Geometry(X.shape[1], self.kernel_size, self.mult_factor, self.n_kernels)
        feats, _ = encode_batch(X, self.kernel_size, self.mult_factor)
        params = init_params(geometry, (self.init_low, self.init_high),
                             self.random_state, n_classes=len(self.classes_))
        state = OptState.zeros_like(params)
        n = feats.shape[0]
        for epoch in range(self.epochs):
            order = _epoch_order(self.random_state, epoch, n)
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                _, grads = loss_and_grad_encoded(params, feats[idx], encoded_y[idx])
                sgd_momentum_step(params, grads, state, self.learning_rate, self.momentum)
        self.model_ = params
        self.n_features_in_ = X.shape[1] * X.shape[2]
        return self

    def _logits(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = _as_image_batch(X, image_size=self.model_.geometry.image_size)
        g = self.model_.geometry
        feats, _ = encode_batch(X, g.kernel_size, g.mult_factor)
        _, _, logits = forward_encoded(self.model_, feats)
        return logits

    def predict(self, X) -> np.ndarray:
        winners = np.argmax(self._logits(X), axis=1)
        return self.classes_[winners]

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self._logits(X))
