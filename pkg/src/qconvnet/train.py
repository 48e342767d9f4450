"""Mini-batch SGD with momentum and the learning-rate selection protocol.

The protocol trains every learning rate in the grid with every seed, scores
each rate by its worst final training accuracy across seeds, and keeps the
rate whose worst case is best (ties to the smaller rate). The run reported
for the chosen rate is its worst-training-accuracy run.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig
from .errors import TrainingError
from .expansion import PatchLayout, encode_batch
from .idx import LabeledSet
from .network import Geometry, Grads, ModelParams, loss_and_grad_encoded, predict_encoded

log = logging.getLogger(__name__)


def init_params(geometry: Geometry, init_range: tuple[float, float] = (-0.5, 0.5),
                seed: int = 0, n_classes: int = 10) -> ModelParams:
    """Draw all parameters i.i.d. uniform on init_range.

    Draw order is fixed (kernels, readout weight, readout bias) so a seed
    pins every array. A degenerate range (lo == hi) yields constant
    parameters; an inverted one is an error.
    """
    lo, hi = init_range
    if lo > hi:
        raise TrainingError(f"inverted init range ({lo}, {hi})")
    rng = np.random.default_rng(seed)
    layout = geometry.layout
    kernels = rng.uniform(lo, hi, (geometry.n_kernels, layout.patch_len))
    fc_weight = rng.uniform(lo, hi, (n_classes, geometry.n_readout))
    fc_bias = rng.uniform(lo, hi, n_classes)
    return ModelParams(geometry, kernels, fc_weight, fc_bias)


@dataclass
class OptState:
    """Momentum buffers, one per parameter array."""

    vel_kernels: np.ndarray
    vel_fc_weight: np.ndarray
    vel_fc_bias: np.ndarray

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "OptState":
        return cls(np.zeros_like(params.kernels),
                   np.zeros_like(params.fc_weight),
                   np.zeros_like(params.fc_bias))


def sgd_momentum_step(params: ModelParams, grads: Grads, state: OptState,
                      lr: float, momentum: float = 0.9) -> None:
    """In-place heavy-ball update: v <- momentum*v + g; theta <- theta - lr*v."""
    if not (np.isfinite(grads.kernels).all() and np.isfinite(grads.fc_weight).all()
            and np.isfinite(grads.fc_bias).all()):
        for name, g in (("kernels", grads.kernels), ("fc_weight", grads.fc_weight),
                        ("fc_bias", grads.fc_bias)):
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient in {name}")
    state.vel_kernels *= momentum
    state.vel_kernels += grads.kernels
    state.vel_fc_weight *= momentum
    state.vel_fc_weight += grads.fc_weight
    state.vel_fc_bias *= momentum
    state.vel_fc_bias += grads.fc_bias
    params.kernels -= lr * state.vel_kernels
    params.fc_weight -= lr * state.vel_fc_weight
    params.fc_bias -= lr * state.vel_fc_bias


@dataclass
class EncodedData:
    """Both splits encoded once, shared by every run of a protocol."""

    geometry: Geometry
    train_feats: np.ndarray
    train_labels: np.ndarray
    test_feats: np.ndarray
    test_labels: np.ndarray

    @classmethod
    def from_sets(cls, geometry: Geometry, train: LabeledSet, test: LabeledSet) -> "EncodedData":
        train_feats, _ = encode_batch(train.images, geometry.kernel_size, geometry.mult_factor)
        test_feats, _ = encode_batch(test.images, geometry.kernel_size, geometry.mult_factor)
        return cls(geometry, train_feats, train.labels, test_feats, test.labels)


@dataclass
class RunRecord:
    """Outcome of one (lr, seed) training run."""

    lr: float
    seed: int
    train_accuracy: float
    test_accuracy: float
    epoch_losses: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0
    params: ModelParams | None = None


def evaluate_encoded(params: ModelParams, feats: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of encoded samples whose predicted label matches."""
    if feats.shape[0] == 0:
        raise TrainingError("cannot evaluate on an empty set")
    pred = predict_encoded(params, feats)
    return float(np.mean(pred == labels))


def evaluate(params: ModelParams, labeled: LabeledSet) -> float:
    """Fraction of raw samples whose predicted label matches."""
    g = params.geometry
    feats, _ = encode_batch(labeled.images, g.kernel_size, g.mult_factor)
    return evaluate_encoded(params, feats, labeled.labels)


def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    """Deterministic shuffle; depends only on (seed, epoch index, n)."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def train_one(config: TrainConfig, lr: float, seed: int, data: EncodedData) -> RunRecord:
    """Train a fresh model for config.epochs epochs with one (lr, seed)."""
    started = time.time()
    params = init_params(data.geometry, (config.init_lo, config.init_hi), seed)
    state = OptState.zeros_like(params)
    n = data.train_feats.shape[0]
    batch = config.batch_size
    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        order = _epoch_order(seed, epoch, n)
        total = 0.0
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            step_loss, grads = loss_and_grad_encoded(
                params, data.train_feats[idx], data.train_labels[idx])
            sgd_momentum_step(params, grads, state, lr, config.momentum)
            total += step_loss * idx.shape[0]
        epoch_losses.append(total / n)
    record = RunRecord(
        lr=lr,
        seed=seed,
        train_accuracy=evaluate_encoded(params, data.train_feats, data.train_labels),
        test_accuracy=evaluate_encoded(params, data.test_feats, data.test_labels),
        epoch_losses=epoch_losses,
        wall_seconds=time.time() - started,
        params=params,
    )
    log.info("run lr=%g seed=%d train=%.4f test=%.4f (%.1fs)",
             lr, seed, record.train_accuracy, record.test_accuracy, record.wall_seconds)
    return record


def run_protocol(config: TrainConfig, data: EncodedData) -> list[RunRecord]:
    """All (lr, seed) runs of the selection protocol, in grid order."""
    return [train_one(config, lr, seed, data)
            for lr in config.lrs for seed in config.seeds]


def select_run(records: list[RunRecord], lrs: tuple[float, ...],
               seeds: tuple[int, ...]) -> tuple[float, RunRecord]:
    """Pick the winning rate and its reported run from finished records.

    Order-insensitive: records are grouped by their (lr, seed) identity, so
    any completion order yields the same choice. Each rate is scored by the
    minimum final training accuracy across its seeds; the best rate is the
    one with the highest minimum, ties resolved toward the smaller rate. The
    reported run is the scored (worst) run of the winning rate, ties toward
    the seed listed earlier.
    """
    by_key = {(r.lr, r.seed): r for r in records}
    missing = [(lr, seed) for lr in lrs for seed in seeds if (lr, seed) not in by_key]
    if missing:
        raise TrainingError(f"protocol incomplete, missing runs: {missing}")
    best_lr = None
    best_score = -np.inf
    for lr in sorted(lrs):
        score = min(by_key[(lr, seed)].train_accuracy for seed in seeds)
        if score > best_score:
            best_score = score
            best_lr = lr
    chosen = min((by_key[(best_lr, seed)] for seed in seeds),
                 key=lambda r: (r.train_accuracy, seeds.index(r.seed)))
    return best_lr, chosen


def select_lr(config: TrainConfig, data: EncodedData
              ) -> tuple[float, RunRecord, list[RunRecord]]:
    """Run the full protocol and apply the selection rule."""
    records = run_protocol(config, data)
    lr, chosen = select_run(records, tuple(config.lrs), tuple(config.seeds))
    return lr, chosen, records
