"""State-vector simulator used to cross-check the dense forward pass.

Patch features live in the low qubits: the amplitude of basis index
t * 2**k + r is component r of patch t, where k is the qubit count of one
patch register. Applying an operator on those low qubits is the same linear
map as the block-diagonal matrix I (x) gate, which is how the dense and
simulated paths are compared.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EncodingError, ShapeError, VerificationError
from .expansion import encode_sample
from .network import ModelParams, forward_encoded, operator_of
from .unitary import orthogonality_defect

ORTHO_TOL = 1e-10
NORM_TOL = 1e-9


def qubits_for(count: int) -> int:
    """Fewest qubits addressing `count` states: ceil(log2), at least 0."""
    if count < 1:
        raise ShapeError(f"need a positive state count, got {count}")
    return int(count - 1).bit_length()


def amplitude_encode(feature: np.ndarray, dim: int) -> np.ndarray:
    """Lay a unit-norm (n_patches, patch_len) feature into a state vector.

    Patch t occupies the slots [t * 2**k, t * 2**k + patch_len) where
    2**k >= dim; every other amplitude is exactly zero.
    """
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 2:
        raise ShapeError(f"feature has {feature.ndim} dimensions, want 2")
    t, l = feature.shape
    if dim < l:
        raise ShapeError(f"dim {dim} smaller than patch length {l}")
    norm = float(np.sqrt(np.sum(feature * feature)))
    if abs(norm - 1.0) > NORM_TOL:
        raise EncodingError(f"feature norm {norm} is not 1 within {NORM_TOL}")
    k = qubits_for(dim)
    j = qubits_for(t)
    state = np.zeros(2 ** (j + k), dtype=np.float64)
    block = 2 ** k
    for patch in range(t):
        state[patch * block : patch * block + l] = feature[patch]
    return state


def embed_gate(operator: np.ndarray) -> np.ndarray:
    """Pad an orthogonal (D, D) operator to the next power of two with identity.

    Refuses non-orthogonal input: the simulator only applies norm-preserving
    gates, so a defective operator means the caller's unitarization broke.
    """
    operator = np.asarray(operator, dtype=np.float64)
    if operator.ndim != 2 or operator.shape[0] != operator.shape[1]:
        raise ShapeError(f"operator shaped {operator.shape}, want square")
    defect = orthogonality_defect(operator)
    if defect > ORTHO_TOL:
        raise VerificationError(f"operator is not orthogonal: defect {defect:.3e} > {ORTHO_TOL}")
    d = operator.shape[0]
    side = 2 ** qubits_for(d)
    gate = np.eye(side, dtype=np.float64)
    gate[:d, :d] = operator
    return gate


def apply_gate_low_qubits(state: np.ndarray, gate: np.ndarray) -> np.ndarray:
    """Apply a gate to the lowest qubits of a state vector.

    Equivalent to multiplying by I (x) gate: the state is viewed as rows of
    gate-sized blocks and every block is rotated by the gate.
    """
    state = np.asarray(state, dtype=np.float64)
    gate = np.asarray(gate, dtype=np.float64)
    if gate.ndim != 2 or gate.shape[0] != gate.shape[1]:
        raise ShapeError(f"gate shaped {gate.shape}, want square")
    side = gate.shape[0]
    if state.ndim != 1 or state.shape[0] % side != 0:
        raise ShapeError(f"state of length {state.shape} not divisible into {side}-blocks")
    return (state.reshape(-1, side) @ gate.T).reshape(-1)


def measure_probabilities(state: np.ndarray) -> np.ndarray:
    """Probability of each basis outcome: squared amplitudes."""
    state = np.asarray(state, dtype=np.float64)
    return state * state


def layout_indices(n_patches: int, dim: int) -> np.ndarray:
    """Flat basis indices of the (patch, component) grid inside the register."""
    block = 2 ** qubits_for(dim)
    return (np.arange(n_patches)[:, None] * block + np.arange(dim)[None, :]).reshape(-1)


@dataclass
class SampleCheck:
    index: int
    max_abs_diff: float
    label_matrix: int
    label_sim: int


@dataclass
class VerificationReport:
    """Outcome of the dense-vs-simulator comparison on a sample set."""

    n_samples: int
    tol: float
    max_abs_diff: float
    matrix_accuracy: float
    sim_accuracy: float
    failures: list[int] = field(default_factory=list)
    samples: list[SampleCheck] = field(default_factory=list)

    @property
    def labels_agree(self) -> bool:
        return all(s.label_matrix == s.label_sim for s in self.samples)

    @property
    def passed(self) -> bool:
        return not self.failures and self.labels_agree


def verify_model(params: ModelParams, images: np.ndarray, labels: np.ndarray,
                 tol: float = 1e-10, operator: np.ndarray | None = None) -> VerificationReport:
    """Compare the dense forward pass against the simulator sample by sample.

    For each image both paths produce outcome probabilities; their maximum
    absolute difference (including the register slots the dense layout never
    touches, which the simulator must leave at zero) is compared to tol.
    Samples above tol are recorded as failures rather than raised; a
    non-orthogonal operator raises VerificationError up front.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.ndim == 2:
        images = images[None]
    g = params.geometry
    w = operator_of(params) if operator is None else np.asarray(operator, dtype=np.float64)
    gate = embed_gate(w)
    d = g.dim
    t = g.layout.n_patches
    idx = layout_indices(t, d)
    register = 2 ** (qubits_for(t) + qubits_for(d))

    samples: list[SampleCheck] = []
    failures: list[int] = []
    hits_matrix = 0
    hits_sim = 0
    worst = 0.0
    for i in range(images.shape[0]):
        feature, _ = encode_sample(images[i], g.kernel_size, g.mult_factor)

        _, probs_mat, logits_mat = forward_encoded(params, feature[None], operator=w)
        label_mat = int(np.argmax(logits_mat[0]))

        state = amplitude_encode(feature, d)
        probs_sim = measure_probabilities(apply_gate_low_qubits(state, gate))
        expected = np.zeros(register, dtype=np.float64)
        expected[idx] = probs_mat[0]
        diff = float(np.max(np.abs(probs_sim - expected)))

        logits_sim = params.fc_weight @ probs_sim[idx] + params.fc_bias
        label_sim = int(np.argmax(logits_sim))

        samples.append(SampleCheck(i, diff, label_mat, label_sim))
        worst = max(worst, diff)
        if diff > tol:
            failures.append(i)
        hits_matrix += int(label_mat == labels[i])
        hits_sim += int(label_sim == labels[i])
    n = images.shape[0]
    return VerificationReport(
        n_samples=n,
        tol=tol,
        max_abs_diff=worst,
        matrix_accuracy=hits_matrix / n,
        sim_accuracy=hits_sim / n,
        failures=failures,
        samples=samples,
    )
