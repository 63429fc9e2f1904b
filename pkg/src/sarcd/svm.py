"""Linear binary classifier for the ambiguous pseudo-label pixels.

Trains an L2-regularized hinge-loss model by deterministic seeded
stochastic subgradient descent; features are standardized with training
statistics that the model carries along for prediction.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTrainingError, FormatError, ParameterError

SVM_MAGIC = b"SARS"

# Channels with spread at or below this are flagged constant and ignored.
_CONST_STD = 1e-12


@dataclass
class SvmModel:
    weights: np.ndarray  # (dim,)
    bias: float
    feature_mean: np.ndarray  # (dim,)
    feature_std: np.ndarray  # (dim,), exactly 0 marks an ignored constant channel
    objectives: list  # full objective after each epoch

    @property
    def dim(self) -> int:
        return self.weights.size

    def standardize(self, x: np.ndarray) -> np.ndarray:
        std = self.feature_std
        scale = np.divide(1.0, std, out=np.zeros_like(std), where=std > 0.0)
        return (x - self.feature_mean) * scale


def _objective(xs, y, w, b, c):
    margins = 1.0 - y * (xs @ w + b)
    return 0.5 * float(w @ w) + c * float(np.maximum(margins, 0.0).sum())


def train_svm(features, labels, c: float = 1.0, epochs: int = 20, seed: int = 0) -> SvmModel:
    """Fit 0.5*||w||^2 + c * sum(hinge) by seeded SGD with step 1/(c*t).

    Labels must be +1 (changed) / -1 (unchanged) with both classes present.
    Features are standardized per dimension first; constant dimensions are
    flagged and ignored. The recorded full objective at the final epoch is
    at most its value after the first epoch.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ParameterError(f"features {x.shape} do not match {y.size} labels")
    if x.shape[0] < 2:
        raise ParameterError("need at least two training samples")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ParameterError("labels must be +1 or -1")
    if (y > 0).all() or (y < 0).all():
        raise DegenerateTrainingError("training labels contain a single class")
    if c <= 0 or epochs < 1:
        raise ParameterError("c must be positive and epochs >= 1")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > _CONST_STD, std, 0.0)
    scale = np.divide(1.0, std, out=np.zeros_like(std), where=std > 0.0)
    xs = (x - mean) * scale

    n, dim = xs.shape
    w = np.zeros(dim)
    b = 0.0
    rng = np.random.default_rng(seed)
    t = 0
    objectives = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (c * t)
            # subgradient step on (1/(2n))||w||^2 + c*hinge_i; eta*c = 1/t
            violated = y[i] * (xs[i] @ w + b) < 1.0
            w *= 1.0 - eta / n
            if violated:
                w += (1.0 / t) * y[i] * xs[i]
                b += (1.0 / t) * y[i]
        objectives.append(_objective(xs, y, w, b, c))
    return SvmModel(weights=w, bias=b, feature_mean=mean, feature_std=std, objectives=objectives)


def decision_values(model: SvmModel, features) -> np.ndarray:
    """Affine decision values w . standardized(x) + b for a feature matrix."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise ParameterError(f"feature dimension {x.shape[-1]} does not match model {model.dim}")
    d = model.standardize(x) @ model.weights + model.bias
    return d[0] if single else d


def predict(model: SvmModel, feature):
    """Classify one feature vector: returns (label, decision value).

    The label is +1 (changed) for strictly positive decision values and -1
    (unchanged) otherwise; an exact zero breaks toward unchanged.
    """
    d = float(decision_values(model, feature))
    return (1 if d > 0.0 else -1), d


def predict_batch(model: SvmModel, features) -> np.ndarray:
    """Vector of +1/-1 labels for a feature matrix (zero decisions -> -1)."""
    d = decision_values(model, features)
    return np.where(d > 0.0, 1, -1).astype(np.int8)


def save_svm(model: SvmModel, path) -> None:
    """Serialize: magic SARS, u32 dim, then float32 LE bias, weights, mean, std."""
    header = SVM_MAGIC + struct.pack("<I", model.dim)
    payload = np.concatenate(
        [[model.bias], model.weights, model.feature_mean, model.feature_std]
    ).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def load_svm(path) -> SvmModel:
    """Read a model written by save_svm."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8:
        raise FormatError(f"file too short for a SARS header: {len(data)} bytes")
    if data[:4] != SVM_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {SVM_MAGIC!r}")
    (dim,) = struct.unpack("<I", data[4:8])
    expected = 8 + 4 * (1 + 3 * dim)
    if dim < 1 or len(data) != expected:
        raise FormatError(f"payload size mismatch: expected {expected} bytes, got {len(data)}")
    values = np.frombuffer(data[8:], dtype="<f4").astype(np.float64)
    return SvmModel(
        weights=values[1 : 1 + dim],
        bias=float(values[0]),
        feature_mean=values[1 + dim : 1 + 2 * dim],
        feature_std=values[1 + 2 * dim :],
        objectives=[],
    )
