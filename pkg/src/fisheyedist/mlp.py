"""Data-driven distance regression.

A pair of pixel locations is reduced to a rotation-invariant polar feature
(radius of each point about a fixed origin plus the angle between them,
taken mod pi) and fed to a small fully-connected regression network trained
with MSE loss and Adam.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .camera import PixelPoint
from .errors import DivergedTraining

DEFAULT_LAYER_SIZES = [3, 100, 100, 100, 100, 1]
#: radii are divided by this (image half-side) and angles by pi before the net
DEFAULT_RADIUS_SCALE = 1024.0


@dataclass(frozen=True)
class PairFeature:
    """Polar feature for a pair of image points: [r_a, r_b, theta]."""

    r_a: float
    r_b: float
    theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r_a, self.r_b, self.theta], dtype=float)


def extract_feature(x_a: PixelPoint, x_b: PixelPoint, origin: PixelPoint) -> PairFeature:
    """Polar radii about ``origin`` and the angle (theta_a - theta_b) mod pi.

    A point at the origin gets angle 0 by convention.  theta always lies in
    [0, pi).
    """
    da_u, da_v = x_a.u - origin.u, x_a.v - origin.v
    db_u, db_v = x_b.u - origin.u, x_b.v - origin.v
    r_a = math.hypot(da_u, da_v)
    r_b = math.hypot(db_u, db_v)
    th_a = math.atan2(da_v, da_u) if r_a > 0 else 0.0
    th_b = math.atan2(db_v, db_u) if r_b > 0 else 0.0
    theta = (th_a - th_b) % math.pi
    return PairFeature(r_a=r_a, r_b=r_b, theta=theta)


def canonical_pair(
    x_a: PixelPoint, x_b: PixelPoint, origin: PixelPoint
) -> tuple[PixelPoint, PixelPoint]:
    """Order a pair so its feature angle equals the true angular separation.

    The raw feature angle depends on which point is listed first: swapping
    the pair maps theta to pi - theta, so the same geometric configuration
    can produce two different features with different ground-truth distances.
    Ordering the points so the counterclockwise offset from the second to the
    first is at most pi makes theta equal the actual angular separation and
    the feature-to-distance map single-valued (and symmetric in the pair).
    """
    th_a = math.atan2(x_a.v - origin.v, x_a.u - origin.u)
    th_b = math.atan2(x_b.v - origin.v, x_b.u - origin.u)
    if (th_a - th_b) % (2 * math.pi) > math.pi:
        return x_b, x_a
    return x_a, x_b


def pair_features(
    points_a: np.ndarray, points_b: np.ndarray, origin: np.ndarray
) -> np.ndarray:
    """Vectorized canonical features for (n, 2) arrays of pixel pairs."""
    da = np.asarray(points_a, dtype=float) - origin
    db = np.asarray(points_b, dtype=float) - origin
    r_a = np.hypot(da[:, 0], da[:, 1])
    r_b = np.hypot(db[:, 0], db[:, 1])
    th_a = np.where(r_a > 0, np.arctan2(da[:, 1], da[:, 0]), 0.0)
    th_b = np.where(r_b > 0, np.arctan2(db[:, 1], db[:, 0]), 0.0)
    swap = (th_a - th_b) % (2 * math.pi) > math.pi
    r1 = np.where(swap, r_b, r_a)
    r2 = np.where(swap, r_a, r_b)
    diff = np.where(swap, th_b - th_a, th_a - th_b)
    theta = diff % math.pi
    return np.stack([r1, r2, theta], axis=1)


# --- model -----------------------------------------------------------------

MODEL_FORMAT_VERSION = 1


@dataclass
class MlpModel:
    """Fully-connected ReLU regression network with a linear output."""

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    seed: int = 0
    radius_scale: float = DEFAULT_RADIUS_SCALE
    angle_scale: float = math.pi

    def __post_init__(self):
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[k], self.layer_sizes[k + 1])
            if w.shape != expect or b.shape != (expect[1],):
                raise ValueError(f"layer {k}: weight shape {w.shape} does not match {expect}")

    @classmethod
    def init(cls, layer_sizes: Sequence[int], seed: int = 0, **kwargs) -> "MlpModel":
        """Scaled uniform fan-in initialization from the given seed."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / math.sqrt(n_in)
            weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            biases.append(np.zeros(n_out))
        return cls(list(layer_sizes), weights, biases, seed=seed, **kwargs)

    def scale_features(self, features: np.ndarray) -> np.ndarray:
        scaled = np.asarray(features, dtype=float).copy()
        scaled[..., 0] /= self.radius_scale
        scaled[..., 1] /= self.radius_scale
        scaled[..., 2] /= self.angle_scale
        return scaled

    def forward(self, scaled: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Forward pass on pre-scaled inputs; returns output and activations."""
        acts = [scaled]
        a = scaled
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            a = np.maximum(z, 0.0) if k < len(self.weights) - 1 else z
            acts.append(a)
        return a[..., 0], acts

    def predict_batch(self, features: np.ndarray) -> np.ndarray:
        """Predicted distances (inches) for an (n, 3) feature array."""
        out, _ = self.forward(self.scale_features(features))
        return out

    def predict(self, feature: PairFeature) -> float:
        return float(self.predict_batch(feature.as_array()[None, :])[0])

    # --- serialization (versioned JSON, bit-exact round-trip) ---

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "layer_sizes": self.layer_sizes,
            "weights": [[repr(float(x)) for x in w.ravel()] for w in self.weights],
            "biases": [[repr(float(x)) for x in b] for b in self.biases],
            "activation": self.activation,
            "seed": self.seed,
            "radius_scale": self.radius_scale,
            "angle_scale": repr(self.angle_scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {d.get('format_version')}")
        sizes = list(d["layer_sizes"])
        weights = [
            np.array([float(x) for x in flat]).reshape(n_in, n_out)
            for flat, n_in, n_out in zip(d["weights"], sizes[:-1], sizes[1:])
        ]
        biases = [np.array([float(x) for x in b]) for b in d["biases"]]
        return cls(
            sizes,
            weights,
            biases,
            activation=d["activation"],
            seed=int(d["seed"]),
            radius_scale=float(d["radius_scale"]),
            angle_scale=float(d["angle_scale"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


# --- training --------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 64
    epochs: int = 300
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    validation_fraction: float = 0.1
    patience: int = 20
    layer_sizes: tuple[int, ...] = tuple(DEFAULT_LAYER_SIZES)
    radius_scale: float = DEFAULT_RADIUS_SCALE

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0 < self.validation_fraction < 1):
            raise ValueError("validation fraction must be in (0, 1)")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0


def _backward(model: MlpModel, acts: list[np.ndarray], targets: np.ndarray):
    """Gradients of the batch-mean MSE loss w.r.t. all weights and biases."""
    m = len(targets)
    out = acts[-1][..., 0]
    delta = (2.0 / m) * (out - targets)[:, None]
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for k in range(len(model.weights) - 1, -1, -1):
        grads_w[k] = acts[k].T @ delta
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ model.weights[k].T) * (acts[k] > 0)
    return grads_w, grads_b


def _mse(model: MlpModel, scaled: np.ndarray, targets: np.ndarray) -> float:
    out, _ = model.forward(scaled)
    return float(np.mean((out - targets) ** 2))


def train(
    dataset: Sequence[tuple[PairFeature, float]] | tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig = TrainConfig(),
) -> tuple[MlpModel, TrainHistory]:
    """Train a regression MLP on (feature, ground-truth distance) samples.

    The run is fully determined by ``cfg.seed``.  Returns the model with the
    best validation loss and the per-epoch loss history.  Raises
    DivergedTraining if the loss becomes non-finite.
    """
    if isinstance(dataset, tuple) and isinstance(dataset[0], np.ndarray):
        features, targets = dataset
        features = np.asarray(features, dtype=float)
        targets = np.asarray(targets, dtype=float)
    else:
        if len(dataset) == 0:
            raise ValueError("dataset is empty")
        features = np.array([f.as_array() for f, _ in dataset])
        targets = np.array([d for _, d in dataset], dtype=float)
    if len(features) == 0:
        raise ValueError("dataset is empty")
    if not np.all(np.isfinite(features)) or not np.all(np.isfinite(targets)):
        raise ValueError("dataset contains non-finite values")

    rng = np.random.default_rng(cfg.seed)
    model = MlpModel.init(list(cfg.layer_sizes), seed=cfg.seed, radius_scale=cfg.radius_scale)
    scaled = model.scale_features(features)

    n = len(scaled)
    perm = rng.permutation(n)
    n_val = max(1, int(round(cfg.validation_fraction * n))) if n > 1 else 0
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    if len(tr_idx) == 0:
        tr_idx = perm
    x_tr, y_tr = scaled[tr_idx], targets[tr_idx]
    x_val, y_val = scaled[val_idx], targets[val_idx]

    # a model this much worse than predicting zero signals a bad lr / scaling
    divergence_cap = 100.0 * float(np.mean(targets**2)) + 1e3

    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]
    t = 0

    history = TrainHistory()
    best_val = math.inf
    best_state = None
    since_best = 0

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(x_tr))
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, acts = model.forward(x_tr[idx])
            if not np.isfinite(acts[-1]).all():
                raise DivergedTraining(f"non-finite activations at epoch {epoch}")
            grads_w, grads_b = _backward(model, acts, y_tr[idx])
            t += 1
            bc1 = 1.0 - cfg.beta1**t
            bc2 = 1.0 - cfg.beta2**t
            for k in range(len(model.weights)):
                m_w[k] = cfg.beta1 * m_w[k] + (1 - cfg.beta1) * grads_w[k]
                v_w[k] = cfg.beta2 * v_w[k] + (1 - cfg.beta2) * grads_w[k] ** 2
                model.weights[k] -= cfg.learning_rate * (m_w[k] / bc1) / (
                    np.sqrt(v_w[k] / bc2) + cfg.adam_eps
                )
                m_b[k] = cfg.beta1 * m_b[k] + (1 - cfg.beta1) * grads_b[k]
                v_b[k] = cfg.beta2 * v_b[k] + (1 - cfg.beta2) * grads_b[k] ** 2
                model.biases[k] -= cfg.learning_rate * (m_b[k] / bc1) / (
                    np.sqrt(v_b[k] / bc2) + cfg.adam_eps
                )

        tr_loss = _mse(model, x_tr, y_tr)
        val_loss = _mse(model, x_val, y_val) if len(x_val) else tr_loss
        if not (math.isfinite(tr_loss) and math.isfinite(val_loss)):
            raise DivergedTraining(f"non-finite loss at epoch {epoch}")
        if tr_loss > divergence_cap:
            raise DivergedTraining(
                f"training loss {tr_loss:.3e} exploded past {divergence_cap:.3e} "
                f"at epoch {epoch}"
            )
        history.train_loss.append(tr_loss)
        history.val_loss.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            history.best_epoch = epoch
            best_state = (
                [w.copy() for w in model.weights],
                [b.copy() for b in model.biases],
            )
            since_best = 0
        else:
            since_best += 1
            if since_best > cfg.patience:
                break

    if best_state is not None:
        model.weights, model.biases = best_state
    return model, history


def gradient_check(
    model: MlpModel, sample: tuple[np.ndarray, float], step: float = 1e-5
) -> float:
    """Max relative error between backprop and central-difference gradients.

    ``sample`` is a (scaled-feature-vector, target) pair.  Intended for small
    models; evaluates two forward passes per parameter.
    """
    x = np.asarray(sample[0], dtype=float)[None, :]
    y = np.array([sample[1]], dtype=float)
    _, acts = model.forward(x)
    grads_w, grads_b = _backward(model, acts, y)

    max_err = 0.0
    params = list(zip(model.weights, grads_w)) + list(zip(model.biases, grads_b))
    for arr, grad in params:
        flat = arr.ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = _mse(model, x, y)
            flat[i] = orig - step
            lo = _mse(model, x, y)
            flat[i] = orig
            numeric = (hi - lo) / (2 * step)
            denom = max(abs(numeric) + abs(gflat[i]), 1e-8)
            max_err = max(max_err, abs(numeric - gflat[i]) / denom)
    return max_err


# --- training-dataset file -------------------------------------------------

TRAINING_HEADER = ["u_a", "v_a", "u_b", "v_b", "dist_in"]


def load_training_pairs(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a training CSV; returns (points_a, points_b, distances)."""
    from .errors import ParseError

    pa, pb, d = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRAINING_HEADER:
            raise ParseError(f"{path}: expected header {','.join(TRAINING_HEADER)}, got {header}")
        for row in reader:
            ua, va, ub, vb, dist = (float(f) for f in row)
            pa.append((ua, va))
            pb.append((ub, vb))
            d.append(dist)
    return np.array(pa), np.array(pb), np.array(d)


def save_training_pairs(
    path: str | Path, points_a: np.ndarray, points_b: np.ndarray, distances: np.ndarray
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAINING_HEADER)
        for (ua, va), (ub, vb), dist in zip(points_a, points_b, distances):
            writer.writerow([repr(float(ua)), repr(float(va)), repr(float(ub)),
                             repr(float(vb)), repr(float(dist))])
