"""Shared fixtures: the default camera and the two trained regression models.

Training is deterministic (fixed seeds throughout), so every fixture here
produces bit-identical results across runs.  The two model fixtures are
session-scoped because each takes tens of seconds to train.
"""

import time

import numpy as np
import pytest

from fisheyedist.camera import CameraParams
from fisheyedist.mlp import TrainConfig, pair_features, train
from fisheyedist.synth import DEFAULT_DEPOF_CAMERA, GridSpec, generate_grid

TRAIN_GRID = GridSpec(rows=20, cols=60, spacing=12.5, plane_height=32.5,
                      origin=(-368.75, 12.5))
FEATURE_ORIGIN = np.array([1024.0, 1024.0])


@pytest.fixture(scope="session")
def camera() -> CameraParams:
    return DEFAULT_DEPOF_CAMERA


@pytest.fixture(scope="session")
def grid_pairs():
    """9,000 sampled grid pairs: first 8,000 train, last 1,000 held out."""
    pa, pb, gt = generate_grid(TRAIN_GRID, DEFAULT_DEPOF_CAMERA,
                               pair_budget=9000, seed=7)
    return pa, pb, gt


@pytest.fixture(scope="session")
def grid_model(grid_pairs):
    """MLP trained on clean grid projections; returns (model, heldout_mae, seconds)."""
    pa, pb, gt = grid_pairs
    feats = pair_features(pa[:8000], pb[:8000], FEATURE_ORIGIN)
    start = time.perf_counter()
    model, _ = train((feats, gt[:8000]), TrainConfig(epochs=200, seed=0, patience=30))
    elapsed = time.perf_counter() - start
    held = pair_features(pa[8000:], pb[8000:], FEATURE_ORIGIN)
    heldout_mae = float(np.mean(np.abs(model.predict_batch(held) - gt[8000:])))
    return model, heldout_mae, elapsed


@pytest.fixture(scope="session")
def classroom_model(grid_pairs):
    """MLP trained on noisy, pixel-quantized grid annotations.

    Centers get sigma = 1 px Gaussian noise and integer rounding before
    feature extraction, mimicking hand-labeled boxes.
    """
    pa, pb, gt = grid_pairs
    noise_rng = np.random.default_rng(11)
    pa_n = np.round(pa[:8000] + noise_rng.normal(0.0, 1.0, pa[:8000].shape))
    pb_n = np.round(pb[:8000] + noise_rng.normal(0.0, 1.0, pb[:8000].shape))
    feats = pair_features(pa_n, pb_n, FEATURE_ORIGIN)
    model, _ = train((feats, gt[:8000]), TrainConfig(epochs=150, seed=0, patience=30))
    return model
