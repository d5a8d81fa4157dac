"""Shared fixtures: synthetic sequence sets and trained surrogate models.

Heavy fixtures are session-scoped and lazy; the trained models here are
reused by both the unit tests and the acceptance suite so each modality
trains exactly once per session.
"""

from __future__ import annotations

import numpy as np
import pytest

from rgbe_advbench.eventcam import SceneConfig, synthesize_sequence
from rgbe_advbench.eventcam.io import Sequence
from rgbe_advbench.tracker import TrackerConfig, TrainConfig, build_dataset, init_params, train

TRAIN_SEED0 = 100
HELDOUT_SEED0 = 900
N_TRAIN = 32
N_HELDOUT = 16
N_FRAMES = 32


def make_sequences(n, seed0, n_frames=N_FRAMES, n_objects=2):
    out = []
    for i in range(n):
        scene = SceneConfig(n_frames=n_frames, n_random_objects=n_objects)
        frames, events, gt = synthesize_sequence(scene, seed=seed0 + i)
        out.append(Sequence(f"seq{seed0 + i}", frames, events, gt))
    return out


def train_model(modality, sequences, steps, seed=0):
    config = TrackerConfig(modality=modality)
    tconfig = TrainConfig(steps=steps, pairs_per_sequence=12, seed=seed,
                          scale_jitter=0.2)
    params = init_params(config, seed=seed)
    dataset = build_dataset(sequences, config, tconfig)
    params, losses = train(params, dataset, tconfig)
    return params, losses


@pytest.fixture(scope="session")
def train_sequences():
    return make_sequences(N_TRAIN, TRAIN_SEED0)


@pytest.fixture(scope="session")
def heldout_sequences():
    return make_sequences(N_HELDOUT, HELDOUT_SEED0)


@pytest.fixture(scope="session")
def mini_sequences():
    return make_sequences(4, 500, n_frames=16)


@pytest.fixture(scope="session")
def rgb_model(train_sequences):
    params, _ = train_model("rgb", train_sequences, steps=2400)
    return params


@pytest.fixture(scope="session")
def voxel_model(train_sequences):
    params, _ = train_model("voxel", train_sequences, steps=2000)
    return params


@pytest.fixture(scope="session")
def fusion_model(train_sequences):
    params, _ = train_model("rgb+voxel", train_sequences, steps=2000)
    return params


@pytest.fixture(scope="session")
def frame_fusion_model(train_sequences):
    params, _ = train_model("rgb+frame", train_sequences, steps=2000)
    return params


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
