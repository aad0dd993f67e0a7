import numpy as np
import pytest
import torch

from dcrsr.config import ExperimentConfig
from dcrsr.data import load_manifest
from dcrsr.synthetic import make_corpus


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Eight 32x32 synthetic HR images, shared across the suite."""
    root = tmp_path_factory.mktemp("corpus")
    make_corpus(root, count=8, size=32, seed=11)
    return root


@pytest.fixture(scope="session")
def tiny_manifest(tiny_corpus):
    return load_manifest(tiny_corpus, scale=4)


def tiny_config(root, n_c=4, n_g=4, iters=20, batch=2, patch=16, seed=0):
    cfg = ExperimentConfig()
    cfg.data.root = str(root)
    cfg.model.n_c = n_c
    cfg.model.n_g = n_g
    cfg.model.disc_width = 4
    cfg.train.total_iters = iters
    cfg.train.batch_size = batch
    cfg.train.hr_patch_schedule = ((0, patch),)
    cfg.train.checkpoint_every = 0
    cfg.train.log_every = 5
    cfg.train.seed = seed
    return cfg


@pytest.fixture
def rng():
    return torch.Generator().manual_seed(1234)


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)
