"""Shared pytest fixtures and utilities for testing."""

import pytest
from click.testing import CliRunner

from seqgan_cli.discriminator import DiscriminatorConfig, DiscriminatorModel
from seqgan_cli.generator import GeneratorDims, GeneratorModel
from seqgan_cli.numerics import Rng
from seqgan_cli.training import TrainingConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="Run desk-scale training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def runner():
    """Create a Click test runner."""
    return CliRunner()


@pytest.fixture
def tiny_dims():
    """Three tokens, horizon two: small enough to enumerate all nine sequences."""
    return GeneratorDims(vocab_size=3, seq_len=2, embedding_dim=4, hidden_dim=5)


@pytest.fixture
def tiny_generator(tiny_dims):
    return GeneratorModel.init_random(tiny_dims, Rng(7), scale=0.5)


@pytest.fixture
def tiny_disc_config():
    return DiscriminatorConfig(vocab_size=3, seq_len=2, embedding_dim=4, kernels=((1, 3), (2, 2)), dropout_keep=1.0)


@pytest.fixture
def tiny_discriminator(tiny_disc_config):
    return DiscriminatorModel.init_random(tiny_disc_config, Rng(11), scale=0.5)


@pytest.fixture
def tiny_training():
    """A training configuration that finishes in well under a second per algorithm."""
    return TrainingConfig(
        seed=3,
        rollout_num=2,
        pretrain_gen_epochs=2,
        pretrain_disc_steps=1,
        pretrain_disc_epochs=1,
        total_adversarial_rounds=2,
        k=1,
        gen_batch_size=8,
        disc_batch_size=16,
        eval_samples=20,
        disc_embedding_dim=4,
        kernels=((1, 3), (2, 2)),
    )


@pytest.fixture
def config_file(tmp_path):
    """Write an INI file into tmp_path and return its path."""

    def write(text: str, name: str = "experiment.ini"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
