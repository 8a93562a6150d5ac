"""Tests for the checkpoint file format."""

import numpy as np
import pytest

from seqgan_cli.checkpoint import CHECKPOINT_HEADER, load_checkpoint, save_checkpoint
from seqgan_cli.errors import DataError, DimensionError
from seqgan_cli.generator import GeneratorDims, GeneratorModel
from seqgan_cli.numerics import ParameterStore, Rng


class TestCheckpoint:
    """Tests for save_checkpoint and load_checkpoint."""

    def test_bit_exact_reload(self, tmp_path):
        model = GeneratorModel.init_random(GeneratorDims(4, 3, 2, 3), Rng(0))
        model.params["c"][0] = 1.0 / 3.0
        path = save_checkpoint(model.params, tmp_path / "gen.ckpt")

        loaded = load_checkpoint(path)
        assert list(loaded) == list(model.params)
        for name in model.params:
            assert np.array_equal(loaded[name], model.params[name])

    def test_format(self, tmp_path):
        store = ParameterStore()
        store.add("w", np.array([[1.5, -2.0]]))
        lines = save_checkpoint(store, tmp_path / "w.ckpt").read_text().splitlines()
        assert lines == [CHECKPOINT_HEADER, "w 1x2 1.5 -2.0"]

    def test_load_into_existing_store(self, tmp_path):
        source = GeneratorModel.init_random(GeneratorDims(3, 2, 2, 2), Rng(1))
        target = GeneratorModel.zeros(GeneratorDims(3, 2, 2, 2))
        load_checkpoint(save_checkpoint(source.params, tmp_path / "g.ckpt"), target.params)
        assert np.array_equal(target.params["V"], source.params["V"])

    def test_mismatched_store(self, tmp_path):
        source = GeneratorModel.zeros(GeneratorDims(3, 2, 2, 2))
        target = GeneratorModel.zeros(GeneratorDims(4, 2, 2, 2))
        path = save_checkpoint(source.params, tmp_path / "g.ckpt")
        with pytest.raises(DimensionError):
            load_checkpoint(path, target.params)

    @pytest.mark.parametrize("text", [
        "not a checkpoint\n",
        f"{CHECKPOINT_HEADER}\nw 2x2 1.0 2.0\n",
        f"{CHECKPOINT_HEADER}\nw 0x2\n",
        f"{CHECKPOINT_HEADER}\nw 1xq 1.0\n",
    ])
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.ckpt"
        path.write_text(text)
        with pytest.raises(DataError):
            load_checkpoint(path)
