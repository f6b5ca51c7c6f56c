from __future__ import annotations


import pathlib

import numpy as np
import pytest
import yaml

from fcac.datagen.synthetic_dataset import SyntheticDataset
from fcac.dsp.dsp_config import DspConfig
from fcac.embedder.embedder_config import EmbedderConfig
from fcac.toplevel.config import RunConfig


# A configuration small enough for a full protocol run in a few seconds.
TINY_OVERRIDES: dict[str, object] = {
    "dsp": {"n_mels": 8},
    "embedder": {
        "n_mels": 8,
        "embedding_dim": 8,
        "channels": [2, 4],
        "blocks_per_stage": [1, 1],
        "projection_dim": 4
    },
    "protocol": {
        "n_base_classes": 3,
        "n_sessions": 2,
        "n_way": 2,
        "n_shot": 2,
        "base_epochs": 1,
        "classifier_epochs": 2,
        "incremental_epochs": 3,
        "batch_size": 6
    },
    "data": {
        "synthetic": {
            "n_classes": 7,
            "train_clips_per_class": 3,
            "eval_clips_per_class": 2,
            "duration_s": 0.1,
            "sample_rate": 8000
        }
    }
}


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(1234))


@pytest.fixture
def tiny_embedder_config() -> EmbedderConfig:
    return EmbedderConfig(
        n_mels=8,
        embedding_dim=6,
        channels=(2, 3),
        blocks_per_stage=(1, 1),
        projection_dim=4
    )


@pytest.fixture
def tiny_dsp_config() -> DspConfig:
    return DspConfig(n_mels=8)


@pytest.fixture
def tiny_dataset() -> SyntheticDataset:
    return SyntheticDataset(
        n_classes=7,
        train_clips_per_class=3,
        eval_clips_per_class=2,
        duration_s=0.1,
        sample_rate=8000
    )


@pytest.fixture
def tiny_run_config(
    tmp_path: pathlib.Path
) -> RunConfig:
    return RunConfig.load(
        environ={},
        overrides={**TINY_OVERRIDES, "out_dir": tmp_path.as_posix()},
        live_log=False
    )


@pytest.fixture
def tiny_config_file(
    tmp_path: pathlib.Path
) -> pathlib.Path:
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY_OVERRIDES, sort_keys=True), encoding="utf-8")
    return path
