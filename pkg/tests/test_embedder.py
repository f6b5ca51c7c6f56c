from __future__ import annotations


import pathlib

import numpy as np
import pytest

from fcac.classifier.prototype import Prototype
from fcac.classifier.stochastic_classifier import StochasticClassifier
from fcac.diffmath.autodiff import Autodiff
from fcac.dsp.log_mel_spectrogram import LogMelSpectrogram
from fcac.embedder.checkpoint import Checkpoint
from fcac.embedder.embedder import Embedder
from fcac.embedder.embedder_config import EmbedderConfig
from fcac.exceptions import (
    ConfigError,
    CorruptChecksum,
    FrozenParameters,
    IoError,
    ShapeMismatch,
    VersionMismatch
)


def _spectrograms(
    rng: np.random.Generator,
    n_frames: tuple[int, ...],
    n_mels: int = 8
) -> list[LogMelSpectrogram]:
    return [
        LogMelSpectrogram(values=rng.standard_normal((frames, n_mels)), clip_id=f"clip{index}")
        for index, frames in enumerate(n_frames)
    ]


def test_pooled_mels_rounds_up_per_downsampling_stage() -> None:
    assert EmbedderConfig(n_mels=8, channels=(2, 3), blocks_per_stage=(1, 1)).pooled_mels == 4
    assert EmbedderConfig(n_mels=9, channels=(2, 3, 4), blocks_per_stage=(1, 1, 1)).pooled_mels == 3
    with pytest.raises(ConfigError):
        EmbedderConfig(channels=(2, 3), blocks_per_stage=(1,))


def test_initialize_is_deterministic(
    tiny_embedder_config: EmbedderConfig
) -> None:
    first = Embedder.initialize(tiny_embedder_config, 7)
    second = Embedder.initialize(tiny_embedder_config, 7)
    other = Embedder.initialize(tiny_embedder_config, 8)
    assert list(first.tensors) == list(second.tensors)
    for name in first.tensors:
        np.testing.assert_array_equal(first.tensors[name], second.tensors[name])
    assert not np.array_equal(first.tensors["head.weight"], other.tensors["head.weight"])
    assert "stage1.block0.shortcut.kernel" in first.tensors
    assert "stage0.block0.shortcut.kernel" not in first.tensors
    assert set(first.projection_names()) == {
        "projection.weight1",
        "projection.bias1",
        "projection.weight2",
        "projection.bias2"
    }


def test_embeddings_are_unit_norm(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    params = Embedder.initialize(tiny_embedder_config, 0)
    embeddings = Embedder.embed_batch(_spectrograms(rng, (5, 9, 5, 12)), params)
    assert embeddings.shape == (4, 6)
    np.testing.assert_allclose(np.linalg.norm(embeddings, axis=1), 1.0, atol=1e-9)


def test_embed_batch_matches_single_embeds_in_order(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    params = Embedder.initialize(tiny_embedder_config, 3)
    spectrograms = _spectrograms(rng, (6, 4, 6, 10, 4))
    batch = Embedder.embed_batch(spectrograms, params)
    threaded = Embedder.embed_batch(spectrograms, params, workers=2)
    singles = np.stack([Embedder.embed(spectrogram, params) for spectrogram in spectrograms])
    np.testing.assert_allclose(batch, singles, atol=1e-12)
    np.testing.assert_allclose(batch, threaded, atol=1e-12)


def test_embedding_ignores_input_offset_and_gain(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    params = Embedder.initialize(tiny_embedder_config, 3)
    values = rng.standard_normal((7, 8))
    plain = Embedder.embed(LogMelSpectrogram(values=values, clip_id="a"), params)
    shifted = Embedder.embed(LogMelSpectrogram(values=3.0 * values - 20.0, clip_id="b"), params)
    np.testing.assert_allclose(plain, shifted, atol=1e-5)


def test_stack_inputs_validates_shapes(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    with pytest.raises(ShapeMismatch):
        Embedder.stack_inputs(_spectrograms(rng, (4, 5)), tiny_embedder_config)
    with pytest.raises(ShapeMismatch):
        Embedder.stack_inputs(_spectrograms(rng, (4,), n_mels=6), tiny_embedder_config)


def test_projection_is_unit_norm(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    params = Embedder.initialize(tiny_embedder_config, 1)
    embedding = Embedder.embed(_spectrograms(rng, (5,))[0], params)
    projected = Embedder.project_vector(embedding, params)
    assert projected.shape == (4,)
    assert np.linalg.norm(projected) == pytest.approx(1.0)


def test_projection_with_identity_layers() -> None:
    cfg = EmbedderConfig(n_mels=4, embedding_dim=3, channels=(2, 2), blocks_per_stage=(1, 1), projection_dim=3)
    params = Embedder.initialize(cfg, 0).updated({
        "projection.weight1": np.eye(3),
        "projection.bias1": np.zeros(3),
        "projection.weight2": np.eye(3),
        "projection.bias2": np.zeros(3)
    })
    # ReLU drops the negative coordinate of (2, 2, -1) / 3, leaving (1, 1, 0) / sqrt(2).
    projected = Embedder.project_vector(np.array([2.0, 2.0, -1.0]) / 3.0, params)
    np.testing.assert_allclose(projected, [2.0 ** -0.5, 2.0 ** -0.5, 0.0], rtol=0.0, atol=1e-12)


def test_forward_gradient_matches_finite_differences(
    rng: np.random.Generator
) -> None:
    cfg = EmbedderConfig(n_mels=4, embedding_dim=3, channels=(2, 2), blocks_per_stage=(1, 1), projection_dim=2)
    params = Embedder.initialize(cfg, 5)
    inputs = Embedder.stack_inputs(_spectrograms(rng, (4, 4), n_mels=4), cfg)
    target = rng.standard_normal((2, 3))
    checked = ("head.weight", "stage1.block0.conv2.kernel")

    def function(
        leaves: dict[str, object]
    ) -> object:
        tensors = Embedder.parameter_tensors(params, requires_grad=False)
        tensors.update(leaves)
        return (Embedder.forward(inputs, tensors, cfg) * target).sum()

    assert Autodiff.gradient_check(function, {name: params.tensors[name] for name in checked}, eps=1e-6) < 1e-5


def test_frozen_parameters_refuse_updates(
    tiny_embedder_config: EmbedderConfig
) -> None:
    params = Embedder.initialize(tiny_embedder_config, 0)
    updated = params.updated({"head.bias": np.ones(6)})
    np.testing.assert_array_equal(updated.tensors["head.bias"], np.ones(6))
    with pytest.raises(ShapeMismatch):
        params.updated({"head.bias": np.ones(5)})
    frozen = Embedder.freeze(params)
    with pytest.raises(FrozenParameters):
        frozen.updated({"head.bias": np.ones(6)})
    assert not any(tensor.requires_grad for tensor in Embedder.parameter_tensors(frozen, requires_grad=True).values())
    assert not frozen.tensors["head.weight"].flags.writeable


def _checkpoint_fixture(
    cfg: EmbedderConfig,
    rng: np.random.Generator
) -> tuple[object, object]:
    params = Embedder.freeze(Embedder.initialize(cfg, 2))
    state = StochasticClassifier.expand(
        StochasticClassifier.empty(cfg.embedding_dim),
        [Prototype(class_id=class_id, vector=rng.standard_normal(cfg.embedding_dim)) for class_id in (0, 1, 4)],
        0.1
    )
    state = StochasticClassifier.expand(
        state,
        [Prototype(class_id=9, vector=rng.standard_normal(cfg.embedding_dim))],
        0.05
    )
    return params, state


def test_checkpoint_round_trip(
    tmp_path: pathlib.Path,
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    params, state = _checkpoint_fixture(tiny_embedder_config, rng)
    path = tmp_path / "model.fcac"
    Checkpoint.save(params, state, path)
    restored_params, restored_state = Checkpoint.load(path)
    assert restored_params.config == params.config
    assert restored_params.frozen
    assert list(restored_params.tensors) == list(params.tensors)
    for name, value in params.tensors.items():
        np.testing.assert_array_equal(restored_params.tensors[name], value)
    np.testing.assert_array_equal(restored_state.mu, state.mu)
    np.testing.assert_array_equal(restored_state.sigma, state.sigma)
    assert restored_state.class_ids == (0, 1, 4, 9)
    assert restored_state.session_boundaries == (0, 3)
    assert Checkpoint.encode(restored_params, restored_state) == path.read_bytes()


def test_checkpoint_of_a_classifier_without_classes(
    tiny_embedder_config: EmbedderConfig
) -> None:
    params = Embedder.initialize(tiny_embedder_config, 2)
    _, state = Checkpoint.decode(Checkpoint.encode(params, StochasticClassifier.empty(tiny_embedder_config.embedding_dim)))
    assert state.mu.shape == (tiny_embedder_config.embedding_dim, 0)
    assert state.sigma.shape == (tiny_embedder_config.embedding_dim, 0)
    assert state.class_ids == ()
    assert state.session_boundaries == ()


def test_checkpoint_detects_truncation_and_corruption(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    data = Checkpoint.encode(*_checkpoint_fixture(tiny_embedder_config, rng))
    with pytest.raises(CorruptChecksum):
        Checkpoint.decode(data[:len(data) // 2])
    flipped = bytearray(data)
    flipped[len(data) // 2] ^= 0xFF
    with pytest.raises(CorruptChecksum):
        Checkpoint.decode(bytes(flipped))
    with pytest.raises(CorruptChecksum):
        Checkpoint.decode(b"NOTACKPT" + data[8:])


def test_checkpoint_rejects_other_versions(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    params, state = _checkpoint_fixture(tiny_embedder_config, rng)
    with pytest.raises(VersionMismatch):
        Checkpoint.decode(Checkpoint.encode(params, state, version=Checkpoint.VERSION + 1))


def test_checkpoint_missing_file(
    tmp_path: pathlib.Path
) -> None:
    with pytest.raises(IoError):
        Checkpoint.load(tmp_path / "absent.fcac")
