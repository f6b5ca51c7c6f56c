from __future__ import annotations


from concurrent.futures import ThreadPoolExecutor
from typing import (
    Iterable,
    Iterator,
    Mapping,
    Never,
    Self
)

import numpy as np

from ..constants.custom_typing import (
    NP_xf8,
    NP_xxf8,
    NP_xxxf8,
    SeedType
)
from ..diffmath.tensor import Tensor
from ..dsp.log_mel_spectrogram import LogMelSpectrogram
from ..exceptions import ShapeMismatch
from .embedder_config import EmbedderConfig
from .embedder_params import EmbedderParams


type EmbeddingVector = NP_xf8


class Embedder:
    """
    Residual convolutional embedding network over log-mel spectrograms.

    Input `(N, n_mels, T)` is standardized per spectrogram and treated as a
    one-channel image with mel on the vertical axis. A 3x3 stem is followed by
    stages of two-convolution residual blocks; every stage after the first
    halves both axes in its first block. Time is mean-pooled, the remaining
    channel-by-mel grid is flattened into a linear layer of width
    `embedding_dim`, and the result is L2-normalized.

    Per-channel affine scale and shift replace batch normalization.
    """

    __slots__ = ()

    BATCH_CHUNK: int = 64

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def _block_names(
        cls: type[Self],
        cfg: EmbedderConfig
    ) -> Iterator[tuple[str, int, int, int]]:
        # Yields (prefix, in_channels, out_channels, stride) per residual block.
        in_channels = cfg.channels[0]
        for stage_index, (out_channels, n_blocks) in enumerate(zip(cfg.channels, cfg.blocks_per_stage, strict=True)):
            for block_index in range(n_blocks):
                stride = 2 if stage_index and not block_index else 1
                yield f"stage{stage_index}.block{block_index}", in_channels, out_channels, stride
                in_channels = out_channels

    @classmethod
    def initialize(
        cls: type[Self],
        cfg: EmbedderConfig,
        seed: SeedType
    ) -> EmbedderParams:
        # He-normal weights, unit affine scales, zero shifts and biases.
        rng = np.random.Generator(np.random.PCG64(seed))
        tensors: dict[str, np.ndarray] = {}

        def he(
            shape: tuple[int, ...],
            fan_in: int
        ) -> np.ndarray:
            return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)

        def affine(
            prefix: str,
            channels: int
        ) -> None:
            tensors[f"{prefix}.scale"] = np.ones(channels)
            tensors[f"{prefix}.shift"] = np.zeros(channels)

        stem_channels = cfg.channels[0]
        tensors["stem.kernel"] = he((stem_channels, 1, 3, 3), 9)
        affine("stem.affine", stem_channels)
        for prefix, in_channels, out_channels, stride in cls._block_names(cfg):
            tensors[f"{prefix}.conv1.kernel"] = he((out_channels, in_channels, 3, 3), in_channels * 9)
            affine(f"{prefix}.affine1", out_channels)
            tensors[f"{prefix}.conv2.kernel"] = he((out_channels, out_channels, 3, 3), out_channels * 9)
            affine(f"{prefix}.affine2", out_channels)
            if stride != 1 or in_channels != out_channels:
                tensors[f"{prefix}.shortcut.kernel"] = he((out_channels, in_channels, 1, 1), in_channels)
        flat_features = cfg.channels[-1] * cfg.pooled_mels
        tensors["head.weight"] = he((flat_features, cfg.embedding_dim), flat_features)
        tensors["head.bias"] = np.zeros(cfg.embedding_dim)
        tensors["projection.weight1"] = he((cfg.embedding_dim, cfg.embedding_dim), cfg.embedding_dim)
        tensors["projection.bias1"] = np.zeros(cfg.embedding_dim)
        tensors["projection.weight2"] = he((cfg.embedding_dim, cfg.projection_dim), cfg.embedding_dim)
        tensors["projection.bias2"] = np.zeros(cfg.projection_dim)
        return EmbedderParams(config=cfg, tensors=tensors)

    @classmethod
    def freeze(
        cls: type[Self],
        params: EmbedderParams
    ) -> EmbedderParams:
        return params.freeze()

    @classmethod
    def parameter_tensors(
        cls: type[Self],
        params: EmbedderParams,
        requires_grad: bool
    ) -> dict[str, Tensor]:
        return {
            name: Tensor(value, requires_grad=requires_grad and not params.frozen)
            for name, value in params.tensors.items()
        }

    @classmethod
    def stack_inputs(
        cls: type[Self],
        spectrograms: Iterable[LogMelSpectrogram],
        cfg: EmbedderConfig
    ) -> NP_xxxf8:
        """
        Standardized `(N, n_mels, T)` input; all spectrograms must share a shape.
        """
        spectrograms = tuple(spectrograms)
        shapes = {spectrogram.values.shape for spectrogram in spectrograms}
        if len(shapes) != 1:
            raise ShapeMismatch("embed#input", f"batch spectrograms differ in shape: {sorted(shapes)}")
        ((_, n_mels),) = shapes
        if n_mels != cfg.n_mels:
            raise ShapeMismatch("embed#input", f"spectrogram has {n_mels} mel bins, embedder expects {cfg.n_mels}")
        values = np.stack([spectrogram.values.T for spectrogram in spectrograms])
        mean = values.mean(axis=(1, 2), keepdims=True)
        std = np.sqrt(values.var(axis=(1, 2), keepdims=True) + cfg.standardize_eps)
        return (values - mean) / std

    @classmethod
    def _conv_affine(
        cls: type[Self],
        x: Tensor,
        tensors: Mapping[str, Tensor],
        conv: str,
        affine: str,
        stride: int
    ) -> Tensor:
        y = x.conv2d(tensors[f"{conv}.kernel"], stride=stride, padding=1)
        channels = y.shape[1]
        scale = tensors[f"{affine}.scale"].reshape(1, channels, 1, 1)
        shift = tensors[f"{affine}.shift"].reshape(1, channels, 1, 1)
        return y * scale + shift

    @classmethod
    def forward(
        cls: type[Self],
        inputs: NP_xxxf8,
        tensors: Mapping[str, Tensor],
        cfg: EmbedderConfig
    ) -> Tensor:
        """
        Unit-norm `(N, embedding_dim)` embeddings of standardized inputs.
        """
        x = Tensor(inputs[:, None, :, :])
        x = cls._conv_affine(x, tensors, "stem", "stem.affine", 1).relu()
        for prefix, in_channels, out_channels, stride in cls._block_names(cfg):
            y = cls._conv_affine(x, tensors, f"{prefix}.conv1", f"{prefix}.affine1", stride).relu()
            y = cls._conv_affine(y, tensors, f"{prefix}.conv2", f"{prefix}.affine2", 1)
            if stride != 1 or in_channels != out_channels:
                shortcut = x.conv2d(tensors[f"{prefix}.shortcut.kernel"], stride=stride, padding=0)
            else:
                shortcut = x
            x = (y + shortcut).relu()
        pooled = x.mean(axis=3)
        n, channels, n_mels = pooled.shape
        flat = pooled.reshape(n, channels * n_mels)
        return (flat @ tensors["head.weight"] + tensors["head.bias"]).normalize(axis=1)

    @classmethod
    def project(
        cls: type[Self],
        embeddings: Tensor,
        tensors: Mapping[str, Tensor]
    ) -> Tensor:
        # Linear, ReLU, linear, then L2 normalization; feeds the contrastive loss only.
        if embeddings.shape[-1] != tensors["projection.weight1"].shape[0]:
            raise ShapeMismatch(
                "project#input",
                f"embedding width {embeddings.shape[-1]} does not match projection input {tensors["projection.weight1"].shape[0]}"
            )
        hidden = (embeddings @ tensors["projection.weight1"] + tensors["projection.bias1"]).relu()
        return (hidden @ tensors["projection.weight2"] + tensors["projection.bias2"]).normalize(axis=1)

    @classmethod
    def project_vector(
        cls: type[Self],
        embedding: EmbeddingVector,
        params: EmbedderParams
    ) -> NP_xf8:
        tensors = cls.parameter_tensors(params, requires_grad=False)
        return cls.project(Tensor(np.asarray(embedding, dtype=np.float64)[None, :]), tensors).data[0]

    @classmethod
    def embed(
        cls: type[Self],
        spectrogram: LogMelSpectrogram,
        params: EmbedderParams
    ) -> EmbeddingVector:
        tensors = cls.parameter_tensors(params, requires_grad=False)
        return cls.forward(cls.stack_inputs((spectrogram,), params.config), tensors, params.config).data[0]

    @classmethod
    def embed_batch(
        cls: type[Self],
        spectrograms: Iterable[LogMelSpectrogram],
        params: EmbedderParams,
        workers: int = 1
    ) -> NP_xxf8:
        """
        Inference embeddings in input order.

        Spectrograms are grouped by frame count and processed in fixed-size
        chunks, optionally across a thread pool.
        """
        spectrograms = tuple(spectrograms)
        tensors = cls.parameter_tensors(params, requires_grad=False)
        result = np.zeros((len(spectrograms), params.config.embedding_dim))
        groups: dict[int, list[int]] = {}
        for index, spectrogram in enumerate(spectrograms):
            groups.setdefault(spectrogram.n_frames, []).append(index)
        chunks = [
            indices[start:start + cls.BATCH_CHUNK]
            for _, indices in sorted(groups.items())
            for start in range(0, len(indices), cls.BATCH_CHUNK)
        ]

        def run_chunk(
            indices: list[int]
        ) -> NP_xxf8:
            inputs = cls.stack_inputs((spectrograms[index] for index in indices), params.config)
            return cls.forward(inputs, tensors, params.config).data

        if workers <= 1:
            outputs = [run_chunk(chunk) for chunk in chunks]
        else:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                outputs = list(executor.map(run_chunk, chunks))
        for indices, output in zip(chunks, outputs, strict=True):
            result[indices] = output
        return result
