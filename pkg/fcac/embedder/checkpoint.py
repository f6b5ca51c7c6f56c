from __future__ import annotations


import hashlib
import pathlib
import struct
from typing import (
    Never,
    Self
)

import numpy as np
import yaml

from ..classifier.stochastic_classifier_state import StochasticClassifierState
from ..exceptions import (
    CorruptChecksum,
    IoError,
    VersionMismatch
)
from .embedder_config import EmbedderConfig
from .embedder_params import EmbedderParams


class Checkpoint:
    """
    Versioned binary checkpoint of embedder parameters and classifier state.

    Layout (integers little-endian):
    - magic `FCACCKPT`, uint32 format version;
    - 32-byte SHA-256 digest of the embedder config;
    - uint32 metadata length, YAML metadata (config, frozen flag, sampler);
    - uint32 tensor count, then per tensor: uint16 name length, UTF-8 name,
      uint8 rank, uint32 per dimension, float64 values in row-major order;
    - 32-byte SHA-256 of everything before it.
    """

    __slots__ = ()

    MAGIC: bytes = b"FCACCKPT"
    VERSION: int = 2
    SAMPLER: str = "numpy.PCG64/standard_normal-ziggurat"

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def config_digest(
        cls: type[Self],
        cfg: EmbedderConfig
    ) -> bytes:
        return hashlib.sha256(yaml.safe_dump(cfg.to_dict(), sort_keys=True).encode("utf-8")).digest()

    @classmethod
    def encode(
        cls: type[Self],
        params: EmbedderParams,
        state: StochasticClassifierState,
        version: int | None = None
    ) -> bytes:
        metadata = yaml.safe_dump({
            "embedder": params.config.to_dict(),
            "frozen": params.frozen,
            "sampler": cls.SAMPLER
        }, sort_keys=True).encode("utf-8")
        named_tensors: dict[str, np.ndarray] = {
            **{f"params.{name}": value for name, value in params.tensors.items()},
            "classifier.mu": state.mu,
            "classifier.sigma": state.sigma,
            "classifier.class_ids": np.array(state.class_ids, dtype=np.float64),
            "classifier.session_boundaries": np.array(state.session_boundaries, dtype=np.float64),
            "classifier.dim": np.array([state.dim], dtype=np.float64)
        }
        chunks = [
            cls.MAGIC,
            struct.pack("<I", cls.VERSION if version is None else version),
            cls.config_digest(params.config),
            struct.pack("<I", len(metadata)),
            metadata,
            struct.pack("<I", len(named_tensors))
        ]
        for name, value in named_tensors.items():
            encoded_name = name.encode("utf-8")
            chunks.append(struct.pack("<H", len(encoded_name)))
            chunks.append(encoded_name)
            chunks.append(struct.pack("<B", value.ndim))
            chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
            chunks.append(np.ascontiguousarray(value, dtype="<f8").tobytes())
        body = b"".join(chunks)
        return body + hashlib.sha256(body).digest()

    @classmethod
    def decode(
        cls: type[Self],
        data: bytes
    ) -> tuple[EmbedderParams, StochasticClassifierState]:
        if len(data) < 12 or data[:8] != cls.MAGIC:
            raise CorruptChecksum("Not a checkpoint: bad magic or truncated header")
        (version,) = struct.unpack_from("<I", data, 8)
        if version != cls.VERSION:
            raise VersionMismatch(f"Checkpoint format version {version}, reader supports {cls.VERSION}")
        body, checksum = data[:-32], data[-32:]
        if len(data) < 12 + 32 + 32 or hashlib.sha256(body).digest() != checksum:
            raise CorruptChecksum("Checkpoint checksum mismatch (truncated or corrupted file)")
        offset = 12
        digest = body[offset:offset + 32]
        offset += 32
        try:
            (metadata_length,) = struct.unpack_from("<I", body, offset)
            offset += 4
            metadata = yaml.safe_load(body[offset:offset + metadata_length].decode("utf-8"))
            offset += metadata_length
            (count,) = struct.unpack_from("<I", body, offset)
            offset += 4
            named_tensors: dict[str, np.ndarray] = {}
            for _ in range(count):
                (name_length,) = struct.unpack_from("<H", body, offset)
                offset += 2
                name = body[offset:offset + name_length].decode("utf-8")
                offset += name_length
                (ndim,) = struct.unpack_from("<B", body, offset)
                offset += 1
                shape = struct.unpack_from(f"<{ndim}I", body, offset)
                offset += 4 * ndim
                size = int(np.prod(shape))
                named_tensors[name] = np.frombuffer(body, dtype="<f8", count=size, offset=offset).reshape(shape).astype(np.float64)
                offset += 8 * size
        except (struct.error, ValueError, UnicodeDecodeError, yaml.YAMLError) as error:
            raise CorruptChecksum(f"Malformed checkpoint body: {error}") from error
        config = EmbedderConfig(**metadata["embedder"])
        if cls.config_digest(config) != digest:
            raise CorruptChecksum("Checkpoint config digest does not match its metadata")
        params = EmbedderParams(
            config=config,
            tensors={
                name.removeprefix("params."): value
                for name, value in named_tensors.items()
                if name.startswith("params.")
            },
            frozen=bool(metadata["frozen"])
        )
        dim = int(named_tensors["classifier.dim"][0])
        mu = named_tensors["classifier.mu"]
        sigma = named_tensors["classifier.sigma"]
        if mu.ndim != 2 or mu.shape[0] != dim or sigma.shape != mu.shape:
            raise CorruptChecksum(f"Classifier tensors of shapes {mu.shape} and {sigma.shape} do not match dimension {dim}")
        state = StochasticClassifierState(
            mu=mu,
            sigma=sigma,
            class_ids=named_tensors["classifier.class_ids"].astype(np.int64),
            session_boundaries=named_tensors["classifier.session_boundaries"].astype(np.int64)
        )
        return params, state

    @classmethod
    def save(
        cls: type[Self],
        params: EmbedderParams,
        state: StochasticClassifierState,
        path: pathlib.Path
    ) -> None:
        try:
            path.write_bytes(cls.encode(params, state))
        except OSError as error:
            raise IoError(f"Cannot write checkpoint '{path}': {error}") from error

    @classmethod
    def load(
        cls: type[Self],
        path: pathlib.Path
    ) -> tuple[EmbedderParams, StochasticClassifierState]:
        try:
            data = path.read_bytes()
        except OSError as error:
            raise IoError(f"Cannot read checkpoint '{path}': {error}") from error
        return cls.decode(data)
