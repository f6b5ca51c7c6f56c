from __future__ import annotations


import pathlib
import struct
from typing import (
    Iterable,
    Never,
    Self
)

import numpy as np

from ..exceptions import (
    CorruptChecksum,
    IoError,
    VersionMismatch
)
from .log_mel_spectrogram import LogMelSpectrogram


class FeatureCache:
    """
    Binary store of log-mel spectrograms, one record per clip.

    Layout (all integers little-endian):
    - header, 16 bytes: magic `FCACFEAT`, uint32 version, uint32 record count;
    - per record: uint32 clip-id byte length, UTF-8 clip id, uint32 n_frames,
      uint32 n_mels, then n_frames * n_mels float64 values in row-major order.
    """

    __slots__ = ()

    MAGIC: bytes = b"FCACFEAT"
    VERSION: int = 1

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def encode(
        cls: type[Self],
        spectrograms: Iterable[LogMelSpectrogram]
    ) -> bytes:
        spectrograms = tuple(spectrograms)
        chunks = [cls.MAGIC, struct.pack("<II", cls.VERSION, len(spectrograms))]
        for spectrogram in spectrograms:
            clip_id = spectrogram.clip_id.encode("utf-8")
            n_frames, n_mels = spectrogram.values.shape
            chunks.append(struct.pack("<I", len(clip_id)))
            chunks.append(clip_id)
            chunks.append(struct.pack("<II", n_frames, n_mels))
            chunks.append(spectrogram.values.astype("<f8").tobytes(order="C"))
        return b"".join(chunks)

    @classmethod
    def decode(
        cls: type[Self],
        data: bytes
    ) -> list[LogMelSpectrogram]:
        if len(data) < 16 or data[:8] != cls.MAGIC:
            raise CorruptChecksum("Not a feature cache: bad magic or truncated header")
        version, count = struct.unpack_from("<II", data, 8)
        if version != cls.VERSION:
            raise VersionMismatch(f"Feature cache version {version}, reader supports {cls.VERSION}")
        offset = 16
        spectrograms: list[LogMelSpectrogram] = []
        try:
            for _ in range(count):
                (id_length,) = struct.unpack_from("<I", data, offset)
                offset += 4
                clip_id = data[offset:offset + id_length].decode("utf-8")
                offset += id_length
                n_frames, n_mels = struct.unpack_from("<II", data, offset)
                offset += 8
                n_values = n_frames * n_mels
                values = np.frombuffer(data, dtype="<f8", count=n_values, offset=offset)
                offset += 8 * n_values
                spectrograms.append(LogMelSpectrogram(
                    values=values.reshape(n_frames, n_mels).astype(np.float64),
                    clip_id=clip_id
                ))
        except (struct.error, ValueError, UnicodeDecodeError) as error:
            raise CorruptChecksum(f"Truncated or corrupt feature cache: {error}") from error
        if offset != len(data):
            raise CorruptChecksum("Trailing bytes after the last feature record")
        return spectrograms

    @classmethod
    def write(
        cls: type[Self],
        path: pathlib.Path,
        spectrograms: Iterable[LogMelSpectrogram]
    ) -> None:
        try:
            path.write_bytes(cls.encode(spectrograms))
        except OSError as error:
            raise IoError(f"Cannot write feature cache '{path}': {error}") from error

    @classmethod
    def read(
        cls: type[Self],
        path: pathlib.Path
    ) -> list[LogMelSpectrogram]:
        try:
            data = path.read_bytes()
        except OSError as error:
            raise IoError(f"Cannot read feature cache '{path}': {error}") from error
        return cls.decode(data)
