from __future__ import annotations


import pathlib
from typing import (
    Never,
    Self
)

import numpy as np
import soundfile

from ..constants.constants import PCM16_SCALE
from ..dsp.audio_clip import AudioClip
from ..exceptions import (
    IoError,
    MalformedHeader,
    UnsupportedFormat
)


class WavReader:
    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def read(
        cls: type[Self],
        path: pathlib.Path,
        clip_id: str | None = None,
        label: int | None = None
    ) -> AudioClip:
        """
        Read a RIFF/WAVE file of 16-bit PCM samples.

        Stereo is averaged to mono; samples are scaled by 1/32768.
        """
        if not path.is_file():
            raise IoError(f"Cannot read '{path}': no such file")
        try:
            info = soundfile.info(str(path))
        except soundfile.LibsndfileError as error:
            raise MalformedHeader(f"'{path}' is not a readable WAV file: {error}") from error
        if info.format != "WAV" or info.subtype != "PCM_16":
            raise UnsupportedFormat(f"'{path}' is {info.format}/{info.subtype}; only WAV/PCM_16 is supported")
        try:
            data, sample_rate = soundfile.read(str(path), dtype="int16", always_2d=True)
        except soundfile.LibsndfileError as error:
            raise MalformedHeader(f"'{path}' has a malformed body: {error}") from error
        samples = data.astype(np.float64).mean(axis=1) / PCM16_SCALE
        return AudioClip(
            samples=samples,
            sample_rate=int(sample_rate),
            clip_id=clip_id if clip_id is not None else path.name,
            label=label
        )

    @classmethod
    def write(
        cls: type[Self],
        path: pathlib.Path,
        clip: AudioClip
    ) -> None:
        # Quantizes to 16-bit PCM, clipping at full scale.
        quantized = np.clip(np.round(clip.samples * PCM16_SCALE), -PCM16_SCALE, PCM16_SCALE - 1).astype(np.int16)
        try:
            soundfile.write(str(path), quantized, clip.sample_rate, subtype="PCM_16", format="WAV")
        except (soundfile.LibsndfileError, OSError) as error:
            raise IoError(f"Cannot write '{path}': {error}") from error
