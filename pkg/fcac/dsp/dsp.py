from __future__ import annotations


from concurrent.futures import ThreadPoolExecutor
from typing import (
    ClassVar,
    Iterable,
    Never,
    Self
)

import numpy as np
from lru import LRU

from ..constants.constants import (
    HTK_MEL_BREAK_HZ,
    HTK_MEL_FACTOR
)
from ..constants.custom_typing import (
    NP_xf8,
    NP_xxf8
)
from ..exceptions import (
    ClipTooShort,
    FrameTooLong,
    InvalidLength
)
from .audio_clip import AudioClip
from .dsp_config import (
    DspConfig,
    ResolvedDspConfig
)
from .log_mel_spectrogram import LogMelSpectrogram


class Dsp:
    __slots__ = ()

    # Shared constants are handed out read-only, so caching them is safe across threads.
    _window_cache: ClassVar[LRU] = LRU(16)
    _filterbank_cache: ClassVar[LRU] = LRU(16)

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def hz_to_mel(
        cls: type[Self],
        hz: float | NP_xf8
    ) -> float | NP_xf8:
        return HTK_MEL_FACTOR * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / HTK_MEL_BREAK_HZ)

    @classmethod
    def mel_to_hz(
        cls: type[Self],
        mel: float | NP_xf8
    ) -> float | NP_xf8:
        return HTK_MEL_BREAK_HZ * (10.0 ** (np.asarray(mel, dtype=np.float64) / HTK_MEL_FACTOR) - 1.0)

    @classmethod
    def next_power_of_two(
        cls: type[Self],
        n: int
    ) -> int:
        assert n >= 1
        return 1 << (n - 1).bit_length()

    @classmethod
    def frame_signal(
        cls: type[Self],
        clip: AudioClip,
        cfg: DspConfig | ResolvedDspConfig
    ) -> NP_xxf8:
        resolved = cfg.resolve(clip.sample_rate) if isinstance(cfg, DspConfig) else cfg
        frame_len = resolved.frame_len_samples
        if clip.n_samples < frame_len:
            raise ClipTooShort(clip.clip_id, clip.n_samples, frame_len)
        # The trailing partial frame is dropped.
        frames = np.lib.stride_tricks.sliding_window_view(clip.samples, frame_len)[::resolved.hop_samples]
        return np.array(frames)

    @classmethod
    def hamming_window(
        cls: type[Self],
        n: int
    ) -> NP_xf8:
        if n < 2:
            raise InvalidLength(f"Hamming window needs at least 2 points, got {n}")
        if (window := cls._window_cache.get(n)) is None:
            window = 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(n) / (n - 1))
            window.flags.writeable = False
            cls._window_cache[n] = window
        return window

    @classmethod
    def power_spectrum(
        cls: type[Self],
        frame: NP_xf8 | NP_xxf8,
        n_fft: int
    ) -> NP_xf8 | NP_xxf8:
        # Operates along the last axis, so a stack of frames is transformed at once.
        frame = np.asarray(frame, dtype=np.float64)
        if frame.shape[-1] > n_fft:
            raise FrameTooLong(f"Frame of {frame.shape[-1]} samples exceeds n_fft {n_fft}")
        return np.abs(np.fft.rfft(frame, n=n_fft, axis=-1)) ** 2

    @classmethod
    def mel_centers_hz(
        cls: type[Self],
        cfg: DspConfig | ResolvedDspConfig,
        sample_rate: int
    ) -> NP_xf8:
        resolved = cfg.resolve(sample_rate) if isinstance(cfg, DspConfig) else cfg
        return cls._mel_edges_hz(resolved)[1:-1]

    @classmethod
    def _mel_edges_hz(
        cls: type[Self],
        resolved: ResolvedDspConfig
    ) -> NP_xf8:
        mel_points = np.linspace(
            cls.hz_to_mel(resolved.fmin_hz),
            cls.hz_to_mel(resolved.fmax_hz),
            resolved.n_mels + 2
        )
        return np.asarray(cls.mel_to_hz(mel_points))

    @classmethod
    def mel_filterbank(
        cls: type[Self],
        cfg: DspConfig | ResolvedDspConfig,
        sample_rate: int
    ) -> NP_xxf8:
        resolved = cfg.resolve(sample_rate) if isinstance(cfg, DspConfig) else cfg
        key = (resolved.sample_rate, resolved.n_fft, resolved.n_mels, resolved.fmin_hz, resolved.fmax_hz)
        if (filterbank := cls._filterbank_cache.get(key)) is None:
            filterbank = cls._build_filterbank(resolved)
            filterbank.flags.writeable = False
            cls._filterbank_cache[key] = filterbank
        return filterbank

    @classmethod
    def _build_filterbank(
        cls: type[Self],
        resolved: ResolvedDspConfig
    ) -> NP_xxf8:
        # Each weight is the mean of the triangle over the FFT bin's frequency interval,
        # so narrow low-frequency filters still land on at least one bin.
        edges = cls._mel_edges_hz(resolved)
        lower = edges[:-2, None]
        center = edges[1:-1, None]
        upper = edges[2:, None]
        bin_width = resolved.sample_rate / resolved.n_fft
        bin_hz = np.arange(resolved.n_bins) * bin_width

        def triangle_integral(
            hz: NP_xf8
        ) -> NP_xxf8:
            rising = np.clip(hz[None, :], lower, center)
            falling = np.clip(hz[None, :], center, upper)
            return (
                (rising - lower) ** 2 / (2.0 * (center - lower))
                + (upper - center) / 2.0
                - (upper - falling) ** 2 / (2.0 * (upper - center))
            )

        return (triangle_integral(bin_hz + bin_width / 2.0) - triangle_integral(bin_hz - bin_width / 2.0)) / bin_width

    @classmethod
    def log_mel_spectrogram(
        cls: type[Self],
        clip: AudioClip,
        cfg: DspConfig
    ) -> LogMelSpectrogram:
        resolved = cfg.resolve(clip.sample_rate)
        frames = cls.frame_signal(clip, resolved)
        windowed = frames * cls.hamming_window(resolved.frame_len_samples)
        power = cls.power_spectrum(windowed, resolved.n_fft)
        mel_energy = power @ cls.mel_filterbank(resolved, clip.sample_rate).T
        return LogMelSpectrogram(
            values=np.log(np.maximum(mel_energy, resolved.log_floor)),
            clip_id=clip.clip_id
        )

    @classmethod
    def log_mel_batch(
        cls: type[Self],
        clips: Iterable[AudioClip],
        cfg: DspConfig,
        workers: int = 1
    ) -> list[LogMelSpectrogram]:
        clips = list(clips)
        if workers <= 1:
            return [cls.log_mel_spectrogram(clip, cfg) for clip in clips]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(lambda clip: cls.log_mel_spectrogram(clip, cfg), clips))
