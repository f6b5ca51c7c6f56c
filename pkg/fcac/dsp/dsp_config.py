from __future__ import annotations


from typing import Self

import attrs

from ..constants.constants import (
    DEFAULT_FRAME_LEN_MS,
    DEFAULT_HOP_MS,
    DEFAULT_LOG_FLOOR,
    DEFAULT_N_MELS
)
from ..constants.validators import positive
from ..exceptions import (
    ConfigError,
    FrameTooLong,
    InvalidBand,
    InvalidLength
)


@attrs.frozen(kw_only=True)
class DspConfig:
    frame_len_ms: float = attrs.field(default=DEFAULT_FRAME_LEN_MS, validator=positive)
    hop_ms: float = attrs.field(default=DEFAULT_HOP_MS, validator=positive)
    n_fft: int | None = attrs.field(default=None, validator=positive)  # None: next power of two >= frame length.
    n_mels: int = attrs.field(default=DEFAULT_N_MELS, validator=positive)
    fmin_hz: float = 0.0
    fmax_hz: float | None = None  # None: Nyquist.
    log_floor: float = attrs.field(default=DEFAULT_LOG_FLOOR, validator=positive)

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if self.hop_ms > self.frame_len_ms:
            raise ConfigError(f"hop_ms {self.hop_ms} exceeds frame_len_ms {self.frame_len_ms}")
        if self.fmin_hz < 0.0:
            raise InvalidBand(f"fmin_hz must be nonnegative, got {self.fmin_hz}")
        if self.fmax_hz is not None and self.fmin_hz >= self.fmax_hz:
            raise InvalidBand(f"fmin_hz {self.fmin_hz} must be below fmax_hz {self.fmax_hz}")

    def resolve(
        self: Self,
        sample_rate: int
    ) -> ResolvedDspConfig:
        from .dsp import Dsp

        frame_len_samples = round(self.frame_len_ms * sample_rate / 1000.0)
        hop_samples = max(round(self.hop_ms * sample_rate / 1000.0), 1)
        if frame_len_samples < 2:
            raise InvalidLength(f"Frame of {self.frame_len_ms} ms is shorter than 2 samples at {sample_rate} Hz")
        if (n_fft := self.n_fft) is None:
            n_fft = Dsp.next_power_of_two(frame_len_samples)
        elif n_fft & (n_fft - 1):
            raise InvalidLength(f"n_fft must be a power of two, got {n_fft}")
        elif n_fft < frame_len_samples:
            raise FrameTooLong(f"Frame of {frame_len_samples} samples exceeds n_fft {n_fft}")
        nyquist = sample_rate / 2.0
        fmax_hz = nyquist if self.fmax_hz is None else self.fmax_hz
        if fmax_hz > nyquist:
            raise InvalidBand(f"fmax_hz {fmax_hz} exceeds Nyquist frequency {nyquist}")
        if self.fmin_hz >= fmax_hz:
            raise InvalidBand(f"fmin_hz {self.fmin_hz} must be below fmax_hz {fmax_hz}")
        return ResolvedDspConfig(
            sample_rate=sample_rate,
            frame_len_samples=frame_len_samples,
            hop_samples=hop_samples,
            n_fft=n_fft,
            n_mels=self.n_mels,
            fmin_hz=self.fmin_hz,
            fmax_hz=fmax_hz,
            log_floor=self.log_floor
        )


@attrs.frozen(kw_only=True)
class ResolvedDspConfig:
    sample_rate: int
    frame_len_samples: int
    hop_samples: int
    n_fft: int
    n_mels: int
    fmin_hz: float
    fmax_hz: float
    log_floor: float

    @property
    def n_bins(
        self: Self
    ) -> int:
        return self.n_fft // 2 + 1

    def n_frames(
        self: Self,
        n_samples: int
    ) -> int:
        return (n_samples - self.frame_len_samples) // self.hop_samples + 1
