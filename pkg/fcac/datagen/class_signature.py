from __future__ import annotations


from typing import Self

import attrs
import numpy as np

from ..constants.custom_typing import ClassIdType


@attrs.frozen(kw_only=True)
class ClassSignature:
    """
    Harmonic recipe of one synthetic sound class.

    Harmonic `h` (1-based) sounds at `h * fundamental_hz` with amplitude
    `harmonic_amplitudes[h - 1]` and phase `harmonic_phases[h - 1]`. The
    envelope rises linearly over `attack_s` and decays as `exp(-decay_rate * t)`.
    """

    class_id: ClassIdType
    fundamental_hz: float
    harmonic_amplitudes: tuple[float, ...]
    harmonic_phases: tuple[float, ...]
    attack_s: float
    decay_rate: float
    pitch_jitter: float
    amplitude_jitter: float
    sample_rate: int

    def __attrs_post_init__(
        self: Self
    ) -> None:
        assert len(self.harmonic_amplitudes) == len(self.harmonic_phases) >= 1
        assert 20.0 < self.fundamental_hz < self.sample_rate / 2.0 / self.n_harmonics
        assert all(amplitude >= 0.0 for amplitude in self.harmonic_amplitudes)
        assert any(amplitude > 0.0 for amplitude in self.harmonic_amplitudes)
        assert self.attack_s > 0.0 and self.decay_rate >= 0.0
        assert self.pitch_jitter >= 0.0 and self.amplitude_jitter >= 0.0

    @property
    def n_harmonics(
        self: Self
    ) -> int:
        return len(self.harmonic_amplitudes)

    @property
    def harmonic_frequencies(
        self: Self
    ) -> np.ndarray:
        return self.fundamental_hz * np.arange(1, self.n_harmonics + 1)
