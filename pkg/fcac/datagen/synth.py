from __future__ import annotations


from typing import (
    Never,
    Self
)

import numpy as np

from ..constants.custom_typing import (
    ClassIdType,
    NP_xf8,
    SeedType
)
from ..constants.constants import DEFAULT_SAMPLE_RATE
from ..dsp.audio_clip import AudioClip
from ..exceptions import (
    SampleRateMismatch,
    TooManyClasses
)
from .class_signature import ClassSignature
from .dataset_manifest import (
    DatasetManifest,
    ManifestEntry
)
from .synthetic_dataset import SyntheticDataset


class Synth:
    """
    Deterministic harmonic "instrument" classes.

    Fundamentals sit on a geometric ladder with ratio `1 + spacing` starting at
    `MIN_FUNDAMENTAL_HZ`; a seeded permutation assigns ladder rungs to class
    ids, so two classes never share a rung. Partials stay below
    `HEADROOM * Nyquist`.
    """

    __slots__ = ()

    MIN_FUNDAMENTAL_HZ: float = 40.0
    HEADROOM: float = 0.9
    TONE_PEAK: float = 0.9

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def fundamental_ladder(
        cls: type[Self],
        sample_rate: int,
        spacing: float = 0.05
    ) -> NP_xf8:
        limit = cls.HEADROOM * sample_rate / 2.0
        n_rungs = int(np.floor(np.log(limit / cls.MIN_FUNDAMENTAL_HZ) / np.log1p(spacing))) + 1
        ladder = cls.MIN_FUNDAMENTAL_HZ * (1.0 + spacing) ** np.arange(max(n_rungs, 0))
        return ladder[ladder < limit]

    @classmethod
    def synth_signature(
        cls: type[Self],
        class_id: ClassIdType,
        seed: SeedType,
        sample_rate: int = DEFAULT_SAMPLE_RATE,
        spacing: float = 0.05,
        max_harmonics: int = 6,
        pitch_jitter: float = 0.0,
        amplitude_jitter: float = 0.0
    ) -> ClassSignature:
        ladder = cls.fundamental_ladder(sample_rate, spacing)
        if not 0 <= class_id < len(ladder):
            raise TooManyClasses(
                f"Class {class_id} does not fit: only {len(ladder)} fundamentals with "
                f"{spacing:.0%} spacing exist below Nyquist at {sample_rate} Hz"
            )
        rungs = np.random.Generator(np.random.PCG64(seed)).permutation(len(ladder))
        fundamental_hz = float(ladder[rungs[class_id]])
        n_harmonics = max(1, min(max_harmonics, int(cls.HEADROOM * sample_rate / 2.0 // fundamental_hz)))
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, class_id))))
        # The fundamental is always the loudest partial.
        overtones = rng.uniform(0.05, 0.8, n_harmonics - 1) / np.arange(2, n_harmonics + 1)
        return ClassSignature(
            class_id=class_id,
            fundamental_hz=fundamental_hz,
            harmonic_amplitudes=(1.0, *(float(amplitude) for amplitude in overtones)),
            harmonic_phases=tuple(float(phase) for phase in rng.uniform(0.0, 2.0 * np.pi, n_harmonics)),
            attack_s=float(rng.uniform(0.005, 0.05)),
            decay_rate=float(rng.uniform(0.5, 3.0)),
            pitch_jitter=pitch_jitter,
            amplitude_jitter=amplitude_jitter,
            sample_rate=sample_rate
        )

    @classmethod
    def synth_clip(
        cls: type[Self],
        signature: ClassSignature,
        duration_s: float,
        sample_rate: int,
        noise_level: float,
        seed: SeedType | np.random.SeedSequence,
        clip_id: str | None = None
    ) -> AudioClip:
        assert duration_s > 0.0 and noise_level >= 0.0
        if sample_rate != signature.sample_rate:
            raise SampleRateMismatch(
                f"Signature of class {signature.class_id} was built for {signature.sample_rate} Hz, not {sample_rate} Hz"
            )
        rng = np.random.Generator(np.random.PCG64(seed))
        n_samples = max(round(duration_s * sample_rate), 1)
        t = np.arange(n_samples) / sample_rate
        fundamental_hz = signature.fundamental_hz * (1.0 + signature.pitch_jitter * rng.standard_normal())
        amplitudes = np.maximum(
            np.array(signature.harmonic_amplitudes)
            * (1.0 + signature.amplitude_jitter * rng.standard_normal(signature.n_harmonics)),
            0.0
        )
        noise = rng.standard_normal(n_samples)
        harmonics = np.arange(1, signature.n_harmonics + 1)
        partials = amplitudes[:, None] * np.sin(
            2.0 * np.pi * fundamental_hz * harmonics[:, None] * t[None, :]
            + np.array(signature.harmonic_phases)[:, None]
        )
        envelope = np.minimum(t / signature.attack_s, 1.0) * np.exp(-signature.decay_rate * t)
        tone = partials.sum(axis=0) * envelope
        if (tone_peak := np.max(np.abs(tone))) > 0.0:
            tone = tone * (cls.TONE_PEAK / tone_peak)
        samples = tone + noise_level * noise
        samples = samples / max(1.0, float(np.max(np.abs(samples))))
        return AudioClip(
            samples=samples,
            sample_rate=sample_rate,
            clip_id=clip_id if clip_id is not None else f"sig:{signature.class_id}",
            label=signature.class_id
        )

    @classmethod
    def dataset_signature(
        cls: type[Self],
        desc: SyntheticDataset,
        class_id: ClassIdType
    ) -> ClassSignature:
        return cls.synth_signature(
            class_id,
            desc.seed,
            sample_rate=desc.sample_rate,
            spacing=desc.spacing,
            max_harmonics=desc.max_harmonics,
            pitch_jitter=desc.pitch_jitter,
            amplitude_jitter=desc.amplitude_jitter
        )

    @classmethod
    def render_source(
        cls: type[Self],
        source: str,
        desc: SyntheticDataset
    ) -> AudioClip:
        class_part, index_part = source.removeprefix("sig:").split("/")
        class_id = int(class_part)
        clip_index = int(index_part)
        return cls.synth_clip(
            cls.dataset_signature(desc, class_id),
            desc.duration_s,
            desc.sample_rate,
            desc.noise_level,
            np.random.SeedSequence((desc.seed, class_id, clip_index)),
            clip_id=source
        )

    @classmethod
    def build_manifest(
        cls: type[Self],
        desc: SyntheticDataset,
        synthetic_path: str | None = None
    ) -> DatasetManifest:
        if desc.n_classes > (capacity := len(cls.fundamental_ladder(desc.sample_rate, desc.spacing))):
            raise TooManyClasses(
                f"{desc.n_classes} classes requested, {capacity} fit at {desc.sample_rate} Hz "
                f"with {desc.spacing:.0%} spacing"
            )
        entries: list[ManifestEntry] = []
        for class_id in range(desc.n_classes):
            for clip_index in range(desc.train_clips_per_class + desc.eval_clips_per_class):
                entries.append(ManifestEntry(
                    source=f"sig:{class_id}/{clip_index}",
                    class_id=class_id,
                    split="train" if clip_index < desc.train_clips_per_class else "eval"
                ))
        return DatasetManifest(
            entries=entries,
            sample_rate=desc.sample_rate,
            synthetic=desc,
            synthetic_path=synthetic_path
        )
