from __future__ import annotations


from typing import (
    Iterable,
    Self,
    Sequence
)

from ..datagen.dataset_manifest import (
    DatasetManifest,
    ManifestEntry
)
from ..datagen.manifests import Manifests
from ..dsp.dsp import Dsp
from ..dsp.dsp_config import DspConfig
from ..dsp.log_mel_spectrogram import LogMelSpectrogram
from ..exceptions import SessionClosed
from ..toplevel.toplevel import Toplevel
from .session_dataset import (
    LabeledSample,
    SessionDataset
)


class SessionStore:
    """
    Sole gateway to session data during a protocol run.

    Opening session `m` closes the training splits of all earlier sessions:
    any later request for them raises `SessionClosed`, and their cached
    features are dropped. Evaluation splits stay readable. Every request is
    appended to `access_log` as `(session_index, split)`.
    """

    __slots__ = (
        "_manifest",
        "_sessions",
        "_dsp_config",
        "_workers",
        "_current",
        "_train_cache",
        "_eval_cache",
        "_access_log"
    )

    def __init__(
        self: Self,
        manifest: DatasetManifest,
        sessions: Sequence[SessionDataset],
        dsp_config: DspConfig,
        workers: int = 1
    ) -> None:
        super().__init__()
        self._manifest: DatasetManifest = manifest
        self._sessions: tuple[SessionDataset, ...] = tuple(sessions)
        self._dsp_config: DspConfig = dsp_config
        self._workers: int = workers
        self._current: int = -1
        self._train_cache: dict[int, dict[str, LogMelSpectrogram]] = {}
        self._eval_cache: dict[str, LogMelSpectrogram] = {}
        self._access_log: list[tuple[int, str]] = []

    @property
    def current(
        self: Self
    ) -> int:
        return self._current

    @property
    def access_log(
        self: Self
    ) -> tuple[tuple[int, str], ...]:
        return tuple(self._access_log)

    @property
    def n_sessions(
        self: Self
    ) -> int:
        return len(self._sessions)

    def session(
        self: Self,
        session_index: int
    ) -> SessionDataset:
        return self._sessions[session_index]

    def open(
        self: Self,
        session_index: int
    ) -> SessionDataset:
        assert session_index >= self._current and 0 <= session_index < len(self._sessions)
        self._current = session_index
        for closed in [index for index in self._train_cache if index < session_index]:
            del self._train_cache[closed]
        Toplevel.log(f"Session {session_index} opened; earlier training data released")
        return self._sessions[session_index]

    def _extract(
        self: Self,
        entries: Sequence[ManifestEntry]
    ) -> list[LogMelSpectrogram]:
        clips = Manifests.load_clips(self._manifest, entries)
        return Dsp.log_mel_batch(clips, self._dsp_config, self._workers)

    def _features(
        self: Self,
        cache: dict[str, LogMelSpectrogram],
        entries: Sequence[ManifestEntry]
    ) -> list[LabeledSample]:
        if missing := [entry for entry in entries if entry.source not in cache]:
            for entry, spectrogram in zip(missing, self._extract(missing), strict=True):
                cache[entry.source] = spectrogram
        return [LabeledSample(spectrogram=cache[entry.source], class_id=entry.class_id) for entry in entries]

    def train_samples(
        self: Self,
        session_index: int,
        entries: Iterable[ManifestEntry] | None = None
    ) -> list[LabeledSample]:
        """
        Training features of the open session, optionally restricted to `entries`.
        """
        self._access_log.append((session_index, "train"))
        if session_index != self._current:
            raise SessionClosed(session_index, self._current)
        session = self._sessions[session_index]
        selected = session.train if entries is None else tuple(entries)
        assert all(entry in session.train for entry in selected)
        return self._features(self._train_cache.setdefault(session_index, {}), selected)

    def eval_samples(
        self: Self,
        session_index: int
    ) -> list[LabeledSample]:
        self._access_log.append((session_index, "eval"))
        assert session_index <= self._current
        return self._features(self._eval_cache, self._sessions[session_index].eval)
