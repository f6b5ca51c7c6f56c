from __future__ import annotations


from typing import (
    Iterator,
    Never,
    Self
)

import numpy as np

from ..constants.custom_typing import (
    NP_xi8,
    SeedType
)
from ..datagen.dataset_manifest import (
    DatasetManifest,
    ManifestEntry
)
from ..datagen.manifests import Manifests
from ..exceptions import (
    EmptyEvalSet,
    InsufficientClasses,
    InsufficientShots
)
from .protocol_config import ProtocolConfig
from .session_dataset import SessionDataset


class Sampling:
    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def rng(
        cls: type[Self],
        seed: SeedType,
        *keys: int
    ) -> np.random.Generator:
        # Independent, reproducible streams per (seed, purpose, ...) key.
        seed_words = (seed,) if isinstance(seed, int) else tuple(seed)
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence((*seed_words, *keys))))

    @classmethod
    def split_dataset(
        cls: type[Self],
        manifest: DatasetManifest,
        cfg: ProtocolConfig,
        seed: SeedType
    ) -> list[SessionDataset]:
        """
        Assign classes to sessions: a seeded shuffle puts the first
        `n_base_classes` in session 0 and `n_way` classes in each later session.
        """
        if any(entry.split is None for entry in manifest.entries):
            manifest = Manifests.assign_splits(manifest, seed, cfg.eval_fraction)
        n_classes = manifest.n_classes
        if n_classes < cfg.n_classes_required:
            raise InsufficientClasses(
                f"{cfg.n_base_classes} base + {cfg.n_sessions} x {cfg.n_way}-way sessions need "
                f"{cfg.n_classes_required} classes, manifest has {n_classes}"
            )
        order = [int(class_id) for class_id in cls.rng(seed, 1).permutation(n_classes)]
        session_classes = [order[:cfg.n_base_classes]]
        for m in range(cfg.n_sessions):
            start = cfg.n_base_classes + m * cfg.n_way
            session_classes.append(order[start:start + cfg.n_way])

        sessions: list[SessionDataset] = []
        for session_index, class_ids in enumerate(session_classes):
            required_shots = 2 if session_index == 0 else cfg.n_shot
            for class_id in sorted(class_ids):
                available = len(manifest.entries_of(class_id, "train"))
                if available < required_shots:
                    raise InsufficientShots(class_id, available, required_shots)
                if not manifest.entries_of(class_id, "eval"):
                    raise EmptyEvalSet(f"Class {class_id} has no evaluation clips")
            members = set(class_ids)
            sessions.append(SessionDataset(
                session_index=session_index,
                class_ids=class_ids,
                train=[entry for entry in manifest.entries if entry.class_id in members and entry.split == "train"],
                eval=[entry for entry in manifest.entries if entry.class_id in members and entry.split == "eval"]
            ))
        return sessions

    @classmethod
    def sample_episode(
        cls: type[Self],
        session: SessionDataset,
        n_way: int,
        n_shot: int,
        seed: SeedType
    ) -> tuple[ManifestEntry, ...]:
        """
        `n_shot` distinct training entries from each of `n_way` session classes.
        """
        if len(session.class_ids) < n_way:
            raise InsufficientShots(-1, len(session.class_ids), n_way)
        rng = cls.rng(seed, 2, session.session_index)
        chosen = sorted(int(class_id) for class_id in rng.choice(session.class_ids, size=n_way, replace=False))
        support: list[ManifestEntry] = []
        for class_id in chosen:
            candidates = session.train_of(class_id)
            if len(candidates) < n_shot:
                raise InsufficientShots(class_id, len(candidates), n_shot)
            picked = np.sort(rng.choice(len(candidates), size=n_shot, replace=False))
            support.extend(candidates[index] for index in picked)
        return tuple(support)

    @classmethod
    def balanced_batches(
        cls: type[Self],
        labels: NP_xi8,
        batch_size: int,
        rng: np.random.Generator
    ) -> Iterator[NP_xi8]:
        """
        One epoch of class-balanced index batches.

        Each batch draws `k = batch_size // n_present` samples from each of
        `n_present = min(n_classes, batch_size // 2)` classes, so every present
        class appears at least twice. Classes with fewer than `k` samples are
        drawn with replacement; classes rotate so all are visited per epoch.
        """
        labels = np.asarray(labels, dtype=np.int64)
        class_ids = np.unique(labels)
        members = {int(class_id): np.flatnonzero(labels == class_id) for class_id in class_ids}
        n_present = min(len(class_ids), batch_size // 2)
        per_class = batch_size // n_present
        n_batches = max(1, int(np.ceil(len(labels) / (n_present * per_class))))
        class_order = rng.permutation(class_ids)
        cursor = 0
        for _ in range(n_batches):
            if cursor + n_present > len(class_order):
                class_order = np.concatenate((class_order[cursor:], rng.permutation(class_ids)))
                cursor = 0
            present = class_order[cursor:cursor + n_present]
            cursor += n_present
            batch = [
                rng.choice(
                    members[int(class_id)],
                    size=per_class,
                    replace=len(members[int(class_id)]) < per_class
                )
                for class_id in present
            ]
            yield np.concatenate(batch)
