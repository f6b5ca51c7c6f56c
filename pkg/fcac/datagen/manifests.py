from __future__ import annotations


import pathlib
import re
from typing import (
    Iterable,
    Never,
    Self
)

import attrs
import numpy as np

from ..constants.custom_typing import (
    ClassIdType,
    SeedType
)
from ..dsp.audio_clip import AudioClip
from ..exceptions import (
    IoError,
    MissingFile,
    ParseError,
    SampleRateMismatch
)
from ..toplevel.toplevel import Toplevel
from .dataset_manifest import (
    DatasetManifest,
    ManifestEntry,
    SplitType
)
from .synth import Synth
from .synthetic_dataset import SyntheticDataset
from .wav_reader import WavReader


class Manifests:
    """
    Line-oriented manifest files.

    ```
    fcac-manifest,1,16000[,synthetic.yaml]
    source,class_id,split
    clips/dog_001.wav,0,train
    sig:3/7,3,
    ```

    Blank lines and lines starting with `#` are ignored. `split` is `train`,
    `eval` or empty.
    """

    __slots__ = ()

    HEADER_TAG: str = "fcac-manifest"
    VERSION: int = 1
    COLUMNS: str = "source,class_id,split"
    _SIGNATURE_SOURCE: re.Pattern[str] = re.compile(r"sig:\d+/\d+")

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def parse(
        cls: type[Self],
        text: str,
        root: pathlib.Path = pathlib.Path()
    ) -> DatasetManifest:
        lines = [
            (line_number, line.strip())
            for line_number, line in enumerate(text.splitlines(), start=1)
            if line.strip() and not line.strip().startswith("#")
        ]
        if not lines:
            raise ParseError(1, "empty manifest")
        header_line, header = lines[0]
        fields = header.split(",")
        if fields[0] != cls.HEADER_TAG or len(fields) not in (3, 4):
            raise ParseError(header_line, f"expected '{cls.HEADER_TAG},<version>,<sample_rate>[,<synthetic description>]'")
        try:
            version = int(fields[1])
            sample_rate = int(fields[2])
        except ValueError:
            raise ParseError(header_line, "version and sample rate must be integers") from None
        if version != cls.VERSION:
            raise ParseError(header_line, f"unsupported manifest version {version}")
        if sample_rate <= 0:
            raise ParseError(header_line, f"sample rate must be positive, got {sample_rate}")
        synthetic_path = fields[3] if len(fields) == 4 and fields[3] else None
        if len(lines) < 2 or lines[1][1].replace(" ", "") not in (cls.COLUMNS, "source,class_id"):
            raise ParseError(lines[1][0] if len(lines) > 1 else header_line, f"expected column header '{cls.COLUMNS}'")

        raw_entries: list[tuple[str, ClassIdType, SplitType | None]] = []
        for line_number, line in lines[2:]:
            columns = [column.strip() for column in line.split(",")]
            if len(columns) not in (2, 3):
                raise ParseError(line_number, f"expected 2 or 3 columns, got {len(columns)}")
            source, class_text, *rest = columns
            split = rest[0] if rest else ""
            if not source:
                raise ParseError(line_number, "empty source")
            if source.startswith("sig:") and not cls._SIGNATURE_SOURCE.fullmatch(source):
                raise ParseError(line_number, f"malformed synthetic source '{source}'")
            if source.startswith("sig:") and synthetic_path is None:
                raise ParseError(line_number, "synthetic source without a synthetic description in the header")
            try:
                class_id = int(class_text)
            except ValueError:
                raise ParseError(line_number, f"class id '{class_text}' is not an integer") from None
            if class_id < 0:
                raise ParseError(line_number, f"class id must be nonnegative, got {class_id}")
            if split not in ("", "train", "eval"):
                raise ParseError(line_number, f"split must be 'train', 'eval' or empty, got '{split}'")
            raw_entries.append((source, class_id, split or None))
        if not raw_entries:
            raise ParseError(lines[-1][0], "manifest has no entries")

        # Sparse class ids are remapped onto 0..n-1 in ascending order.
        original_ids = sorted({class_id for _, class_id, _ in raw_entries})
        remap = {original: contiguous for contiguous, original in enumerate(original_ids)}
        class_mapping = {
            contiguous: original
            for original, contiguous in remap.items()
            if original != contiguous
        }
        if class_mapping:
            Toplevel.log(f"Remapped sparse class ids: {class_mapping}")
        synthetic = SyntheticDataset.read(root / synthetic_path) if synthetic_path is not None else None
        return DatasetManifest(
            entries=[
                ManifestEntry(source=source, class_id=remap[class_id], split=split)
                for source, class_id, split in raw_entries
            ],
            sample_rate=sample_rate,
            version=version,
            class_mapping=class_mapping,
            synthetic=synthetic,
            synthetic_path=synthetic_path,
            root=root
        )

    @classmethod
    def missing_sources(
        cls: type[Self],
        manifest: DatasetManifest
    ) -> list[str]:
        return [
            entry.source
            for entry in manifest.entries
            if not entry.is_synthetic and not (manifest.root / entry.source).is_file()
        ]

    @classmethod
    def load(
        cls: type[Self],
        path: pathlib.Path,
        check_files: bool = True
    ) -> DatasetManifest:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise IoError(f"Cannot read manifest '{path}': {error}") from error
        manifest = cls.parse(text, path.parent)
        if check_files and (missing := cls.missing_sources(manifest)):
            raise MissingFile(missing)
        return manifest

    @classmethod
    def dump(
        cls: type[Self],
        manifest: DatasetManifest
    ) -> str:
        # Original class ids are restored when a mapping was recorded.
        header = [cls.HEADER_TAG, str(manifest.version), str(manifest.sample_rate)]
        if manifest.synthetic_path is not None:
            header.append(manifest.synthetic_path)
        lines = [",".join(header), cls.COLUMNS]
        lines.extend(
            f"{entry.source},{manifest.class_mapping.get(entry.class_id, entry.class_id)},{entry.split or ""}"
            for entry in manifest.entries
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def write(
        cls: type[Self],
        path: pathlib.Path,
        manifest: DatasetManifest
    ) -> None:
        try:
            path.write_text(cls.dump(manifest), encoding="utf-8")
        except OSError as error:
            raise IoError(f"Cannot write manifest '{path}': {error}") from error

    @classmethod
    def assign_splits(
        cls: type[Self],
        manifest: DatasetManifest,
        seed: SeedType,
        eval_fraction: float = 0.2
    ) -> DatasetManifest:
        """
        Fill empty split hints per class with a seeded train/eval assignment.

        Every class keeps at least one training entry; classes with two or more
        unassigned entries also get at least one evaluation entry.
        """
        rng = np.random.Generator(np.random.PCG64(seed))
        splits: dict[int, SplitType] = {}
        for class_id in range(manifest.n_classes):
            unassigned = [
                index for index, entry in enumerate(manifest.entries)
                if entry.class_id == class_id and entry.split is None
            ]
            if not unassigned:
                continue
            order = rng.permutation(len(unassigned))
            n_eval = min(max(round(eval_fraction * len(unassigned)), 1), len(unassigned) - 1)
            for rank, position in enumerate(order):
                splits[unassigned[position]] = "eval" if rank < n_eval else "train"
        return attrs.evolve(manifest, entries=[
            attrs.evolve(entry, split=splits[index]) if index in splits else entry
            for index, entry in enumerate(manifest.entries)
        ])

    @classmethod
    def load_clip(
        cls: type[Self],
        manifest: DatasetManifest,
        entry: ManifestEntry
    ) -> AudioClip:
        if entry.is_synthetic:
            assert manifest.synthetic is not None
            clip = Synth.render_source(entry.source, manifest.synthetic)
        else:
            clip = WavReader.read(manifest.root / entry.source, clip_id=entry.clip_id)
        if clip.sample_rate != manifest.sample_rate:
            raise SampleRateMismatch(
                f"Clip '{entry.source}' has sample rate {clip.sample_rate}, manifest declares {manifest.sample_rate}"
            )
        return attrs.evolve(clip, label=entry.class_id)

    @classmethod
    def load_clips(
        cls: type[Self],
        manifest: DatasetManifest,
        entries: Iterable[ManifestEntry]
    ) -> list[AudioClip]:
        return [cls.load_clip(manifest, entry) for entry in entries]
