from __future__ import annotations


import pathlib
from typing import (
    Iterable,
    Never,
    Self
)

import rich.box
import rich.console
import rich.table
import yaml

from ..datagen.manifests import Manifests
from ..dsp.dsp import Dsp
from ..dsp.feature_cache import FeatureCache
from ..dsp.log_mel_spectrogram import LogMelSpectrogram
from ..embedder.checkpoint import Checkpoint
from ..exceptions import (
    ConfigError,
    ExtractionFailed,
    FcacError,
    IoError,
    VerificationFailure
)
from ..protocol.protocol import Protocol
from ..protocol.reports import Reports
from ..protocol.run_report import RunReport
from ..protocol.session_metrics import SessionMetrics
from ..toplevel.config import RunConfig
from ..toplevel.toplevel import Toplevel
from .verify import (
    CheckResult,
    Verifier
)


class Commands:
    """
    One classmethod per subcommand. Each runs inside an entered `RunConfig`
    and raises an `FcacError` on failure; the entry point maps it to an exit code.
    """

    __slots__ = ()

    CHECKPOINT_NAME: str = "checkpoint.fcac"
    FEATURES_NAME: str = "features.fcf"
    TABLE_NAME: str = "report.csv"
    STRUCTURED_NAME: str = "report.yaml"
    SWEEP_NAME: str = "sweep.yaml"

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def _prepare_out_dir(
        cls: type[Self],
        cfg: RunConfig
    ) -> pathlib.Path:
        try:
            cfg.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as error:
            raise IoError(f"Cannot create output directory '{cfg.out_dir}': {error}") from error
        return cfg.out_dir

    @classmethod
    def extract(
        cls: type[Self],
        cfg: RunConfig,
        console: rich.console.Console,
        out_path: pathlib.Path | None = None
    ) -> pathlib.Path:
        """
        Write log-mel features of every manifest clip to a feature cache.

        Clips that fail are skipped and listed; the cache still holds every
        successful clip, and the command fails if any clip did.
        """
        manifest = (
            Manifests.load(cfg.data.manifest, check_files=False)
            if cfg.data.manifest is not None
            else Protocol.load_manifest(cfg)
        )
        spectrograms: list[LogMelSpectrogram] = []
        failures: list[tuple[str, str]] = []
        for index, entry in enumerate(manifest.entries):
            Toplevel.set_status("Clip", f"{index + 1}/{len(manifest.entries)}")
            try:
                clip = Manifests.load_clip(manifest, entry)
                spectrograms.append(Dsp.log_mel_spectrogram(clip, cfg.dsp))
            except FcacError as error:
                failures.append((entry.clip_id, f"{type(error).__name__}: {error}"))
                Toplevel.log(f"Failed {entry.clip_id}: {error}")
        out_path = out_path if out_path is not None else cls._prepare_out_dir(cfg) / cls.FEATURES_NAME
        FeatureCache.write(out_path, spectrograms)
        Toplevel.log(f"Wrote {len(spectrograms)} feature records to {out_path}")
        console.print(f"{len(spectrograms)} records written to {out_path}")
        if failures:
            raise ExtractionFailed(failures)
        return out_path

    @classmethod
    def train_base(
        cls: type[Self],
        cfg: RunConfig,
        console: rich.console.Console,
        checkpoint_path: pathlib.Path | None = None
    ) -> pathlib.Path:
        store = Protocol.open_store(Protocol.load_manifest(cfg), cfg)
        params, state = Protocol.base_stage(store, cfg)
        metrics = Protocol.evaluate_stage(store, 0, params, state, cfg)
        checkpoint_path = checkpoint_path if checkpoint_path is not None else cls._prepare_out_dir(cfg) / cls.CHECKPOINT_NAME
        Checkpoint.save(params, state, checkpoint_path)
        Toplevel.log(f"Checkpoint written to {checkpoint_path}")
        console.print(cls._metrics_table((metrics,)))
        return checkpoint_path

    @classmethod
    def train_incremental(
        cls: type[Self],
        cfg: RunConfig,
        console: rich.console.Console,
        session_index: int,
        checkpoint_path: pathlib.Path | None = None
    ) -> pathlib.Path:
        """
        Train session `session_index` on top of a checkpoint that covers
        exactly the sessions before it, and save the result in place.
        """
        checkpoint_path = checkpoint_path if checkpoint_path is not None else cfg.out_dir / cls.CHECKPOINT_NAME
        params, state = Checkpoint.load(checkpoint_path)
        if state.n_sessions != session_index:
            raise ConfigError(
                f"Checkpoint covers sessions 0..{state.n_sessions - 1}; session {session_index} cannot be trained next"
            )
        store = Protocol.open_store(Protocol.load_manifest(cfg), cfg)
        if not 0 < session_index < store.n_sessions:
            raise ConfigError(f"Session index must lie in 1..{store.n_sessions - 1}, got {session_index}")
        state = Protocol.incremental_stage(store, session_index, params, state, cfg)
        metrics = Protocol.evaluate_stage(store, session_index, params, state, cfg)
        Checkpoint.save(params, state, checkpoint_path)
        console.print(cls._metrics_table((metrics,)))
        return checkpoint_path

    @classmethod
    def evaluate(
        cls: type[Self],
        cfg: RunConfig,
        console: rich.console.Console,
        checkpoint_path: pathlib.Path | None = None
    ) -> SessionMetrics:
        checkpoint_path = checkpoint_path if checkpoint_path is not None else cfg.out_dir / cls.CHECKPOINT_NAME
        params, state = Checkpoint.load(checkpoint_path)
        store = Protocol.open_store(Protocol.load_manifest(cfg), cfg)
        session_index = state.n_sessions - 1
        if not 0 <= session_index < store.n_sessions:
            raise ConfigError(f"Checkpoint covers {state.n_sessions} sessions, the configuration defines {store.n_sessions}")
        store.open(session_index)
        metrics = Protocol.evaluate_stage(store, session_index, params, state, cfg)
        console.print(cls._metrics_table((metrics,)))
        return metrics

    @classmethod
    def run(
        cls: type[Self],
        cfg: RunConfig,
        console: rich.console.Console
    ) -> RunReport:
        out_dir = cls._prepare_out_dir(cfg)
        outcome = Protocol.run(Protocol.load_manifest(cfg), cfg)
        Reports.write_table(outcome.report, out_dir / cls.TABLE_NAME)
        Reports.write_structured(outcome.report, out_dir / cls.STRUCTURED_NAME)
        Checkpoint.save(outcome.params, outcome.state, out_dir / cls.CHECKPOINT_NAME)
        Toplevel.log(f"Reports and checkpoint written to {out_dir}")
        console.print(Reports.render(outcome.report))
        return outcome.report

    @classmethod
    def verify(
        cls: type[Self],
        cfg: RunConfig,
        console: rich.console.Console,
        names: Iterable[str] | None = None
    ) -> list[CheckResult]:
        names = None if names is None else tuple(names)
        if names is not None and (unknown := set(names) - set(Verifier.registry())):
            raise ConfigError(f"Unknown checks: {", ".join(sorted(unknown))}")
        results = Verifier.run(cfg.seed, names)
        table = rich.table.Table("check", "result", "detail", box=rich.box.ASCII)
        for result in results:
            table.add_row(result.name, "pass" if result.passed else "FAIL", result.detail)
        console.print(table)
        if failed := [result.name for result in results if not result.passed]:
            raise VerificationFailure(failed)
        return results

    @classmethod
    def sweep(
        cls: type[Self],
        cfg: RunConfig,
        console: rich.console.Console,
        way_shot_grid: Iterable[tuple[int, int]],
        betas: Iterable[float]
    ) -> pathlib.Path:
        out_dir = cls._prepare_out_dir(cfg)
        points = Protocol.sweep(Protocol.load_manifest(cfg), cfg, way_shot_grid, betas)
        path = out_dir / cls.SWEEP_NAME
        try:
            path.write_text(yaml.safe_dump([point.to_dict() for point in points], sort_keys=True), encoding="utf-8")
        except OSError as error:
            raise IoError(f"Cannot write sweep results '{path}': {error}") from error
        table = rich.table.Table("way", "shot", "beta", "sessions", "final All", "AA All", box=rich.box.ASCII)
        for point in points:
            table.add_row(
                str(point.n_way),
                str(point.n_shot),
                f"{point.beta:g}",
                str(point.n_sessions),
                f"{100.0 * point.final_acc_all:.2f}",
                "-" if point.aa_all is None else f"{100.0 * point.aa_all:.2f}"
            )
        console.print(table)
        return path

    @classmethod
    def _metrics_table(
        cls: type[Self],
        sessions: Iterable[SessionMetrics]
    ) -> rich.table.Table:
        table = rich.table.Table("session", "Base", "Incr.", "All", box=rich.box.ASCII)
        for metrics in sessions:
            table.add_row(
                str(metrics.session_index),
                f"{100.0 * metrics.acc_base:.2f}",
                "-" if metrics.acc_incr is None else f"{100.0 * metrics.acc_incr:.2f}",
                f"{100.0 * metrics.acc_all:.2f}"
            )
        return table
