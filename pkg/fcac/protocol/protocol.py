from __future__ import annotations


from typing import (
    TYPE_CHECKING,
    Iterable,
    Never,
    Self
)

import attrs
import numpy as np

from ..classifier.stochastic_classifier import StochasticClassifier
from ..classifier.stochastic_classifier_state import StochasticClassifierState
from ..datagen.dataset_manifest import DatasetManifest
from ..datagen.manifests import Manifests
from ..datagen.synth import Synth
from ..embedder.embedder import Embedder
from ..embedder.embedder_params import EmbedderParams
from ..exceptions import DegenerateInput
from ..toplevel.toplevel import Toplevel
from .metrics import Metrics
from .run_report import RunReport
from .sampling import Sampling
from .session_dataset import stack_labels
from .session_metrics import SessionMetrics
from .session_store import SessionStore
from .trainer import Trainer

if TYPE_CHECKING:
    from ..toplevel.config import RunConfig


@attrs.frozen(kw_only=True, eq=False)
class ProtocolOutcome:
    report: RunReport
    params: EmbedderParams
    state: StochasticClassifierState


@attrs.frozen(kw_only=True)
class SweepPoint:
    n_way: int
    n_shot: int
    beta: float
    n_sessions: int
    final_acc_all: float
    aa_all: float | None
    clustering_ratio: float | None

    def to_dict(
        self: Self
    ) -> dict[str, object]:
        return attrs.asdict(self)


class Protocol:
    """
    The class-incremental lifecycle.

    Session 0 trains and freezes the backbone. Each later session samples an
    `n_way`-way `n_shot`-shot support set, extends and retrains the
    classifier, and evaluates on every class seen so far. Training data of a
    session is released when the next one opens; only the classifier means
    are carried forward as prototypes.
    """

    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def load_manifest(
        cls: type[Self],
        cfg: RunConfig
    ) -> DatasetManifest:
        if cfg.data.manifest is not None:
            return Manifests.load(cfg.data.manifest)
        return Synth.build_manifest(cfg.data.synthetic)

    @classmethod
    def open_store(
        cls: type[Self],
        manifest: DatasetManifest,
        cfg: RunConfig
    ) -> SessionStore:
        sessions = Sampling.split_dataset(manifest, cfg.protocol, cfg.seed)
        Toplevel.log(f"Session sizes: {[len(session.class_ids) for session in sessions]}")
        return SessionStore(manifest, sessions, cfg.dsp, cfg.workers)

    @classmethod
    def base_stage(
        cls: type[Self],
        store: SessionStore,
        cfg: RunConfig
    ) -> tuple[EmbedderParams, StochasticClassifierState]:
        store.open(0)
        return Trainer.train_base(store.train_samples(0), cfg.embedder, cfg.protocol, cfg.workers)

    @classmethod
    def base_clustering_ratio(
        cls: type[Self],
        store: SessionStore,
        params: EmbedderParams,
        cfg: RunConfig
    ) -> float | None:
        # Measured on base-session evaluation clips; `None` when too few clips per class.
        samples = store.eval_samples(0)
        embeddings = Embedder.embed_batch((sample.spectrogram for sample in samples), params, cfg.workers)
        try:
            return Metrics.clustering_ratio(embeddings, stack_labels(samples))
        except DegenerateInput as error:
            Toplevel.log(f"Clustering ratio unavailable: {error}")
            return None

    @classmethod
    def incremental_stage(
        cls: type[Self],
        store: SessionStore,
        session_index: int,
        params: EmbedderParams,
        state: StochasticClassifierState,
        cfg: RunConfig
    ) -> StochasticClassifierState:
        prototypes = StochasticClassifier.mean_prototypes(state)
        session = store.open(session_index)
        episode = Sampling.sample_episode(session, cfg.protocol.n_way, cfg.protocol.n_shot, cfg.seed)
        support = store.train_samples(session_index, episode)
        return Trainer.train_incremental(
            session_index,
            support,
            params,
            state,
            prototypes,
            cfg.protocol,
            cfg.workers
        )

    @classmethod
    def evaluate_stage(
        cls: type[Self],
        store: SessionStore,
        session_index: int,
        params: EmbedderParams,
        state: StochasticClassifierState,
        cfg: RunConfig
    ) -> SessionMetrics:
        metrics = Metrics.evaluate(
            session_index,
            params,
            state,
            [store.eval_samples(index) for index in range(session_index + 1)],
            cfg.workers
        )
        incr = "-" if metrics.acc_incr is None else f"{metrics.acc_incr:.4f}"
        Toplevel.log(
            f"Session {session_index}: base {metrics.acc_base:.4f}, incr {incr}, all {metrics.acc_all:.4f}"
        )
        return metrics

    @classmethod
    def run(
        cls: type[Self],
        manifest: DatasetManifest,
        cfg: RunConfig
    ) -> ProtocolOutcome:
        store = cls.open_store(manifest, cfg)
        params, state = cls.base_stage(store, cfg)
        frozen_tensors = {name: value.copy() for name, value in params.tensors.items()}
        clustering_ratio = cls.base_clustering_ratio(store, params, cfg)
        sessions = [cls.evaluate_stage(store, 0, params, state, cfg)]
        for session_index in range(1, store.n_sessions):
            Toplevel.set_status("Session", f"{session_index}/{store.n_sessions - 1}")
            state = cls.incremental_stage(store, session_index, params, state, cfg)
            assert state.n_classes == cfg.protocol.n_base_classes + session_index * cfg.protocol.n_way
            sessions.append(cls.evaluate_stage(store, session_index, params, state, cfg))
        assert all(np.array_equal(frozen_tensors[name], value) for name, value in params.tensors.items())
        report = RunReport(
            sessions=sessions,
            config_digest=cfg.digest,
            seed=cfg.seed,
            clustering_ratio=clustering_ratio,
            config=cfg.result_dict()
        )
        return ProtocolOutcome(report=report, params=params, state=state)

    @classmethod
    def run_protocol(
        cls: type[Self],
        manifest: DatasetManifest,
        cfg: RunConfig
    ) -> RunReport:
        return cls.run(manifest, cfg).report

    @classmethod
    def sweep(
        cls: type[Self],
        manifest: DatasetManifest,
        cfg: RunConfig,
        way_shot_grid: Iterable[tuple[int, int]] = (),
        betas: Iterable[float] = ()
    ) -> list[SweepPoint]:
        """
        Repeated protocol runs over an `(n_way, n_shot)` grid and over
        contrastive weights `beta`.

        Each grid point runs as many sessions as the novel classes allow, up
        to the configured count.
        """
        runs: list[RunConfig] = []
        n_novel = manifest.n_classes - cfg.protocol.n_base_classes
        for n_way, n_shot in way_shot_grid:
            n_sessions = min(cfg.protocol.n_sessions, n_novel // n_way)
            runs.append(attrs.evolve(cfg, protocol=attrs.evolve(
                cfg.protocol,
                n_way=n_way,
                n_shot=n_shot,
                n_sessions=n_sessions
            )))
        for beta in betas:
            runs.append(attrs.evolve(cfg, protocol=attrs.evolve(
                cfg.protocol,
                loss=attrs.evolve(cfg.protocol.loss, beta=beta)
            )))

        points: list[SweepPoint] = []
        for run_cfg in runs:
            protocol_cfg = run_cfg.protocol
            Toplevel.log(
                f"Sweep point: {protocol_cfg.n_way}-way {protocol_cfg.n_shot}-shot, beta {protocol_cfg.loss.beta}"
            )
            report = cls.run_protocol(manifest, run_cfg)
            summary = report.summary
            points.append(SweepPoint(
                n_way=protocol_cfg.n_way,
                n_shot=protocol_cfg.n_shot,
                beta=protocol_cfg.loss.beta,
                n_sessions=protocol_cfg.n_sessions,
                final_acc_all=report.sessions[-1].acc_all,
                aa_all=summary["all"][0] if summary else None,
                clustering_ratio=report.clustering_ratio
            ))
        return points
