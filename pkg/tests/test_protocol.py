from __future__ import annotations


import collections
import pathlib
import statistics

import attrs
import numpy as np
import pytest
import yaml

from fcac.classifier.prototype import Prototype
from fcac.classifier.stochastic_classifier import StochasticClassifier
from fcac.datagen.synth import Synth
from fcac.datagen.synthetic_dataset import SyntheticDataset
from fcac.diffmath.optimizer import (
    Optimizer,
    OptimizerConfig
)
from fcac.diffmath.tensor import Tensor
from fcac.dsp.dsp_config import DspConfig
from fcac.dsp.log_mel_spectrogram import LogMelSpectrogram
from fcac.embedder.embedder import Embedder
from fcac.embedder.embedder_config import EmbedderConfig
from fcac.exceptions import (
    DegenerateInput,
    InsufficientClasses,
    InsufficientShots,
    SessionClosed,
    TooFewSessions
)
from fcac.losses.loss_config import LossConfig
from fcac.losses.losses import Losses
from fcac.protocol.metrics import Metrics
from fcac.protocol.protocol import Protocol
from fcac.protocol.protocol_config import ProtocolConfig
from fcac.protocol.reference_tables import ReferenceTables
from fcac.protocol.reports import Reports
from fcac.protocol.run_report import RunReport
from fcac.protocol.sampling import Sampling
from fcac.protocol.session_dataset import (
    LabeledSample,
    stack_labels
)
from fcac.protocol.session_metrics import SessionMetrics
from fcac.protocol.session_store import SessionStore
from fcac.protocol.trainer import Trainer
from fcac.toplevel.config import RunConfig


LS_PROTOCOL = ProtocolConfig(n_base_classes=60, n_sessions=8, n_way=5, n_shot=5)
TINY_PROTOCOL = ProtocolConfig(n_base_classes=3, n_sessions=2, n_way=2, n_shot=2, batch_size=6)


def test_split_sizes_and_disjoint_sessions() -> None:
    manifest = Synth.build_manifest(SyntheticDataset(n_classes=100))
    sessions = Sampling.split_dataset(manifest, LS_PROTOCOL, seed=3)
    assert [len(session.class_ids) for session in sessions] == [60] + [5] * 8
    seen: set[int] = set()
    for session in sessions:
        assert seen.isdisjoint(session.class_ids)
        seen.update(session.class_ids)
        assert {entry.class_id for entry in session.train} == set(session.class_ids)
    assert seen == set(range(100))
    again = Sampling.split_dataset(manifest, LS_PROTOCOL, seed=3)
    assert [session.class_ids for session in again] == [session.class_ids for session in sessions]


def test_split_needs_enough_classes_and_shots() -> None:
    manifest = Synth.build_manifest(SyntheticDataset(n_classes=10))
    with pytest.raises(InsufficientClasses):
        Sampling.split_dataset(manifest, ProtocolConfig(n_base_classes=6, n_sessions=3, n_way=2), seed=0)
    few_shots = Synth.build_manifest(SyntheticDataset(n_classes=10, train_clips_per_class=3))
    with pytest.raises(InsufficientShots) as info:
        Sampling.split_dataset(few_shots, ProtocolConfig(n_base_classes=6, n_sessions=2, n_way=2, n_shot=5), seed=0)
    assert info.value.required == 5


def test_sample_episode_is_a_deterministic_way_shot_set() -> None:
    manifest = Synth.build_manifest(SyntheticDataset(n_classes=100))
    session = Sampling.split_dataset(manifest, LS_PROTOCOL, seed=1)[1]
    episode = Sampling.sample_episode(session, 5, 5, seed=1)
    assert len(episode) == 25
    assert len(set(episode)) == 25
    assert all(entry.split == "train" for entry in episode)
    assert set(collections.Counter(entry.class_id for entry in episode).values()) == {5}
    assert Sampling.sample_episode(session, 5, 5, seed=1) == episode


def test_balanced_batches_hold_pairs_and_visit_every_class(
    rng: np.random.Generator
) -> None:
    labels = np.repeat(np.arange(10), 3)
    batches = list(Sampling.balanced_batches(labels, 8, rng))
    assert len(batches) == 4
    for batch in batches:
        assert len(batch) == 8
        assert min(collections.Counter(labels[batch].tolist()).values()) >= 2
    assert set(np.concatenate([labels[batch] for batch in batches]).tolist()) == set(range(10))


def test_session_store_closes_earlier_training_splits(
    tiny_dataset: SyntheticDataset
) -> None:
    manifest = Synth.build_manifest(tiny_dataset)
    sessions = Sampling.split_dataset(manifest, TINY_PROTOCOL, seed=0)
    store = SessionStore(manifest, sessions, DspConfig(n_mels=8))
    store.open(0)
    samples = store.train_samples(0)
    assert len(samples) == 9
    assert samples[0].spectrogram.values.shape == (8, 8)
    session = store.open(1)
    with pytest.raises(SessionClosed):
        store.train_samples(0)
    episode = Sampling.sample_episode(session, 2, 2, seed=0)
    assert len(store.train_samples(1, episode)) == 4
    assert len(store.eval_samples(0)) == 6
    assert store.access_log == ((0, "train"), (0, "train"), (1, "train"), (0, "eval"))


def test_session_metrics_pool_all_clips() -> None:
    metrics = SessionMetrics(session_index=1, n_base=10, correct_base=9, n_incr=4, correct_incr=1)
    assert metrics.acc_base == pytest.approx(0.9)
    assert metrics.acc_incr == pytest.approx(0.25)
    assert metrics.acc_all == pytest.approx(10 / 14)
    assert SessionMetrics(session_index=0, n_base=4, correct_base=4).acc_incr is None


def test_evaluate_embeddings_splits_base_and_incremental_counts() -> None:
    state = StochasticClassifier.expand(
        StochasticClassifier.empty(2),
        [Prototype(class_id=0, vector=[1.0, 0.0]), Prototype(class_id=1, vector=[0.0, 1.0])],
        0.1
    )
    state = StochasticClassifier.expand(state, [Prototype(class_id=2, vector=[-1.0, 0.0])], 0.1)
    metrics = Metrics.evaluate_embeddings(
        1,
        [np.array([[1.0, 0.1], [0.1, 1.0], [-1.0, 0.2]]), np.array([[-1.0, 0.0], [1.0, 0.0]])],
        [np.array([0, 1, 1]), np.array([2, 2])],
        state
    )
    assert (metrics.n_base, metrics.correct_base) == (3, 2)
    assert (metrics.n_incr, metrics.correct_incr) == (2, 1)
    assert metrics.acc_all == pytest.approx(0.6)


def test_aa_pd_of_published_rows() -> None:
    aa, pd = Metrics.aa_pd([1.0, 0.994, 0.9888, 0.969, 0.9633, 0.9555, 0.935, 0.9247, 0.9288, 0.9173])
    assert aa == pytest.approx(0.95764)
    assert pd == pytest.approx(0.0827)
    aa, pd = ReferenceTables.row("nsynth-100", "fcac", "incr").computed()
    assert aa == pytest.approx(88.928, abs=1e-3)
    assert pd == pytest.approx(11.58)
    with pytest.raises(TooFewSessions):
        Metrics.aa_pd([0.9])


def test_reference_tables_reproduce_except_known_errata() -> None:
    assert len(ReferenceTables.rows()) == 36
    assert ReferenceTables.failures() == []
    mismatched = {check.name for check in ReferenceTables.check_cells() if not check.passed}
    assert mismatched == {"nsynth-100/SC/base/AA", "ls-100/fcac/all/PD"}
    assert ReferenceTables.row("ls-100", "fcac", "all").computed()[1] == pytest.approx(4.19)


def test_clustering_ratio() -> None:
    labels = np.array([0, 0, 1, 1])
    points = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    assert Metrics.clustering_ratio(points, labels) == 0.0
    spread = np.array([[0.0, 0.0], [0.0, 2.0], [4.0, 0.0], [4.0, 2.0]])
    assert Metrics.clustering_ratio(spread, labels) == pytest.approx(0.25)
    with pytest.raises(DegenerateInput):
        Metrics.clustering_ratio(spread, np.zeros(4, dtype=np.int64))
    with pytest.raises(DegenerateInput):
        Metrics.clustering_ratio(spread[:3], labels[:3])
    with pytest.raises(DegenerateInput):
        Metrics.clustering_ratio(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]), labels)


def _spectrograms(
    rng: np.random.Generator,
    count: int
) -> list[LogMelSpectrogram]:
    return [
        LogMelSpectrogram(values=rng.normal(-4.0, 1.0, (12, 8)), clip_id=f"s{index}")
        for index in range(count)
    ]


def test_contrastive_only_joint_step_matches_contrastive_step(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator
) -> None:
    backbone = dict(Embedder.initialize(tiny_embedder_config, 3).tensors)
    inputs = Embedder.stack_inputs(_spectrograms(rng, 6), tiny_embedder_config)
    columns = np.array([0, 0, 1, 1, 2, 2])
    loss_cfg = LossConfig(lambda_=0.0, beta=1.0)
    opt_cfg = OptimizerConfig(learning_rate=0.05)
    joint_values = {
        **backbone,
        Trainer.BASE_WEIGHTS: rng.standard_normal((tiny_embedder_config.embedding_dim, 3))
    }
    joint_params, _, joint_loss = Trainer.step(
        Trainer.joint_graph(joint_values, inputs, columns, loss_cfg, tiny_embedder_config),
        joint_values,
        Optimizer.initial_state(joint_values, opt_cfg),
        opt_cfg,
        "base/joint"
    )
    contrastive_params, _, contrastive_loss = Trainer.step(
        Trainer.contrastive_graph(backbone, inputs, columns, loss_cfg, tiny_embedder_config),
        backbone,
        Optimizer.initial_state(backbone, opt_cfg),
        opt_cfg,
        "base/contrastive"
    )
    assert joint_loss == pytest.approx(contrastive_loss, rel=1e-12)
    assert any(not np.array_equal(value, backbone[name]) for name, value in contrastive_params.items())
    for name, value in contrastive_params.items():
        np.testing.assert_allclose(joint_params[name], value, rtol=1e-12, atol=1e-15)
    np.testing.assert_array_equal(joint_params[Trainer.BASE_WEIGHTS], joint_values[Trainer.BASE_WEIGHTS])


def test_incremental_start_loss_is_the_prototype_loss_when_alpha_is_one(
    tiny_embedder_config: EmbedderConfig,
    rng: np.random.Generator,
    monkeypatch: pytest.MonkeyPatch
) -> None:
    params = Embedder.freeze(Embedder.initialize(tiny_embedder_config, 5))
    old_prototypes = {
        class_id: Prototype(class_id=class_id, vector=rng.standard_normal(tiny_embedder_config.embedding_dim))
        for class_id in range(3)
    }
    base_state = StochasticClassifier.expand(
        StochasticClassifier.empty(tiny_embedder_config.embedding_dim),
        old_prototypes.values(),
        0.0
    )
    support = [
        LabeledSample(spectrogram=spectrogram, class_id=class_id)
        for spectrogram, class_id in zip(_spectrograms(rng, 4), (3, 3, 4, 4), strict=True)
    ]
    cfg = ProtocolConfig(
        n_base_classes=3,
        n_sessions=1,
        n_way=2,
        n_shot=2,
        incremental_epochs=1,
        batch_size=4,
        stochastic=False,
        loss=LossConfig(alpha=1.0)
    )
    losses: list[float] = []
    step = Trainer.step

    def recording_step(
        *args: object
    ) -> tuple:
        result = step(*args)
        losses.append(result[2])
        return result

    monkeypatch.setattr(Trainer, "step", recording_step)
    Trainer.train_incremental(1, support, params, base_state, old_prototypes, cfg)

    embeddings = Embedder.embed_batch((sample.spectrogram for sample in support), params)
    new_prototypes = StochasticClassifier.class_prototypes(embeddings, stack_labels(support))
    start_state = StochasticClassifier.expand(base_state, new_prototypes.values(), 0.0)
    anchors = {
        class_id: prototype.vector
        for class_id, prototype in (*old_prototypes.items(), *new_prototypes.items())
    }
    expected = Losses.prototype_loss(
        anchors,
        start_state.class_ids,
        base_state.class_ids,
        Tensor(start_state.mu),
        cfg.loss.scale,
        cfg.loss.prototype_denominator
    ).item()
    assert len(losses) == 1
    assert losses[0] == pytest.approx(expected, rel=1e-9)


def _two_session_report() -> RunReport:
    return RunReport(
        sessions=[
            SessionMetrics(session_index=0, n_base=4, correct_base=3),
            SessionMetrics(session_index=1, n_base=4, correct_base=2, n_incr=2, correct_incr=1)
        ],
        config_digest="0123456789abcdef",
        seed=0,
        clustering_ratio=0.5
    )


def test_table_rows_follow_the_published_layout() -> None:
    assert Reports.table_rows(_two_session_report()) == [
        ["method", "row", "session_0", "session_1", "AA", "PD"],
        ["fcac", "Base", "75.00", "50.00", "62.50", "25.00"],
        ["fcac", "Incr.", "-", "50.00", "50.00", "0.00"],
        ["fcac", "All", "75.00", "50.00", "62.50", "25.00"]
    ]
    single = RunReport(
        sessions=[SessionMetrics(session_index=0, n_base=2, correct_base=1)],
        config_digest="0123456789abcdef",
        seed=0
    )
    assert single.summary == {}
    assert Reports.table_rows(single)[1] == ["fcac", "Base", "50.00", "-", "-"]


def test_report_files(
    tmp_path: pathlib.Path
) -> None:
    report = _two_session_report()
    Reports.write_table(report, tmp_path / "out" / "report.csv")
    Reports.write_structured(report, tmp_path / "out" / "report.yaml")
    table = (tmp_path / "out" / "report.csv").read_text(encoding="utf-8")
    assert "fcac,Base,75.00,50.00,62.50,25.00" in table
    assert "1,4,2,2,1,6,3" in table
    structured = yaml.safe_load((tmp_path / "out" / "report.yaml").read_text(encoding="utf-8"))
    assert structured["summary"]["all"]["AA"] == pytest.approx(0.625)
    assert structured["sessions"][1]["acc_incr"] == pytest.approx(0.5)
    assert structured["config_digest"] == "0123456789abcdef"


@pytest.mark.slow
def test_protocol_run_is_reproducible(
    tiny_run_config: RunConfig
) -> None:
    manifest = Protocol.load_manifest(tiny_run_config)
    first = Protocol.run(manifest, tiny_run_config)
    second = Protocol.run(manifest, tiny_run_config)
    assert first.report.to_dict() == second.report.to_dict()
    np.testing.assert_array_equal(first.state.mu, second.state.mu)
    assert len(first.report.sessions) == 3
    assert first.state.n_classes == 7
    assert first.state.session_boundaries == (0, 3, 5)
    assert first.params.frozen
    assert set(first.report.summary) == {"all", "base", "incr"}
    assert first.report.config_digest == tiny_run_config.digest


@pytest.mark.slow
def test_zero_sigma_matches_deterministic_classifier(
    tiny_run_config: RunConfig
) -> None:
    manifest = Protocol.load_manifest(tiny_run_config)
    zero_sigma = attrs.evolve(tiny_run_config, protocol=attrs.evolve(tiny_run_config.protocol, sigma_init=0.0))
    deterministic = attrs.evolve(tiny_run_config, protocol=attrs.evolve(tiny_run_config.protocol, stochastic=False))
    first = Protocol.run(manifest, zero_sigma)
    second = Protocol.run(manifest, deterministic)
    np.testing.assert_array_equal(first.state.mu, second.state.mu)
    assert not first.state.sigma.any()
    assert not second.state.sigma.any()
    assert [metrics.to_dict() for metrics in first.report.sessions] == [
        metrics.to_dict() for metrics in second.report.sessions
    ]


@pytest.mark.slow
def test_sweep_over_grid_and_betas(
    tiny_run_config: RunConfig
) -> None:
    points = Protocol.sweep(
        Protocol.load_manifest(tiny_run_config),
        tiny_run_config,
        way_shot_grid=[(2, 1)],
        betas=[0.5]
    )
    assert [(point.n_way, point.n_shot, point.beta) for point in points] == [(2, 1, 1.0), (2, 2, 0.5)]
    assert all(point.n_sessions == 2 for point in points)
    assert all(0.0 <= point.final_acc_all <= 1.0 for point in points)


def _desk_config(
    out_dir: pathlib.Path,
    seed: int,
    overrides: dict[str, object] | None = None
) -> RunConfig:
    merged = RunConfig.merge(
        {
            "protocol": {"seed": seed},
            "data": {"synthetic": {"seed": seed}},
            "out_dir": (out_dir / f"seed{seed}").as_posix()
        },
        overrides or {}
    )
    return RunConfig.load(preset="desk", environ={}, overrides=merged, live_log=False)


@pytest.mark.slow
def test_desk_runs_keep_accuracy_through_the_last_session(
    tmp_path: pathlib.Path
) -> None:
    passing = 0
    for seed in range(5):
        cfg = _desk_config(tmp_path, seed)
        sessions = Protocol.run_protocol(Protocol.load_manifest(cfg), cfg).sessions
        final = sessions[-1]
        if final.acc_all >= 0.90 and sessions[0].acc_base - final.acc_base < 0.05:
            passing += 1
    assert passing >= 4


@pytest.mark.slow
def test_contrastive_term_tightens_base_clusters(
    tmp_path: pathlib.Path
) -> None:
    ratios: dict[float, list[float]] = {1.0: [], 0.0: []}
    for seed in range(10):
        for beta, values in ratios.items():
            cfg = _desk_config(tmp_path, seed, {
                "protocol": {"classifier_epochs": 1},
                "loss": {"lambda_": 0.2, "beta": beta}
            })
            store = Protocol.open_store(Protocol.load_manifest(cfg), cfg)
            params, _ = Protocol.base_stage(store, cfg)
            ratio = Protocol.base_clustering_ratio(store, params, cfg)
            assert ratio is not None
            values.append(ratio)
    assert statistics.median(ratios[1.0]) < statistics.median(ratios[0.0])


@pytest.mark.slow
def test_separable_corpus_base_and_incremental_accuracy(
    tmp_path: pathlib.Path
) -> None:
    base_accuracies: list[float] = []
    incremental_accuracies: list[float] = []
    base_drops: list[float] = []
    for seed in range(5):
        cfg = _desk_config(tmp_path, seed, {
            "protocol": {"n_base_classes": 4, "n_sessions": 1},
            "data": {"synthetic": {"n_classes": 6}}
        })
        sessions = Protocol.run_protocol(Protocol.load_manifest(cfg), cfg).sessions
        assert len(sessions) == 2
        base_accuracies.append(sessions[0].acc_base)
        incremental_accuracies.append(sessions[1].acc_incr)
        base_drops.append(sessions[0].acc_base - sessions[1].acc_base)
    assert np.mean(base_accuracies) >= 0.95
    assert np.mean(incremental_accuracies) >= 0.9
    assert np.mean(base_drops) < 0.05
