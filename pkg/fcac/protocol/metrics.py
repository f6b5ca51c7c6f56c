from __future__ import annotations


from typing import (
    Literal,
    Never,
    Self,
    Sequence
)

import numpy as np

from ..classifier.stochastic_classifier import StochasticClassifier
from ..classifier.stochastic_classifier_state import StochasticClassifierState
from ..constants.custom_typing import (
    NP_xi8,
    NP_xxf8
)
from ..embedder.embedder import Embedder
from ..embedder.embedder_params import EmbedderParams
from ..exceptions import (
    DegenerateInput,
    EmptyEvalSet,
    TooFewSessions
)
from .session_dataset import (
    LabeledSample,
    stack_labels
)
from .session_metrics import SessionMetrics


type VariantType = Literal["all", "base", "incr"]


class Metrics:
    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def evaluate_embeddings(
        cls: type[Self],
        session_index: int,
        embeddings: Sequence[NP_xxf8],
        labels: Sequence[NP_xi8],
        state: StochasticClassifierState
    ) -> SessionMetrics:
        """
        Metrics from per-session evaluation embeddings of sessions `0..m`.

        Entry 0 feeds the base counts; entries `1..m` are pooled into the
        incremental counts.
        """
        assert len(embeddings) == len(labels) == session_index + 1
        correct: list[int] = []
        totals: list[int] = []
        for session_embeddings, session_labels in zip(embeddings, labels, strict=True):
            session_labels = np.asarray(session_labels, dtype=np.int64)
            if not len(session_labels):
                raise EmptyEvalSet("Evaluation split is empty")
            predicted, _ = StochasticClassifier.predict_batch(session_embeddings, state)
            correct.append(int(np.sum(predicted == session_labels)))
            totals.append(len(session_labels))
        return SessionMetrics(
            session_index=session_index,
            n_base=totals[0],
            correct_base=correct[0],
            n_incr=sum(totals[1:]),
            correct_incr=sum(correct[1:])
        )

    @classmethod
    def evaluate(
        cls: type[Self],
        session_index: int,
        params: EmbedderParams,
        state: StochasticClassifierState,
        eval_sets: Sequence[Sequence[LabeledSample]],
        workers: int = 1
    ) -> SessionMetrics:
        for eval_set in eval_sets:
            if not eval_set:
                raise EmptyEvalSet("Evaluation split is empty")
        return cls.evaluate_embeddings(
            session_index,
            [
                Embedder.embed_batch((sample.spectrogram for sample in eval_set), params, workers)
                for eval_set in eval_sets
            ],
            [stack_labels(eval_set) for eval_set in eval_sets],
            state
        )

    @classmethod
    def aa_pd(
        cls: type[Self],
        per_session: Sequence[float | None],
        variant: VariantType = "all"
    ) -> tuple[float, float]:
        """
        Average accuracy and performance drop of one table row.

        `per_session` holds one accuracy per session. The `incr` variant
        ignores session 0, so its first entry may be `None`.
        """
        if len(per_session) < 2:
            raise TooFewSessions(f"Need at least 2 sessions, got {len(per_session)}")
        values = per_session[1:] if variant == "incr" else per_session
        assert all(value is not None for value in values)
        accuracies = np.array(values, dtype=np.float64)
        return float(accuracies.mean()), float(accuracies[0] - accuracies[-1])

    @classmethod
    def clustering_ratio(
        cls: type[Self],
        embeddings: NP_xxf8,
        labels: NP_xi8
    ) -> float:
        """
        Mean distance of each sample to its class centroid over the mean
        pairwise distance between centroids.
        """
        embeddings = np.asarray(embeddings, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        class_ids, counts = np.unique(labels, return_counts=True)
        if len(class_ids) < 2:
            raise DegenerateInput(f"Need at least 2 classes, got {len(class_ids)}")
        if np.any(counts < 2):
            raise DegenerateInput(f"Class {int(class_ids[np.argmin(counts)])} has fewer than 2 samples")
        centroids = np.stack([embeddings[labels == class_id].mean(axis=0) for class_id in class_ids])
        intra = np.linalg.norm(embeddings - centroids[np.searchsorted(class_ids, labels)], axis=1).mean()
        rows, columns = np.triu_indices(len(class_ids), k=1)
        inter = np.linalg.norm(centroids[rows] - centroids[columns], axis=1).mean()
        if inter == 0.0:
            raise DegenerateInput("All class centroids coincide")
        return float(intra / inter)
