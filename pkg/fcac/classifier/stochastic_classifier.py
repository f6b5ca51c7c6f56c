from __future__ import annotations


from typing import (
    Iterable,
    Never,
    Self
)

import attrs
import numpy as np

from ..constants.custom_typing import (
    ClassIdType,
    NP_xf8,
    NP_xi8,
    NP_xxf8,
    SeedType
)
from ..exceptions import (
    DuplicateClass,
    EmptyClass,
    EmptyClassifier,
    EmptyPrototype,
    ZeroVector
)
from .prototype import Prototype
from .stochastic_classifier_state import StochasticClassifierState


class StochasticClassifier:
    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def empty(
        cls: type[Self],
        dim: int
    ) -> StochasticClassifierState:
        return StochasticClassifierState(
            mu=np.zeros((dim, 0)),
            sigma=np.zeros((dim, 0)),
            class_ids=(),
            session_boundaries=()
        )

    @classmethod
    def class_prototypes(
        cls: type[Self],
        embeddings: NP_xxf8,
        labels: NP_xi8,
        class_ids: Iterable[ClassIdType] | None = None
    ) -> dict[ClassIdType, Prototype]:
        """
        Normalized mean embedding per class, keyed in ascending class order.

        When `class_ids` is given, every listed class must occur in `labels`.
        """
        embeddings = np.asarray(embeddings, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        expected = sorted(set(labels.tolist()) if class_ids is None else set(class_ids))
        prototypes: dict[ClassIdType, Prototype] = {}
        for class_id in expected:
            members = embeddings[labels == class_id]
            if not len(members):
                raise EmptyClass(class_id)
            mean = members.mean(axis=0)
            norm = float(np.linalg.norm(mean))
            if norm == 0.0:
                raise EmptyPrototype(class_id)
            prototypes[class_id] = Prototype(class_id=class_id, vector=mean / norm)
        return prototypes

    @classmethod
    def sample_weights(
        cls: type[Self],
        state: StochasticClassifierState,
        seed: SeedType | np.random.Generator
    ) -> NP_xxf8:
        # W = mu + eps * sigma, eps drawn by the ziggurat sampler of a PCG64 generator.
        rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(seed))
        noise = rng.standard_normal(state.mu.shape)
        return state.mu + noise * state.sigma

    @classmethod
    def expand(
        cls: type[Self],
        state: StochasticClassifierState,
        new_prototypes: Iterable[Prototype],
        sigma_init: float
    ) -> StochasticClassifierState:
        new_prototypes = tuple(new_prototypes)
        assert new_prototypes and sigma_init >= 0.0
        existing = set(state.class_ids)
        seen: set[ClassIdType] = set()
        for prototype in new_prototypes:
            if prototype.class_id in existing or prototype.class_id in seen:
                raise DuplicateClass(prototype.class_id)
            seen.add(prototype.class_id)
        new_mu = np.stack([prototype.vector for prototype in new_prototypes], axis=1)
        return StochasticClassifierState(
            mu=np.concatenate((state.mu, new_mu), axis=1),
            sigma=np.concatenate((state.sigma, np.full_like(new_mu, sigma_init)), axis=1),
            class_ids=(*state.class_ids, *(prototype.class_id for prototype in new_prototypes)),
            session_boundaries=(*state.session_boundaries, state.n_classes)
        )

    @classmethod
    def with_parameters(
        cls: type[Self],
        state: StochasticClassifierState,
        mu: NP_xxf8,
        sigma: NP_xxf8
    ) -> StochasticClassifierState:
        # Negative spreads are projected back to zero.
        return attrs.evolve(state, mu=mu, sigma=np.maximum(sigma, 0.0))

    @classmethod
    def predict_batch(
        cls: type[Self],
        embeddings: NP_xxf8,
        state: StochasticClassifierState
    ) -> tuple[NP_xi8, NP_xxf8]:
        """
        Cosine scores against the class means, and the argmax class per row.

        Ties go to the smallest class id. No noise is drawn.
        """
        if not state.n_classes:
            raise EmptyClassifier("Cannot predict with a classifier that has no classes")
        embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
        embedding_norms = np.linalg.norm(embeddings, axis=1, keepdims=True)
        if np.any(embedding_norms == 0.0):
            raise ZeroVector("Cannot score a zero embedding")
        scores = (embeddings / embedding_norms) @ (state.mu / np.linalg.norm(state.mu, axis=0, keepdims=True))
        class_ids = np.array(state.class_ids, dtype=np.int64)
        best = scores == scores.max(axis=1, keepdims=True)
        predicted = np.where(best, class_ids[None, :], np.iinfo(np.int64).max).min(axis=1)
        return predicted, scores

    @classmethod
    def predict(
        cls: type[Self],
        embedding: NP_xf8,
        state: StochasticClassifierState
    ) -> tuple[ClassIdType, NP_xf8]:
        predicted, scores = cls.predict_batch(embedding[None, :], state)
        return int(predicted[0]), scores[0]

    @classmethod
    def column_of(
        cls: type[Self],
        state: StochasticClassifierState,
        class_id: ClassIdType
    ) -> int:
        return state.class_ids.index(class_id)

    @classmethod
    def columns_of(
        cls: type[Self],
        state: StochasticClassifierState,
        class_ids: NP_xi8
    ) -> NP_xi8:
        lookup = {class_id: column for column, class_id in enumerate(state.class_ids)}
        return np.array([lookup[int(class_id)] for class_id in class_ids], dtype=np.int64)

    @classmethod
    def session_classes(
        cls: type[Self],
        state: StochasticClassifierState,
        session_index: int
    ) -> tuple[ClassIdType, ...]:
        boundaries = (*state.session_boundaries, state.n_classes)
        return state.class_ids[boundaries[session_index]:boundaries[session_index + 1]]

    @classmethod
    def mean_prototypes(
        cls: type[Self],
        state: StochasticClassifierState
    ) -> dict[ClassIdType, Prototype]:
        # The trained class means stand in for the data of finished sessions.
        return {
            class_id: Prototype(class_id=class_id, vector=state.mu[:, column])
            for column, class_id in enumerate(state.class_ids)
        }
