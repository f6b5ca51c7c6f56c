from __future__ import annotations


import math
from typing import (
    Literal,
    Mapping,
    Never,
    Self,
    Sequence
)

import numpy as np

from ..constants.custom_typing import (
    ClassIdType,
    NP_xf8,
    NP_xi8,
    NP_xxf8
)


class ReferenceLosses:
    """
    Literal scalar evaluations of the training objectives.

    Plain loops with no stabilization and no graph; used as oracles against
    `Losses`.
    """

    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def _cos(
        cls: type[Self],
        u: NP_xf8,
        v: NP_xf8
    ) -> float:
        return float(np.dot(u, v) / (math.sqrt(float(np.dot(u, u))) * math.sqrt(float(np.dot(v, v)))))

    @classmethod
    def supcon_naive(
        cls: type[Self],
        vectors: NP_xxf8,
        labels: NP_xi8,
        tau: float
    ) -> float:
        n = len(labels)
        total = 0.0
        for a in range(n):
            denominator = sum(
                math.exp(float(np.dot(vectors[a], vectors[k])) / tau)
                for k in range(n)
                if k != a
            )
            positives = [i for i in range(n) if i != a and labels[i] == labels[a]]
            anchor_sum = 0.0
            for i in positives:
                anchor_sum += math.log(math.exp(float(np.dot(vectors[a], vectors[i])) / tau) / denominator)
            total += -anchor_sum / len(positives)
        return total

    @classmethod
    def cosine_ce_naive(
        cls: type[Self],
        embeddings: NP_xxf8,
        labels: NP_xi8,
        weights: NP_xxf8,
        scale: float
    ) -> float:
        n_classes = weights.shape[1]
        total = 0.0
        for embedding, label in zip(embeddings, labels, strict=True):
            scores = [math.exp(scale * cls._cos(embedding, weights[:, h])) for h in range(n_classes)]
            total += -math.log(scores[int(label)] / sum(scores))
        return total / len(labels)

    @classmethod
    def prototype_naive(
        cls: type[Self],
        prototypes: Mapping[ClassIdType, NP_xf8],
        class_ids: Sequence[ClassIdType],
        old_class_ids: Sequence[ClassIdType],
        weights: NP_xxf8,
        scale: float,
        denominator: Literal["paired", "cross"] = "paired"
    ) -> float:
        columns = {class_id: column for column, class_id in enumerate(class_ids)}
        total = 0.0
        for c in old_class_ids:
            numerator = math.exp(scale * cls._cos(prototypes[c], weights[:, columns[c]]))
            if denominator == "paired":
                partition = sum(
                    math.exp(scale * cls._cos(prototypes[h], weights[:, columns[h]]))
                    for h in class_ids
                )
            else:
                partition = sum(
                    math.exp(scale * cls._cos(prototypes[c], weights[:, columns[h]]))
                    for h in class_ids
                )
            total += -math.log(numerator / partition)
        return total / len(old_class_ids)

    @classmethod
    def incremental_naive(
        cls: type[Self],
        support_embeddings: NP_xxf8,
        support_labels: NP_xi8,
        prototypes: Mapping[ClassIdType, NP_xf8],
        class_ids: Sequence[ClassIdType],
        old_class_ids: Sequence[ClassIdType],
        weights: NP_xxf8,
        scale: float,
        alpha: float,
        denominator: Literal["paired", "cross"] = "paired"
    ) -> float:
        return (
            alpha * cls.prototype_naive(prototypes, class_ids, old_class_ids, weights, scale, denominator)
            + (1.0 - alpha) * cls.cosine_ce_naive(support_embeddings, support_labels, weights, scale)
        )
