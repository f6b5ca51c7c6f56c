from __future__ import annotations


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
    NP_xi8
)
from ..diffmath.tensor import Tensor
from ..exceptions import (
    BatchTooSmall,
    LabelOutOfRange,
    MissingPrototype,
    ZeroVector
)
from .labeled_batch import LabeledBatch
from .loss_config import LossConfig


class Losses:
    """
    Training objectives over `Tensor` graphs.

    Classifier weights are `d x C` with one column per class; labels passed
    to the cross-entropy terms are column indices into those weights.
    """

    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def cosine_similarity(
        cls: type[Self],
        u: NP_xf8,
        v: NP_xf8
    ) -> float:
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        u_norm = float(np.linalg.norm(u))
        v_norm = float(np.linalg.norm(v))
        if u_norm == 0.0 or v_norm == 0.0:
            raise ZeroVector("Cosine similarity of a zero vector is undefined")
        return float(np.clip(u @ v / (u_norm * v_norm), -1.0, 1.0))

    @classmethod
    def _unit_columns(
        cls: type[Self],
        weights: Tensor
    ) -> Tensor:
        if np.any(np.linalg.norm(weights.data, axis=0) == 0.0):
            raise ZeroVector("Classifier weight matrix has a zero column")
        return weights.normalize(axis=0)

    @classmethod
    def _unit_rows(
        cls: type[Self],
        vectors: Tensor
    ) -> Tensor:
        if np.any(np.linalg.norm(vectors.data, axis=1) == 0.0):
            raise ZeroVector("Embedding batch has a zero row")
        return vectors.normalize(axis=1)

    @classmethod
    def cosine_scores(
        cls: type[Self],
        embeddings: Tensor,
        weights: Tensor
    ) -> Tensor:
        return cls._unit_rows(embeddings) @ cls._unit_columns(weights)

    @classmethod
    def supcon_loss(
        cls: type[Self],
        batch: LabeledBatch,
        tau: float
    ) -> Tensor:
        """
        Supervised contrastive loss, summed over anchors.

        Each anchor averages `-log softmax` over its positives, where the
        softmax runs over all other rows at temperature `tau`. The
        log-denominator is shifted by the row maximum over the contrast set.
        """
        batch.validate_contrastive()
        n = batch.size
        z = batch.vectors
        similarities = (z @ z.T) * (1.0 / tau)
        eye = np.eye(n)
        off_diagonal = 1.0 - eye
        row_max = np.max(np.where(off_diagonal > 0.0, similarities.data, -np.inf), axis=1, keepdims=True)
        masked = similarities * off_diagonal + eye * row_max
        log_denominator = ((masked - row_max).exp() * off_diagonal).sum(axis=1, keepdims=True).log() + row_max
        log_prob = similarities - log_denominator
        positives = batch.positive_mask().astype(np.float64)
        positive_weights = positives / positives.sum(axis=1, keepdims=True)
        return -(log_prob * positive_weights).sum()

    @classmethod
    def cosine_ce_loss(
        cls: type[Self],
        embeddings: Tensor,
        labels: NP_xi8,
        weights: Tensor,
        scale: float
    ) -> Tensor:
        labels = np.asarray(labels, dtype=np.int64)
        n_classes = weights.shape[1]
        if labels.size == 0:
            raise BatchTooSmall("Cross-entropy needs at least one sample")
        if np.any(labels < 0) or np.any(labels >= n_classes):
            raise LabelOutOfRange(f"Labels must lie in [0, {n_classes}), got {labels.min()}..{labels.max()}")
        logits = cls.cosine_scores(embeddings, weights) * scale
        picked = logits[np.arange(len(labels)), labels]
        return (logits.log_sum_exp(axis=1) - picked).mean()

    @classmethod
    def joint_base_loss(
        cls: type[Self],
        embeddings: Tensor,
        projections: LabeledBatch,
        weights: Tensor,
        cfg: LossConfig
    ) -> Tensor:
        # Cross-entropy on raw embeddings, contrastive on projections; zero-weight terms are skipped.
        terms: list[Tensor] = []
        if cfg.lambda_ != 0.0:
            terms.append(cls.cosine_ce_loss(embeddings, projections.labels, weights, cfg.scale) * cfg.lambda_)
        if cfg.beta != 0.0:
            terms.append(cls.supcon_loss(projections, cfg.tau) * cfg.beta)
        return sum(terms[1:], terms[0])

    @classmethod
    def prototype_loss(
        cls: type[Self],
        prototypes: Mapping[ClassIdType, NP_xf8],
        class_ids: Sequence[ClassIdType],
        old_class_ids: Sequence[ClassIdType],
        weights: Tensor,
        scale: float,
        denominator: Literal["paired", "cross"] = "paired"
    ) -> Tensor:
        """
        Mean over old classes `c` of `-log(exp(s*cos(p_c, w_c)) / denominator)`.

        `class_ids` names the weight columns in order. Prototypes are
        constants; the gradient flows into `weights` only.
        """
        assert old_class_ids
        columns = {class_id: column for column, class_id in enumerate(class_ids)}
        required = class_ids if denominator == "paired" else old_class_ids
        for class_id in required:
            if class_id not in prototypes:
                raise MissingPrototype(class_id)
        for class_id in old_class_ids:
            if class_id not in columns:
                raise LabelOutOfRange(f"Old class {class_id} has no classifier column")

        def unit_prototypes(
            ids: Sequence[ClassIdType]
        ) -> np.ndarray:
            matrix = np.stack([np.asarray(prototypes[class_id], dtype=np.float64) for class_id in ids])
            norms = np.linalg.norm(matrix, axis=1, keepdims=True)
            if np.any(norms == 0.0):
                raise ZeroVector("Prototype is the zero vector")
            return matrix / norms

        unit_weights = cls._unit_columns(weights)
        old_columns = np.array([columns[class_id] for class_id in old_class_ids])
        if denominator == "paired":
            paired_scores = (unit_weights * unit_prototypes(class_ids).T).sum(axis=0) * scale
            return paired_scores.log_sum_exp(axis=0) - paired_scores[old_columns].mean()
        logits = (Tensor(unit_prototypes(old_class_ids)) @ unit_weights) * scale
        picked = logits[np.arange(len(old_columns)), old_columns]
        return (logits.log_sum_exp(axis=1) - picked).mean()

    @classmethod
    def incremental_loss(
        cls: type[Self],
        support: LabeledBatch,
        prototypes: Mapping[ClassIdType, NP_xf8],
        class_ids: Sequence[ClassIdType],
        old_class_ids: Sequence[ClassIdType],
        weights: Tensor,
        cfg: LossConfig
    ) -> Tensor:
        # `support.labels` are column indices over all classes seen so far.
        terms: list[Tensor] = []
        if cfg.alpha != 0.0:
            terms.append(cls.prototype_loss(
                prototypes,
                class_ids,
                old_class_ids,
                weights,
                cfg.scale,
                cfg.prototype_denominator
            ) * cfg.alpha)
        if cfg.alpha != 1.0:
            terms.append(cls.cosine_ce_loss(support.vectors, support.labels, weights, cfg.scale) * (1.0 - cfg.alpha))
        return sum(terms[1:], terms[0])
