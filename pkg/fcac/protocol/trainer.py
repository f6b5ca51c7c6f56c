from __future__ import annotations


from typing import (
    Callable,
    Mapping,
    Never,
    Self,
    Sequence
)

import numpy as np

from ..classifier.prototype import Prototype
from ..classifier.stochastic_classifier import StochasticClassifier
from ..classifier.stochastic_classifier_state import StochasticClassifierState
from ..constants.custom_typing import (
    ClassIdType,
    NP_xi8,
    NP_xxf8,
    NP_xxxf8
)
from ..diffmath.autodiff import Graph
from ..diffmath.optimizer import (
    Optimizer,
    OptimizerConfig,
    OptimizerState
)
from ..diffmath.tensor import Tensor
from ..embedder.embedder import Embedder
from ..embedder.embedder_config import EmbedderConfig
from ..embedder.embedder_params import EmbedderParams
from ..exceptions import (
    Diverged,
    MissingPrototype,
    NonFiniteValue
)
from ..losses.labeled_batch import LabeledBatch
from ..losses.loss_config import LossConfig
from ..losses.losses import Losses
from ..toplevel.toplevel import Toplevel
from .protocol_config import ProtocolConfig
from .sampling import Sampling
from .session_dataset import (
    LabeledSample,
    stack_labels
)


type ParamsType = dict[str, np.ndarray]


class Trainer:
    """
    Base-session and incremental-session training loops.

    Every loop draws from its own seeded stream derived from the protocol
    seed, so switching the stochastic weights off leaves batch order and
    initialization unchanged.
    """

    __slots__ = ()

    BASE_WEIGHTS: str = "base.weights"

    # Stream keys under the protocol seed.
    _INIT_KEY: int = 10
    _BASE_WEIGHTS_KEY: int = 11
    _BASE_BATCH_KEY: int = 12
    _CLASSIFIER_BATCH_KEY: int = 13
    _CLASSIFIER_NOISE_KEY: int = 14
    _INCREMENTAL_NOISE_KEY: int = 20

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def trains_sigma(
        cls: type[Self],
        cfg: ProtocolConfig
    ) -> bool:
        # A zero initial spread is never moved, so W stays exactly mu.
        return cfg.stochastic and cfg.sigma_init > 0.0

    @classmethod
    def step(
        cls: type[Self],
        graph: Graph,
        params: ParamsType,
        opt_state: OptimizerState,
        opt_cfg: OptimizerConfig,
        phase: str
    ) -> tuple[ParamsType, OptimizerState, float]:
        """
        One forward/backward pass and momentum update over `params`.

        Non-finite losses or gradients abort with `Diverged`.
        """
        try:
            evaluation = graph.forward(params)
            loss = evaluation.value
            grads = evaluation.backward()
        except NonFiniteValue as error:
            raise Diverged(f"{phase}: training diverged at {error.op_id}") from error
        if not np.isfinite(loss):
            raise Diverged(f"{phase}: non-finite loss {loss}")
        if not all(np.all(np.isfinite(grad)) for grad in grads.values()):
            raise Diverged(f"{phase}: non-finite gradient")
        grads = Optimizer.clip_grad_norm(grads, opt_cfg.max_grad_norm)
        new_params, opt_state = Optimizer.sgd_step(params, grads, opt_state)
        return new_params, opt_state, loss

    @classmethod
    def _graph(
        cls: type[Self],
        params: Mapping[str, np.ndarray],
        function: Callable[[Mapping[str, Tensor]], Tensor]
    ) -> Graph:
        return Graph(
            function=function,
            input_shapes={name: value.shape for name, value in params.items()}
        )

    @classmethod
    def input_stack(
        cls: type[Self],
        samples: Sequence[LabeledSample],
        cfg: EmbedderConfig
    ) -> list[NP_xxf8]:
        # Each spectrogram standardized on its own, as at inference time.
        return [Embedder.stack_inputs((sample.spectrogram,), cfg)[0] for sample in samples]

    @classmethod
    def batch_inputs(
        cls: type[Self],
        inputs: Sequence[NP_xxf8],
        indices: NP_xi8
    ) -> NP_xxxf8:
        # Clips of unequal length are cropped to the shortest in the batch.
        n_frames = min(inputs[index].shape[1] for index in indices)
        return np.stack([inputs[index][:, :n_frames] for index in indices])

    @classmethod
    def joint_graph(
        cls: type[Self],
        params: Mapping[str, np.ndarray],
        inputs: NP_xxxf8,
        columns: NP_xi8,
        loss_cfg: LossConfig,
        embedder_cfg: EmbedderConfig
    ) -> Graph:
        # Cosine cross-entropy on embeddings against `base.weights`, contrastive loss on projections.

        def function(
            leaves: Mapping[str, Tensor]
        ) -> Tensor:
            embeddings = Embedder.forward(inputs, leaves, embedder_cfg)
            projections = LabeledBatch(vectors=Embedder.project(embeddings, leaves), labels=columns)
            return Losses.joint_base_loss(embeddings, projections, leaves[cls.BASE_WEIGHTS], loss_cfg)

        return cls._graph(params, function)

    @classmethod
    def contrastive_graph(
        cls: type[Self],
        params: Mapping[str, np.ndarray],
        inputs: NP_xxxf8,
        columns: NP_xi8,
        loss_cfg: LossConfig,
        embedder_cfg: EmbedderConfig
    ) -> Graph:

        def function(
            leaves: Mapping[str, Tensor]
        ) -> Tensor:
            embeddings = Embedder.forward(inputs, leaves, embedder_cfg)
            projections = LabeledBatch(vectors=Embedder.project(embeddings, leaves), labels=columns)
            return Losses.supcon_loss(projections, loss_cfg.tau)

        return cls._graph(params, function)

    @classmethod
    def _classifier_weights(
        cls: type[Self],
        leaves: Mapping[str, Tensor],
        noise: np.ndarray | None
    ) -> Tensor:
        if noise is None:
            return leaves["mu"]
        return leaves["mu"] + Tensor(noise) * leaves["sigma"]

    @classmethod
    def _classifier_params(
        cls: type[Self],
        state: StochasticClassifierState,
        cfg: ProtocolConfig
    ) -> ParamsType:
        params: ParamsType = {"mu": np.array(state.mu)}
        if cls.trains_sigma(cfg):
            params["sigma"] = np.array(state.sigma)
        return params

    @classmethod
    def _updated_state(
        cls: type[Self],
        state: StochasticClassifierState,
        params: ParamsType
    ) -> StochasticClassifierState:
        return StochasticClassifier.with_parameters(state, params["mu"], params.get("sigma", state.sigma))

    @classmethod
    def _train_backbone(
        cls: type[Self],
        samples: Sequence[LabeledSample],
        params: EmbedderParams,
        cfg: ProtocolConfig
    ) -> EmbedderParams:
        embedder_cfg = params.config
        inputs = cls.input_stack(samples, embedder_cfg)
        class_ids = sorted({sample.class_id for sample in samples})
        columns = np.searchsorted(class_ids, stack_labels(samples))
        values: ParamsType = dict(params.tensors)
        joint = cfg.base_mode == "joint"
        if joint:
            weights_rng = Sampling.rng(cfg.seed, cls._BASE_WEIGHTS_KEY)
            values[cls.BASE_WEIGHTS] = weights_rng.standard_normal((embedder_cfg.embedding_dim, len(class_ids)))
        opt_state = Optimizer.initial_state(values, cfg.optimizer)
        batch_rng = Sampling.rng(cfg.seed, cls._BASE_BATCH_KEY)
        phase = "base/joint" if joint else "base/contrastive"
        graph_factory = cls.joint_graph if joint else cls.contrastive_graph
        Toplevel.set_status("Phase", phase)
        for epoch in range(cfg.base_epochs):
            losses: list[float] = []
            for indices in Sampling.balanced_batches(columns, cfg.batch_size, batch_rng):
                graph = graph_factory(values, cls.batch_inputs(inputs, indices), columns[indices], cfg.loss, embedder_cfg)
                values, opt_state, loss = cls.step(graph, values, opt_state, cfg.optimizer, phase)
                losses.append(loss)
            Toplevel.set_status("Epoch", f"{epoch + 1}/{cfg.base_epochs}")
            Toplevel.set_status("Loss", float(np.mean(losses)))
        Toplevel.log(f"{phase}: {cfg.base_epochs} epochs over {len(samples)} clips of {len(class_ids)} classes")
        values.pop(cls.BASE_WEIGHTS, None)
        return params.updated(values)

    @classmethod
    def fit_classifier(
        cls: type[Self],
        embeddings: NP_xxf8,
        labels: NP_xi8,
        state: StochasticClassifierState,
        cfg: ProtocolConfig
    ) -> StochasticClassifierState:
        """
        Cosine cross-entropy training of `(mu, sigma)` on fixed embeddings.

        Weights are resampled as `mu + eps * sigma` at every step when the
        spread is trained, and are `mu` otherwise.
        """
        columns = StochasticClassifier.columns_of(state, labels)
        params = cls._classifier_params(state, cfg)
        opt_state = Optimizer.initial_state(params, cfg.optimizer)
        batch_rng = Sampling.rng(cfg.seed, cls._CLASSIFIER_BATCH_KEY)
        noise_rng = Sampling.rng(cfg.seed, cls._CLASSIFIER_NOISE_KEY)
        Toplevel.set_status("Phase", "base/classifier")
        for epoch in range(cfg.classifier_epochs):
            losses: list[float] = []
            for indices in Sampling.balanced_batches(columns, cfg.batch_size, batch_rng):
                noise = noise_rng.standard_normal(state.mu.shape) if "sigma" in params else None
                batch_embeddings = Tensor(embeddings[indices])
                batch_columns = columns[indices]

                def function(
                    leaves: Mapping[str, Tensor]
                ) -> Tensor:
                    weights = cls._classifier_weights(leaves, noise)
                    return Losses.cosine_ce_loss(batch_embeddings, batch_columns, weights, cfg.loss.scale)

                params, opt_state, loss = cls.step(cls._graph(params, function), params, opt_state, cfg.optimizer, "base/classifier")
                if "sigma" in params:
                    params["sigma"] = np.maximum(params["sigma"], 0.0)
                losses.append(loss)
            Toplevel.set_status("Epoch", f"{epoch + 1}/{cfg.classifier_epochs}")
            Toplevel.set_status("Loss", float(np.mean(losses)))
        return cls._updated_state(state, params)

    @classmethod
    def train_base(
        cls: type[Self],
        samples: Sequence[LabeledSample],
        embedder_cfg: EmbedderConfig,
        cfg: ProtocolConfig,
        workers: int = 1
    ) -> tuple[EmbedderParams, StochasticClassifierState]:
        """
        Train the backbone on base-session clips, freeze it, and fit the
        base classifier.

        `joint` mode minimizes the weighted sum of cosine cross-entropy and the
        contrastive loss per batch. `two_stage` mode trains the backbone with
        the contrastive loss alone. Both then initialize one classifier column
        per base class from its prototype and train it with cross-entropy.
        """
        samples = tuple(samples)
        assert samples
        params = Embedder.initialize(embedder_cfg, (cfg.seed, cls._INIT_KEY))
        params = Embedder.freeze(cls._train_backbone(samples, params, cfg))
        labels = stack_labels(samples)
        embeddings = Embedder.embed_batch((sample.spectrogram for sample in samples), params, workers)
        prototypes = StochasticClassifier.class_prototypes(embeddings, labels)
        state = StochasticClassifier.expand(
            StochasticClassifier.empty(embedder_cfg.embedding_dim),
            prototypes.values(),
            cfg.sigma_init if cfg.stochastic else 0.0
        )
        state = cls.fit_classifier(embeddings, labels, state, cfg)
        Toplevel.log(f"Base classifier trained over {state.n_classes} classes")
        return params, state

    @classmethod
    def train_incremental(
        cls: type[Self],
        session_index: int,
        support: Sequence[LabeledSample],
        params: EmbedderParams,
        state: StochasticClassifierState,
        old_prototypes: Mapping[ClassIdType, Prototype],
        cfg: ProtocolConfig,
        workers: int = 1
    ) -> StochasticClassifierState:
        """
        Add the support classes to the classifier and train all columns.

        New columns start at the support prototypes. Each step minimizes
        `alpha * prototype_loss + (1 - alpha) * cross_entropy(support)` with
        freshly sampled weights. Old classes are anchored by `old_prototypes`;
        classes of this session use the current value of their own column.
        """
        assert params.frozen
        support = tuple(support)
        for class_id in state.class_ids:
            if class_id not in old_prototypes:
                raise MissingPrototype(class_id)
        labels = stack_labels(support)
        embeddings = Embedder.embed_batch((sample.spectrogram for sample in support), params, workers)
        new_prototypes = StochasticClassifier.class_prototypes(embeddings, labels)
        old_class_ids = state.class_ids
        state = StochasticClassifier.expand(
            state,
            new_prototypes.values(),
            cfg.sigma_init if cfg.stochastic else 0.0
        )
        class_ids = state.class_ids
        new_columns = StochasticClassifier.columns_of(state, np.array(list(new_prototypes), dtype=np.int64))
        batch = LabeledBatch(vectors=embeddings, labels=StochasticClassifier.columns_of(state, labels))
        anchors = {class_id: old_prototypes[class_id].vector for class_id in old_class_ids}

        params_values = cls._classifier_params(state, cfg)
        opt_state = Optimizer.initial_state(params_values, cfg.optimizer)
        noise_rng = Sampling.rng(cfg.seed, cls._INCREMENTAL_NOISE_KEY, session_index)
        phase = f"session {session_index}"
        Toplevel.set_status("Phase", phase)
        for epoch in range(cfg.incremental_epochs):
            noise = noise_rng.standard_normal(state.mu.shape) if "sigma" in params_values else None
            prototypes = dict(anchors)
            for class_id, column in zip(new_prototypes, new_columns, strict=True):
                prototypes[class_id] = np.array(params_values["mu"][:, column])

            def function(
                leaves: Mapping[str, Tensor]
            ) -> Tensor:
                weights = cls._classifier_weights(leaves, noise)
                return Losses.incremental_loss(batch, prototypes, class_ids, old_class_ids, weights, cfg.loss)

            params_values, opt_state, loss = cls.step(cls._graph(params_values, function), params_values, opt_state, cfg.optimizer, phase)
            if "sigma" in params_values:
                params_values["sigma"] = np.maximum(params_values["sigma"], 0.0)
            Toplevel.set_status("Epoch", f"{epoch + 1}/{cfg.incremental_epochs}")
            Toplevel.set_status("Loss", loss)
        Toplevel.log(f"Session {session_index}: added classes {list(new_prototypes)}, {state.n_classes} in total")
        return cls._updated_state(state, params_values)
