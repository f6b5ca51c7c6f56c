from __future__ import annotations


from typing import (
    Callable,
    Iterable,
    Mapping,
    Never,
    Self
)

import attrs
import numpy as np

from ..classifier.stochastic_classifier import StochasticClassifier
from ..classifier.stochastic_classifier_state import StochasticClassifierState
from ..diffmath.autodiff import Autodiff
from ..diffmath.tensor import Tensor
from ..exceptions import FcacError
from ..losses.labeled_batch import LabeledBatch
from ..losses.loss_config import LossConfig
from ..losses.losses import Losses
from ..losses.reference_losses import ReferenceLosses
from ..protocol.reference_tables import ReferenceTables
from ..protocol.sampling import Sampling
from ..toplevel.toplevel import Toplevel


@attrs.frozen(kw_only=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@attrs.frozen(kw_only=True, eq=False)
class _LossInstance:
    embeddings: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    prototypes: dict[int, np.ndarray]
    old_class_ids: tuple[int, ...]

    @property
    def class_ids(
        self: Self
    ) -> tuple[int, ...]:
        return tuple(range(self.weights.shape[1]))


class Verifier:
    """
    Built-in oracle suite run by `fcac verify`.

    Every check derives its randomness from the given seed and reports a
    one-line detail; the suite passes iff every check passes.
    """

    __slots__ = ()

    GRADIENT_INSTANCES: int = 100
    GRADIENT_TOLERANCE: float = 1e-4
    SUPCON_BATCHES: int = 1000
    SUPCON_TOLERANCE: float = 1e-10
    PERMUTATION_TOLERANCE: float = 1e-12
    MOMENT_DRAWS: int = 10000

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def _instance(
        cls: type[Self],
        rng: np.random.Generator
    ) -> _LossInstance:
        # At most 8 samples in dimension at most 8; every class appears at least twice.
        n_classes = int(rng.integers(2, 5))
        extra = int(rng.integers(0, 8 - 2 * n_classes + 1))
        labels = np.concatenate((np.repeat(np.arange(n_classes), 2), rng.integers(0, n_classes, size=extra)))
        dim = int(rng.integers(2, 9))
        return _LossInstance(
            embeddings=rng.standard_normal((len(labels), dim)),
            labels=rng.permutation(labels),
            weights=rng.standard_normal((dim, n_classes)),
            prototypes={class_id: rng.standard_normal(dim) for class_id in range(n_classes)},
            old_class_ids=tuple(range(int(rng.integers(1, n_classes))))
        )

    @classmethod
    def _gradient_check(
        cls: type[Self],
        name: str,
        key: int,
        seed: int,
        build: Callable[[_LossInstance, np.random.Generator], tuple[Callable[[Mapping[str, Tensor]], Tensor], dict[str, np.ndarray]]]
    ) -> CheckResult:
        rng = Sampling.rng(seed, 100, key)
        worst = 0.0
        for _ in range(cls.GRADIENT_INSTANCES):
            function, params = build(cls._instance(rng), rng)
            worst = max(worst, Autodiff.gradient_check(function, params))
        return CheckResult(
            name=name,
            passed=worst <= cls.GRADIENT_TOLERANCE,
            detail=f"max relative error {worst:.3e} over {cls.GRADIENT_INSTANCES} instances"
        )

    @classmethod
    def check_gradient_supcon(
        cls: type[Self],
        seed: int
    ) -> CheckResult:

        def build(
            instance: _LossInstance,
            rng: np.random.Generator
        ) -> tuple[Callable[[Mapping[str, Tensor]], Tensor], dict[str, np.ndarray]]:
            tau = float(rng.uniform(0.1, 1.0))
            return (
                lambda leaves: Losses.supcon_loss(
                    LabeledBatch(vectors=leaves["z"].normalize(axis=1), labels=instance.labels),
                    tau
                ),
                {"z": instance.embeddings}
            )

        return cls._gradient_check("gradient/supcon", 0, seed, build)

    @classmethod
    def check_gradient_cosine_ce(
        cls: type[Self],
        seed: int
    ) -> CheckResult:

        def build(
            instance: _LossInstance,
            rng: np.random.Generator
        ) -> tuple[Callable[[Mapping[str, Tensor]], Tensor], dict[str, np.ndarray]]:
            return (
                lambda leaves: Losses.cosine_ce_loss(leaves["e"], instance.labels, leaves["w"], 1.0),
                {"e": instance.embeddings, "w": instance.weights}
            )

        return cls._gradient_check("gradient/cosine_ce", 1, seed, build)

    @classmethod
    def check_gradient_joint_base(
        cls: type[Self],
        seed: int
    ) -> CheckResult:

        def build(
            instance: _LossInstance,
            rng: np.random.Generator
        ) -> tuple[Callable[[Mapping[str, Tensor]], Tensor], dict[str, np.ndarray]]:
            cfg = LossConfig(
                tau=float(rng.uniform(0.1, 1.0)),
                lambda_=float(rng.uniform(0.1, 1.0)),
                beta=float(rng.uniform(0.1, 1.0)),
                scale=1.0
            )
            projections = rng.standard_normal((len(instance.labels), int(rng.integers(2, 9))))
            return (
                lambda leaves: Losses.joint_base_loss(
                    leaves["e"],
                    LabeledBatch(vectors=leaves["p"].normalize(axis=1), labels=instance.labels),
                    leaves["w"],
                    cfg
                ),
                {"e": instance.embeddings, "p": projections, "w": instance.weights}
            )

        return cls._gradient_check("gradient/joint_base", 2, seed, build)

    @classmethod
    def check_gradient_prototype(
        cls: type[Self],
        seed: int
    ) -> CheckResult:

        def build(
            instance: _LossInstance,
            rng: np.random.Generator
        ) -> tuple[Callable[[Mapping[str, Tensor]], Tensor], dict[str, np.ndarray]]:
            denominator = "paired" if rng.random() < 0.5 else "cross"
            return (
                lambda leaves: Losses.prototype_loss(
                    instance.prototypes,
                    instance.class_ids,
                    instance.old_class_ids,
                    leaves["w"],
                    1.0,
                    denominator
                ),
                {"w": instance.weights}
            )

        return cls._gradient_check("gradient/prototype", 3, seed, build)

    @classmethod
    def check_gradient_incremental(
        cls: type[Self],
        seed: int
    ) -> CheckResult:

        def build(
            instance: _LossInstance,
            rng: np.random.Generator
        ) -> tuple[Callable[[Mapping[str, Tensor]], Tensor], dict[str, np.ndarray]]:
            cfg = LossConfig(alpha=float(rng.uniform(0.0, 1.0)), scale=1.0)
            return (
                lambda leaves: Losses.incremental_loss(
                    LabeledBatch(vectors=leaves["e"].normalize(axis=1), labels=instance.labels),
                    instance.prototypes,
                    instance.class_ids,
                    instance.old_class_ids,
                    leaves["w"],
                    cfg
                ),
                {"e": instance.embeddings, "w": instance.weights}
            )

        return cls._gradient_check("gradient/incremental", 4, seed, build)

    @classmethod
    def check_supcon_equivalence(
        cls: type[Self],
        seed: int
    ) -> CheckResult:
        rng = Sampling.rng(seed, 101)
        worst = 0.0
        worst_permutation = 0.0
        for _ in range(cls.SUPCON_BATCHES):
            instance = cls._instance(rng)
            vectors = instance.embeddings / np.linalg.norm(instance.embeddings, axis=1, keepdims=True)
            tau = float(rng.uniform(0.05, 1.0))
            stable = Losses.supcon_loss(LabeledBatch(vectors=vectors, labels=instance.labels), tau).item()
            naive = ReferenceLosses.supcon_naive(vectors, instance.labels, tau)
            worst = max(worst, abs(stable - naive) / max(1.0, abs(naive)))
            order = rng.permutation(len(instance.labels))
            permuted = Losses.supcon_loss(LabeledBatch(vectors=vectors[order], labels=instance.labels[order]), tau).item()
            worst_permutation = max(worst_permutation, abs(permuted - stable) / max(1.0, abs(stable)))
        return CheckResult(
            name="supcon/equivalence",
            passed=worst <= cls.SUPCON_TOLERANCE and worst_permutation <= cls.PERMUTATION_TOLERANCE,
            detail=f"naive gap {worst:.2e}, permutation gap {worst_permutation:.2e} over {cls.SUPCON_BATCHES} batches"
        )

    @classmethod
    def check_reference_tables(
        cls: type[Self],
        seed: int
    ) -> CheckResult:
        checks = ReferenceTables.check_cells()
        failures = ReferenceTables.failures()
        errata = [
            f"{check.name} printed {check.printed:.2f} computed {check.computed:.2f}"
            for check in checks
            if check.known_erratum
        ]
        detail = f"{len(checks) - len(failures)}/{len(checks)} cells reproduced; known errata: {"; ".join(errata)}"
        if failures:
            detail += f"; mismatches: {", ".join(check.name for check in failures)}"
        return CheckResult(name="tables/aa_pd", passed=not failures, detail=detail)

    @classmethod
    def check_sampler_moments(
        cls: type[Self],
        seed: int
    ) -> CheckResult:
        rng = Sampling.rng(seed, 102)
        mu = rng.standard_normal((4, 3))
        sigma = rng.uniform(0.05, 0.5, size=(4, 3))
        state = StochasticClassifierState(
            mu=mu,
            sigma=sigma,
            class_ids=(0, 1, 2),
            session_boundaries=(0,)
        )
        draws = np.stack([StochasticClassifier.sample_weights(state, rng) for _ in range(cls.MOMENT_DRAWS)])
        mean_gap = np.abs(draws.mean(axis=0) - mu) / (sigma / np.sqrt(cls.MOMENT_DRAWS))
        std_gap = np.abs(draws.std(axis=0) - sigma) / sigma
        return CheckResult(
            name="classifier/moments",
            passed=bool(np.all(mean_gap <= 4.0) and np.all(std_gap <= 0.05)),
            detail=f"max mean gap {mean_gap.max():.2f} standard errors, max std gap {std_gap.max():.2%}"
        )

    @classmethod
    def registry(
        cls: type[Self]
    ) -> dict[str, Callable[[int], CheckResult]]:
        return {
            "gradient/supcon": cls.check_gradient_supcon,
            "gradient/cosine_ce": cls.check_gradient_cosine_ce,
            "gradient/joint_base": cls.check_gradient_joint_base,
            "gradient/prototype": cls.check_gradient_prototype,
            "gradient/incremental": cls.check_gradient_incremental,
            "supcon/equivalence": cls.check_supcon_equivalence,
            "tables/aa_pd": cls.check_reference_tables,
            "classifier/moments": cls.check_sampler_moments
        }

    @classmethod
    def run(
        cls: type[Self],
        seed: int,
        names: Iterable[str] | None = None
    ) -> list[CheckResult]:
        registry = cls.registry()
        results: list[CheckResult] = []
        for name in registry if names is None else names:
            Toplevel.set_status("Check", name)
            try:
                result = registry[name](seed)
            except FcacError as error:
                result = CheckResult(name=name, passed=False, detail=f"{type(error).__name__}: {error}")
            Toplevel.log(f"{"PASS" if result.passed else "FAIL"} {name}: {result.detail}")
            results.append(result)
        return results
