from __future__ import annotations


from typing import (
    Mapping,
    Self
)

import attrs

from .metrics import (
    Metrics,
    VariantType
)
from .session_metrics import SessionMetrics


@attrs.frozen(kw_only=True)
class RunReport:
    """
    Outcome of one protocol run.

    The AA/PD summary is derived from `sessions` on demand and is empty for
    a run with only the base session.
    """

    sessions: tuple[SessionMetrics, ...] = attrs.field(converter=tuple)
    config_digest: str
    seed: int
    clustering_ratio: float | None = None
    config: Mapping[str, object] = attrs.field(factory=dict)
    method: str = "fcac"

    def __attrs_post_init__(
        self: Self
    ) -> None:
        assert self.sessions
        assert all(metrics.session_index == index for index, metrics in enumerate(self.sessions))

    def row(
        self: Self,
        variant: VariantType
    ) -> list[float | None]:
        match variant:
            case "base":
                return [metrics.acc_base for metrics in self.sessions]
            case "incr":
                return [metrics.acc_incr for metrics in self.sessions]
            case "all":
                return [metrics.acc_all for metrics in self.sessions]

    @property
    def summary(
        self: Self
    ) -> dict[VariantType, tuple[float, float]]:
        if len(self.sessions) < 2:
            return {}
        variants: tuple[VariantType, ...] = ("all", "base", "incr")
        return {variant: Metrics.aa_pd(self.row(variant), variant) for variant in variants}

    def to_dict(
        self: Self
    ) -> dict[str, object]:
        return {
            "method": self.method,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "clustering_ratio": self.clustering_ratio,
            "sessions": [metrics.to_dict() for metrics in self.sessions],
            "summary": {
                variant: {"AA": aa, "PD": pd}
                for variant, (aa, pd) in self.summary.items()
            },
            "config": dict(self.config)
        }
