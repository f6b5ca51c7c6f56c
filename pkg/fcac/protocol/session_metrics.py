from __future__ import annotations


from typing import Self

import attrs


@attrs.frozen(kw_only=True)
class SessionMetrics:
    """
    Accuracies after one session, with the counts they were computed from.

    `acc_incr` is `None` at session 0. `acc_all` is pooled over every
    evaluation clip seen so far, not the mean of the two subsets.
    """

    session_index: int
    n_base: int
    correct_base: int
    n_incr: int = 0
    correct_incr: int = 0

    def __attrs_post_init__(
        self: Self
    ) -> None:
        assert 0 <= self.correct_base <= self.n_base
        assert 0 <= self.correct_incr <= self.n_incr
        assert self.session_index > 0 or self.n_incr == 0

    @property
    def acc_base(
        self: Self
    ) -> float:
        return self.correct_base / self.n_base if self.n_base else 0.0

    @property
    def acc_incr(
        self: Self
    ) -> float | None:
        if self.session_index == 0 or not self.n_incr:
            return None
        return self.correct_incr / self.n_incr

    @property
    def n_all(
        self: Self
    ) -> int:
        return self.n_base + self.n_incr

    @property
    def correct_all(
        self: Self
    ) -> int:
        return self.correct_base + self.correct_incr

    @property
    def acc_all(
        self: Self
    ) -> float:
        return self.correct_all / self.n_all if self.n_all else 0.0

    def to_dict(
        self: Self
    ) -> dict[str, object]:
        return {
            "session_index": self.session_index,
            "acc_base": self.acc_base,
            "acc_incr": self.acc_incr,
            "acc_all": self.acc_all,
            "n_base": self.n_base,
            "correct_base": self.correct_base,
            "n_incr": self.n_incr,
            "correct_incr": self.correct_incr
        }
