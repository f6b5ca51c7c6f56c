from __future__ import annotations


import time
from typing import (
    Iterator,
    Self
)

from .toplevel import Toplevel
from .toplevel_resource import ToplevelResource


class Timer(ToplevelResource):
    __slots__ = ("_start_timestamp",)

    def __init__(
        self: Self
    ) -> None:
        super().__init__()
        self._start_timestamp: float = time.perf_counter()

    def __contextmanager__(
        self: Self
    ) -> Iterator[None]:
        Toplevel._timer = self
        try:
            yield
        finally:
            Toplevel._timer = None

    @property
    def elapsed(
        self: Self
    ) -> float:
        return time.perf_counter() - self._start_timestamp
