from __future__ import annotations


from typing import (
    ClassVar,
    Literal,
    Never,
    Self
)

import attrs

from .metrics import (
    Metrics,
    VariantType
)


type BenchmarkType = Literal["nsynth-100", "ls-100"]
type CellType = Literal["AA", "PD"]


@attrs.frozen(kw_only=True)
class ReferenceRow:
    benchmark: BenchmarkType
    method: str
    variant: VariantType
    accuracies: tuple[float | None, ...]
    printed_aa: float
    printed_pd: float

    def computed(
        self: Self
    ) -> tuple[float, float]:
        return Metrics.aa_pd(self.accuracies, self.variant)


@attrs.frozen(kw_only=True)
class ReferenceCellCheck:
    row: ReferenceRow
    cell: CellType
    printed: float
    computed: float
    tolerance: float
    known_erratum: bool

    @property
    def passed(
        self: Self
    ) -> bool:
        return abs(self.printed - self.computed) <= self.tolerance

    @property
    def name(
        self: Self
    ) -> str:
        return f"{self.row.benchmark}/{self.row.method}/{self.row.variant}/{self.cell}"


class ReferenceTables:
    """
    Published per-session accuracies (percent) of six methods on the
    NSynth-100 and LS-100 benchmarks, with their printed AA and PD cells.

    Two printed cells disagree with their own rows and are kept as known
    errata: NSynth-100 SC Base AA (printed 97.56, rows give 97.54) and
    LS-100 fcac All PD (printed 4.18, rows give 92.97 - 88.78 = 4.19).
    """

    __slots__ = ()

    AA_TOLERANCE: ClassVar[float] = 0.01
    PD_TOLERANCE: ClassVar[float] = 0.005 + 1e-9
    ERRATA: ClassVar[frozenset[tuple[str, str, str, str]]] = frozenset((
        ("nsynth-100", "SC", "base", "AA"),
        ("ls-100", "fcac", "all", "PD")
    ))
    _ROWS: ClassVar[tuple[tuple[BenchmarkType, str, VariantType, tuple[float | None, ...], float, float], ...]] = (
        ("nsynth-100", "Finetune", "base", (99.96, 88.91, 85.41, 80.36, 72.51, 45.24, 59.31, 48.53, 50.68, 53.28), 68.42, 46.68),
        ("nsynth-100", "Finetune", "incr", (None, 38.75, 30.25, 36.96, 37.54, 28.95, 27.24, 22.30, 20.58, 19.00), 29.06, 19.75),
        ("nsynth-100", "Finetune", "all", (99.96, 84.73, 76.92, 71.06, 63.18, 40.15, 47.99, 38.33, 38.01, 37.86), 59.82, 62.10),
        ("nsynth-100", "iCaRL", "base", (99.98, 98.42, 99.25, 98.40, 94.56, 82.36, 85.09, 80.59, 75.78, 74.53), 88.90, 25.45),
        ("nsynth-100", "iCaRL", "incr", (None, 36.94, 31.88, 35.03, 38.33, 35.27, 30.76, 26.75, 25.52, 22.27), 31.42, 14.67),
        ("nsynth-100", "iCaRL", "all", (99.98, 93.30, 88.88, 84.82, 79.57, 67.65, 65.92, 59.65, 54.62, 51.01), 74.54, 48.97),
        ("nsynth-100", "DFSL", "base", (99.93, 99.11, 98.83, 95.83, 94.84, 94.81, 94.39, 93.76, 92.06, 91.61), 95.52, 8.32),
        ("nsynth-100", "DFSL", "incr", (None, 57.01, 55.57, 59.89, 59.35, 56.46, 52.29, 50.94, 52.57, 52.49), 55.17, 4.52),
        ("nsynth-100", "DFSL", "all", (99.93, 96.00, 92.95, 89.26, 86.47, 83.66, 80.28, 77.68, 76.12, 75.01), 85.74, 24.92),
        ("nsynth-100", "CEC", "base", (99.96, 99.87, 99.90, 99.29, 99.24, 99.30, 99.26, 99.24, 99.20, 99.23), 99.45, 0.73),
        ("nsynth-100", "CEC", "incr", (None, 71.06, 71.61, 72.37, 69.17, 69.20, 66.92, 64.80, 65.28, 63.59), 68.22, 7.47),
        ("nsynth-100", "CEC", "all", (99.96, 97.47, 95.56, 93.52, 91.22, 89.90, 87.85, 85.84, 84.92, 83.19), 90.94, 16.77),
        ("nsynth-100", "SC", "base", (99.98, 98.08, 98.69, 97.38, 96.44, 97.43, 96.99, 97.53, 96.10, 96.81), 97.56, 3.17),
        ("nsynth-100", "SC", "incr", (None, 95.60, 94.73, 93.45, 92.53, 85.20, 81.53, 78.50, 79.44, 77.86), 86.53, 17.74),
        ("nsynth-100", "SC", "all", (99.98, 97.88, 98.08, 96.53, 95.55, 93.61, 91.54, 90.13, 89.09, 88.29), 94.07, 11.69),
        ("nsynth-100", "fcac", "base", (100, 99.66, 99.84, 98.53, 98.40, 98.70, 98.02, 97.82, 98.13, 97.22), 98.63, 2.78),
        ("nsynth-100", "fcac", "incr", (None, 96.60, 93.60, 90.93, 90.65, 88.64, 85.17, 84.06, 85.68, 85.02), 88.93, 11.58),
        ("nsynth-100", "fcac", "all", (100, 99.40, 98.88, 96.90, 96.33, 95.55, 93.50, 92.47, 92.88, 91.73), 95.77, 8.27),
        ("ls-100", "Finetune", "base", (92.02, 72.90, 37.03, 28.12, 20.75, 14.45, 5.70, 3.23, 0.27), 30.50, 91.75),
        ("ls-100", "Finetune", "incr", (None, 86.60, 31.50, 28.87, 25.45, 24.24, 18.17, 13.46, 11.80), 30.01, 74.80),
        ("ls-100", "Finetune", "all", (92.02, 73.95, 36.24, 28.27, 21.93, 17.33, 9.86, 7.00, 4.88), 32.39, 87.14),
        ("ls-100", "iCaRL", "base", (92.02, 80.80, 73.18, 58.45, 26.95, 16.93, 32.58, 29.53, 26.38), 48.54, 65.64),
        ("ls-100", "iCaRL", "incr", (None, 58.00, 67.10, 57.40, 20.05, 16.48, 30.33, 26.83, 28.95), 38.14, 29.05),
        ("ls-100", "iCaRL", "all", (92.02, 79.05, 72.31, 58.24, 25.23, 16.80, 31.83, 28.54, 27.41), 47.94, 64.61),
        ("ls-100", "DFSL", "base", (91.93, 91.93, 91.88, 91.85, 91.83, 91.86, 91.85, 91.85, 91.84), 91.87, 0.09),
        ("ls-100", "DFSL", "incr", (None, 53.60, 61.90, 50.67, 48.90, 51.56, 47.97, 44.11, 45.38), 50.51, 8.22),
        ("ls-100", "DFSL", "all", (91.93, 88.97, 87.60, 83.61, 81.11, 80.01, 77.22, 74.26, 73.25), 81.99, 18.68),
        ("ls-100", "CEC", "base", (91.72, 91.67, 91.25, 91.14, 91.10, 91.07, 90.97, 90.66, 90.72), 91.14, 1.00),
        ("ls-100", "CEC", "incr", (None, 86.30, 82.76, 69.67, 68.25, 67.06, 66.03, 60.35, 60.05), 70.06, 26.25),
        ("ls-100", "CEC", "all", (91.72, 91.25, 90.04, 86.84, 85.38, 84.01, 82.65, 79.49, 78.45), 85.54, 13.27),
        ("ls-100", "SC", "base", (92.73, 92.72, 92.62, 92.48, 92.48, 92.47, 92.34, 90.74, 90.67), 92.14, 2.06),
        ("ls-100", "SC", "incr", (None, 86.84, 84.26, 77.74, 74.99, 75.79, 74.60, 72.45, 72.64), 77.41, 14.20),
        ("ls-100", "SC", "all", (92.73, 92.27, 91.42, 89.53, 88.10, 87.56, 86.43, 84.00, 83.45), 88.39, 9.28),
        ("ls-100", "fcac", "base", (92.97, 92.80, 92.37, 91.50, 91.58, 91.90, 91.70, 91.03, 90.88), 91.86, 2.09),
        ("ls-100", "fcac", "incr", (None, 99.60, 97.00, 92.73, 91.05, 89.64, 89.43, 86.14, 85.63), 91.40, 13.97),
        ("ls-100", "fcac", "all", (92.97, 93.32, 93.03, 91.75, 91.46, 91.24, 90.95, 89.23, 88.78), 91.41, 4.18)
    )

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def rows(
        cls: type[Self]
    ) -> list[ReferenceRow]:
        return [
            ReferenceRow(
                benchmark=benchmark,
                method=method,
                variant=variant,
                accuracies=accuracies,
                printed_aa=printed_aa,
                printed_pd=printed_pd
            )
            for benchmark, method, variant, accuracies, printed_aa, printed_pd in cls._ROWS
        ]

    @classmethod
    def row(
        cls: type[Self],
        benchmark: BenchmarkType,
        method: str,
        variant: VariantType
    ) -> ReferenceRow:
        for row in cls.rows():
            if (row.benchmark, row.method, row.variant) == (benchmark, method, variant):
                return row
        raise KeyError((benchmark, method, variant))

    @classmethod
    def check_cells(
        cls: type[Self]
    ) -> list[ReferenceCellCheck]:
        checks: list[ReferenceCellCheck] = []
        for row in cls.rows():
            aa, pd = row.computed()
            for cell, printed, computed, tolerance in (
                ("AA", row.printed_aa, aa, cls.AA_TOLERANCE),
                ("PD", row.printed_pd, pd, cls.PD_TOLERANCE)
            ):
                checks.append(ReferenceCellCheck(
                    row=row,
                    cell=cell,
                    printed=printed,
                    computed=computed,
                    tolerance=tolerance,
                    known_erratum=(row.benchmark, row.method, row.variant, cell) in cls.ERRATA
                ))
        return checks

    @classmethod
    def failures(
        cls: type[Self]
    ) -> list[ReferenceCellCheck]:
        # Known errata are reported separately and never count as failures.
        return [check for check in cls.check_cells() if not check.passed and not check.known_erratum]
