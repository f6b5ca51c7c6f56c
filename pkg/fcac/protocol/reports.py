from __future__ import annotations


import csv
import io
import pathlib
from typing import (
    Never,
    Self
)

import rich.box
import rich.table
import yaml

from ..exceptions import IoError
from .metrics import VariantType
from .run_report import RunReport


class Reports:
    """
    Run report writers.

    The table form mirrors the published layout: one `Base`, `Incr.` and
    `All` row per method, accuracies in percent per session, then AA and PD.
    A second block lists the evaluation counts behind every accuracy.
    """

    __slots__ = ()

    ROW_LABELS: dict[VariantType, str] = {
        "base": "Base",
        "incr": "Incr.",
        "all": "All"
    }

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def _percent(
        cls: type[Self],
        value: float | None
    ) -> str:
        return "-" if value is None else f"{100.0 * value:.2f}"

    @classmethod
    def table_rows(
        cls: type[Self],
        report: RunReport
    ) -> list[list[str]]:
        summary = report.summary
        rows = [[
            "method",
            "row",
            *(f"session_{metrics.session_index}" for metrics in report.sessions),
            "AA",
            "PD"
        ]]
        for variant, label in cls.ROW_LABELS.items():
            aa, pd = summary.get(variant, (None, None))
            rows.append([
                report.method,
                label,
                *(cls._percent(value) for value in report.row(variant)),
                cls._percent(aa),
                cls._percent(pd)
            ])
        return rows

    @classmethod
    def count_rows(
        cls: type[Self],
        report: RunReport
    ) -> list[list[str]]:
        rows = [["session", "n_base", "correct_base", "n_incr", "correct_incr", "n_all", "correct_all"]]
        rows.extend(
            [
                str(metrics.session_index),
                str(metrics.n_base),
                str(metrics.correct_base),
                str(metrics.n_incr),
                str(metrics.correct_incr),
                str(metrics.n_all),
                str(metrics.correct_all)
            ]
            for metrics in report.sessions
        )
        return rows

    @classmethod
    def table_text(
        cls: type[Self],
        report: RunReport
    ) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerows(cls.table_rows(report))
        writer.writerow([])
        writer.writerows(cls.count_rows(report))
        return buffer.getvalue()

    @classmethod
    def structured_text(
        cls: type[Self],
        report: RunReport
    ) -> str:
        return yaml.safe_dump(report.to_dict(), sort_keys=True)

    @classmethod
    def _write(
        cls: type[Self],
        path: pathlib.Path,
        text: str
    ) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as error:
            raise IoError(f"Cannot write report '{path}': {error}") from error

    @classmethod
    def write_table(
        cls: type[Self],
        report: RunReport,
        path: pathlib.Path
    ) -> None:
        cls._write(path, cls.table_text(report))

    @classmethod
    def write_structured(
        cls: type[Self],
        report: RunReport,
        path: pathlib.Path
    ) -> None:
        cls._write(path, cls.structured_text(report))

    @classmethod
    def render(
        cls: type[Self],
        report: RunReport
    ) -> rich.table.Table:
        header, *rows = cls.table_rows(report)
        table = rich.table.Table(
            *header[1:],
            title=f"{report.method} (seed {report.seed}, config {report.config_digest})",
            box=rich.box.ASCII
        )
        for row in rows:
            table.add_row(*row[1:])
        if report.clustering_ratio is not None:
            table.caption = f"Base clustering ratio {report.clustering_ratio:.4f}"
        return table
