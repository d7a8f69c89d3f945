"""Side-by-side mIoU table of several runs."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

from carloc.evalsuite.report import EvalReport

Row = Tuple[str, float, int]


@dataclass(frozen=True)
class ComparisonTable:
    rows: Tuple[Row, ...]

    def render_text(self) -> str:
        header = ("run", "mIoU", "images")
        cells = [header] + [(name, f"{miou:.4f}", str(n)) for name, miou, n in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(3)]
        lines = [
            f"{row[0]:<{widths[0]}}  {row[1]:>{widths[1]}}  {row[2]:>{widths[2]}}" for row in cells
        ]
        lines.insert(1, "-" * len(lines[0]))
        return "\n".join(lines)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run_name", "miou", "n_images"])
            for name, miou, n in self.rows:
                writer.writerow([name, repr(miou), n])
        return path


def compare_runs(reports: Sequence[EvalReport]) -> ComparisonTable:
    """Rows by descending mIoU; ties ordered by run name."""

    rows: List[Row] = [(r.run_name, r.miou, r.n_images) for r in reports]
    rows.sort(key=lambda row: (-row[1], row[0]))
    return ComparisonTable(tuple(rows))
