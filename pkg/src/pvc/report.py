"""Per-device throughput accounting and its table rendering.

A report row is one device's completed-items rate and its percentage of
the fleet total; the "All" row is the sum of the row rates.  Shares are
rounded half-up to two decimals, so they sum to 100 within rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def round_half_up(x: float, decimals: int = 2) -> float:
    scale = 10 ** decimals
    return math.floor(x * scale + 0.5) / scale


@dataclass(frozen=True)
class ReportRow:
    device: str
    items_per_s: float
    share_pct: float


@dataclass(frozen=True)
class ThroughputReport:
    rows: tuple[ReportRow, ...]
    all_row: ReportRow
    duplicates: int
    reprocessed: int

    def format_table(self) -> str:
        width = max([len("Device"), len(self.all_row.device)]
                    + [len(r.device) for r in self.rows])
        lines = [f"{'Device':<{width}}  {'items/s':>12}  {'%':>7}"]
        lines.append("-" * (width + 23))
        for row in list(self.rows) + [self.all_row]:
            lines.append(f"{row.device:<{width}}  {row.items_per_s:>12.2f}"
                         f"  {row.share_pct:>7.2f}")
        lines.append(f"duplicates={self.duplicates} reprocessed={self.reprocessed}")
        return "\n".join(lines)


def share_pct(rate: float, total: float) -> float:
    if total <= 0:
        return 0.0
    return round_half_up(rate / total * 100.0, 2)


def make_report(device_completed: list[tuple[str, int]], wall_s: float,
                duplicates: int = 0, reprocessed: int = 0) -> ThroughputReport:
    """Build the report from (device label, completed count) pairs and the
    wall-clock duration.  Repeated labels get a " (2)"-style suffix."""
    seen: dict[str, int] = {}
    rows = []
    rates = []
    for label, completed in device_completed:
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label} ({seen[label]})"
        rate = completed / wall_s if wall_s > 0 else 0.0
        rows.append((label, rate))
        rates.append(rate)
    total = sum(rates)
    report_rows = tuple(ReportRow(label, rate, share_pct(rate, total))
                        for label, rate in rows)
    return ThroughputReport(
        rows=report_rows,
        all_row=ReportRow("All", total, 100.0),
        duplicates=duplicates,
        reprocessed=reprocessed,
    )
