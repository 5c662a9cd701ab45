"""Crack-length tracking and forerunning detection along a straight path."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


@dataclass
class CrackRecord:
    time: float
    tip: float
    length: float
    islands: List[tuple] = field(default_factory=list)   # (location, gap)


def crack_metrics(phi_line, x_line, spacing: float, threshold: float = 0.5, gap_cells: float = 2.0,
                  x_start: Optional[float] = None, time: float = 0.0) -> CrackRecord:
    """Continuous tip, total cracked length and damaged islands ahead of the tip.

    ``phi_line`` is the damage of the path nodes ordered by ``x_line``
    (increasing, starting at the symmetry line).  The tip is the last node of
    the contiguous cracked run from ``x_line[0]``; with no such run the tip
    is ``x_start`` (default ``x_line[0] - spacing``).  Each cracked node
    at least ``gap_cells`` spacings beyond the tip that starts a new cracked
    run is reported as an island ``(location, gap = location - tip)``.
    """
    phi_line = np.asarray(phi_line)
    x_line = np.asarray(x_line)
    cracked = phi_line >= threshold
    length = spacing * int(cracked.sum())
    if cracked.size and cracked[0]:
        first_gap = np.argmin(cracked) if not cracked.all() else cracked.size
        tip = float(x_line[first_gap - 1])
    else:
        first_gap = 0
        tip = float(x_line[0] - spacing) if x_start is None else float(x_start)
    islands = []
    tol = 1e-9 * spacing
    for k in range(first_gap, cracked.size):
        if cracked[k] and (k == 0 or not cracked[k - 1]):
            gap = float(x_line[k]) - tip
            if gap >= gap_cells * spacing - tol:
                islands.append((float(x_line[k]), gap))
    return CrackRecord(time, tip, length, islands)


class CrackTracker:
    """Time series of crack metrics with forerunning-event bookkeeping.

    An event opens when an island appears ahead of the continuous tip and is
    closed (resolved) once the tip reaches the island location.
    """

    def __init__(self, x_line, spacing: float, threshold: float, gap_cells: float = 2.0):
        self.x_line = np.asarray(x_line)
        self.spacing = spacing
        self.threshold = threshold
        self.gap_cells = gap_cells
        self.records: List[CrackRecord] = []
        self.events: List[dict] = []
        self._open = {}

    def update(self, phi_line, time: float) -> CrackRecord:
        rec = crack_metrics(phi_line, self.x_line, self.spacing, self.threshold, self.gap_cells, time=time)
        self.records.append(rec)
        for loc, gap in rec.islands:
            if loc not in self._open:
                ev = {"time": time, "location": loc, "gap": gap, "resolved_time": None}
                self._open[loc] = ev
                self.events.append(ev)
        for loc, ev in list(self._open.items()):
            if rec.tip >= loc - 1e-9 * self.spacing:
                ev["resolved_time"] = time
                del self._open[loc]
        return rec

    def arrays(self):
        t = np.array([r.time for r in self.records])
        tip = np.array([r.tip for r in self.records])
        length = np.array([r.length for r in self.records])
        return t, tip, length
