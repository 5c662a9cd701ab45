"""Legacy-VTK field snapshots and CSV time series.

All numbers are written with ``%.17g`` so identical runs give identical
bytes.
"""

from __future__ import annotations

import os
from typing import List, Sequence

import numpy as np

from .errors import PorePDError

FMT = "%.17g"


def _fmt_rows(arr: np.ndarray) -> str:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    line = " ".join([FMT] * arr.shape[1])
    return "\n".join(line % tuple(row) for row in arr.tolist()) + "\n"


def write_csv(path, header: Sequence[str], rows) -> str:
    rows = np.asarray(rows, dtype=float).reshape(-1, len(header))
    line = ",".join([FMT] * len(header))
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows.tolist():
                fh.write(line % tuple(row) + "\n")
    except OSError as exc:
        raise PorePDError(f"cannot write {path}: {exc}") from exc
    return os.fspath(path)


def write_vtk(path, grid, u, p, phi, aperture, title: str = "porepd") -> str:
    """STRUCTURED_GRID snapshot; node data u, p, phi and cell data aperture."""
    n = grid.n_nodes
    pts = np.column_stack([grid.coords, np.zeros(n)])
    u3 = np.column_stack([np.asarray(u).reshape(n, 2), np.zeros(n)])
    parts = [
        "# vtk DataFile Version 3.0\n",
        title.replace("\n", " ")[:255] + "\n",
        "ASCII\n",
        "DATASET STRUCTURED_GRID\n",
        f"DIMENSIONS {grid.nx + 1} {grid.ny + 1} 1\n",
        f"POINTS {n} double\n",
        _fmt_rows(pts),
        f"POINT_DATA {n}\n",
        "VECTORS displacement double\n",
        _fmt_rows(u3),
    ]
    for name, values in (("pressure", p), ("damage", phi)):
        parts += [f"SCALARS {name} double 1\n", "LOOKUP_TABLE default\n", _fmt_rows(np.reshape(values, (-1, 1)))]
    ne = grid.nx * grid.ny
    parts += [f"CELL_DATA {ne}\n", "SCALARS aperture double 1\n", "LOOKUP_TABLE default\n",
              _fmt_rows(np.reshape(aperture, (-1, 1)))]
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("".join(parts))
    except OSError as exc:
        raise PorePDError(f"cannot write {path}: {exc}") from exc
    return os.fspath(path)


class OutputWriter:
    """Writes snapshots and series into one directory (created on first write)."""

    def __init__(self, directory, fields: bool = True, series: bool = True):
        self.directory = os.fspath(directory)
        self.fields = fields
        self.series_enabled = series
        self.files: List[str] = []

    def _path(self, name: str) -> str:
        try:
            os.makedirs(self.directory, exist_ok=True)
        except OSError as exc:
            raise PorePDError(f"cannot create output directory {self.directory}: {exc}") from exc
        return os.path.join(self.directory, name)

    def field_snapshot(self, sim) -> None:
        if not self.fields:
            return
        st = sim.state
        path = self._path(f"fields_{st.step:07d}.vtk")
        self.files.append(write_vtk(path, sim.grid, st.u, st.p, st.phi, sim.aperture,
                                    title=f"porepd step {st.step} time {st.time:.17g}"))

    def series(self, result) -> None:
        if not self.series_enabled:
            return
        for name, data in result.series.items():
            header = ["time", "length", "tip"] if name == "crack_length" else ["time", "value"]
            self.files.append(write_csv(self._path(f"{name}.csv"), header, data))
        if "crack_length" in result.series:
            rows = [(e["time"], e["location"], e["gap"],
                     np.nan if e["resolved_time"] is None else e["resolved_time"]) for e in result.events]
            self.files.append(write_csv(self._path("forerunning_events.csv"),
                                        ["time", "location", "gap", "resolved_time"], rows))
