"""Result writers: convergence CSV, PGM density image, legacy VTK field file.

Numbers are written with 17 significant digits so CSV values round-trip to the
exact doubles and repeated runs with the same configuration are byte-identical.
"""
from __future__ import annotations

import numpy as np

from .simpl import OptTrace

__all__ = ["write_convergence_csv", "write_pgm", "write_vtk"]

CSV_HEADER = "iter,F,alpha,mu,kkt,stationarity,backtracks,evals"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_convergence_csv(trace: OptTrace, path) -> None:
    """One row per iteration (row 0 = initial design) with the trace columns."""
    lines = [CSV_HEADER]
    for i in range(len(trace.F)):
        lines.append(
            ",".join(
                [
                    str(i),
                    _fmt(trace.F[i]),
                    _fmt(trace.alpha[i]),
                    _fmt(trace.mu[i]),
                    _fmt(trace.kkt[i]),
                    _fmt(trace.stationarity[i]),
                    str(trace.backtracks[i]),
                    str(trace.evals[i]),
                ]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_pgm(values_2d: np.ndarray, path) -> None:
    """ASCII PGM (P2) of a cell field given as a (ny, nx) array with row 0 at
    the bottom of the domain.  Pixels are 255 - round(255 * value) so solid
    material renders black; image row 0 is the top of the domain."""
    arr = np.asarray(values_2d, dtype=float)
    ny, nx = arr.shape
    pix = 255 - np.rint(255.0 * np.clip(arr, 0.0, 1.0)).astype(int)
    lines = ["P2", f"{nx} {ny}", "255"]
    for row in pix[::-1]:
        lines.append(" ".join(str(p) for p in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_vtk(
    path,
    nx: int,
    ny: int,
    hx: float,
    hy: float,
    cell_fields: dict[str, np.ndarray],
    point_fields: dict[str, np.ndarray],
    title: str = "simplopt fields",
) -> None:
    """Legacy ASCII VTK STRUCTURED_POINTS file.

    Cell fields are (ny, nx) arrays, point fields (ny+1, nx+1), both with row
    0 at the bottom (VTK's native ordering: x fastest, then y)."""
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx + 1} {ny + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {_fmt(hx)} {_fmt(hy)} 1",
    ]
    if cell_fields:
        lines.append(f"CELL_DATA {nx * ny}")
        for name, arr in cell_fields.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (ny, nx):
                raise ValueError(f"cell field {name!r} must have shape (ny, nx)")
            lines.append(f"SCALARS {name} float 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in arr.ravel())
    if point_fields:
        lines.append(f"POINT_DATA {(nx + 1) * (ny + 1)}")
        for name, arr in point_fields.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (ny + 1, nx + 1):
                raise ValueError(f"point field {name!r} must have shape (ny+1, nx+1)")
            lines.append(f"SCALARS {name} float 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in arr.ravel())
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
