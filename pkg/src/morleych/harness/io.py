"""CSV and legacy-VTK writers."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..mesh import Mesh

TRACE_HEADER = ("step", "time", "energy", "mass", "linf", "increment_l2", "newton_iters")


class OutputError(OSError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _open(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_trace_csv(trace, path) -> Path:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in trace.rows():
            w.writerow([_fmt(v) for v in row])
    return Path(path)


def read_trace_csv(path) -> list[dict]:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({k: (int(v) if k in ("step", "newton_iters") else float(v)) for k, v in r.items()})
    return out


def write_field_vtk(u: np.ndarray, mesh: Mesh, path, name: str = "u") -> Path:
    """ASCII legacy VTK unstructured grid; point data are the vertex values."""
    nv, nt = mesh.n_vertices, mesh.n_triangles
    lines = ["# vtk DataFile Version 3.0", f"Morley field {name}", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    lines += [f"POINT_DATA {nv}", f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines += [_fmt(v) for v in np.asarray(u)[:nv]]
    with _open(path) as fh:
        fh.write("\n".join(lines) + "\n")
    return Path(path)


def write_contour_csv(contours, path) -> Path:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("polyline_id", "x", "y"))
        for i, poly in enumerate(contours):
            for x, y in poly:
                w.writerow((i, _fmt(x), _fmt(y)))
    return Path(path)


def read_contour_csv(path) -> list[np.ndarray]:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    groups: dict[int, list] = {}
    for r in rows:
        groups.setdefault(int(r["polyline_id"]), []).append((float(r["x"]), float(r["y"])))
    return [np.array(groups[k]) for k in sorted(groups)]


def write_report_csv(report, path=None, stream=None) -> None:
    cols = report.norms
    rows = [("study", report.variable, *cols)]
    for res, errs in zip(report.resolutions, report.errors):
        rows.append((report.kind, _fmt(res), *(_fmt(e) for e in errs)))
    rows.append((report.kind, "order", *(_fmt(report.orders[c]) for c in cols)))
    text = "\n".join(",".join(r) for r in rows) + "\n"
    if path is not None:
        with _open(path) as fh:
            fh.write(text)
    if stream is not None:
        stream.write(text)
