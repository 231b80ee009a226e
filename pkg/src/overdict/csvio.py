"""Plain-text persistence for matrices, supports, graphs and small tables.

Matrices are written as CSV preceded by ``# rows=<rows> cols=<cols>``,
one matrix row per line, every value with 17 significant digits so that
doubles round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path

import numpy as np

_MATRIX_HEADER = re.compile(r"#\s*rows=(\d+)\s+cols=(\d+)")
_GRAPH_HEADER = re.compile(r"#\s*n=(\d+)\s+rho=(\S+)")


def format_float(x: float) -> str:
    return "%.17g" % x


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(getattr(M, "columns", getattr(M, "values", M)), dtype=float))
    rows, cols = M.shape
    buf = io.StringIO()
    buf.write(f"# rows={rows} cols={cols}\n")
    for row in M:
        buf.write(",".join(format_float(v) for v in row))
        buf.write("\n")
    Path(path).write_text(buf.getvalue())


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline()
        match = _MATRIX_HEADER.match(header)
        if not match:
            raise ValueError(f"{path}: missing '# rows=.. cols=..' header")
        rows, cols = int(match.group(1)), int(match.group(2))
        data = np.loadtxt(fh, delimiter=",", ndmin=2) if rows else np.empty((0, cols))
    if data.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, found {data.shape}")
    return data


def write_supports(path, supports) -> None:
    """One line per sample column: comma-separated atom indices."""
    lines = [",".join(str(int(i)) for i in sup) for sup in supports]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_supports(path) -> list[np.ndarray]:
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        out.append(np.array([int(t) for t in line.split(",")], dtype=np.intp) if line else np.empty(0, np.intp))
    return out


def write_edges(path, n: int, rho: float, edges: np.ndarray) -> None:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    buf = io.StringIO()
    buf.write(f"# n={n} rho={format_float(rho)}\n")
    np.savetxt(buf, edges, fmt="%d", delimiter=",")
    Path(path).write_text(buf.getvalue())


def read_edges(path) -> tuple[int, float, np.ndarray]:
    with open(path) as fh:
        match = _GRAPH_HEADER.match(fh.readline())
        if not match:
            raise ValueError(f"{path}: missing '# n=.. rho=..' header")
        edges = np.loadtxt(fh, delimiter=",", dtype=np.int64, ndmin=2).reshape(-1, 2)
    return int(match.group(1)), float(match.group(2)), edges


def write_table(path, fieldnames, rows) -> None:
    """Header row plus one line per mapping in ``rows``."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in fieldnames})


def read_table(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value
