"""File ingestion and export for the benchmark harness.

Supported formats:

* MatrixMarket coordinate symmetric real -> :class:`SpsdMatrix`
* CSV of points (comma separated, optional header row) -> :class:`PointCloud`
* edge lists (``i j [weight]`` or comma separated, ``#`` comments) -> :class:`Graph`

Parse errors carry the offending line number.
"""

import csv

import numpy as np

from .core import SpsdMatrix
from .kernels import Graph, PointCloud

__all__ = [
    "DataFormatError",
    "load_dataset",
    "read_matrix_market",
    "write_matrix_market",
    "read_points_csv",
    "read_edge_list",
]

FORMATS = ("matrix_market", "csv_points", "edge_list")


class DataFormatError(ValueError):
    """A file failed to parse; the message names the file and line."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def load_dataset(path, format):
    """Load a dataset file into the matching domain object."""
    if format == "matrix_market":
        return read_matrix_market(path)
    if format == "csv_points":
        return read_points_csv(path)
    if format == "edge_list":
        return read_edge_list(path)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


def read_matrix_market(path, psd_tolerance=1e-8):
    """Read a MatrixMarket coordinate symmetric real file as an SpsdMatrix."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise DataFormatError(path, 1, "empty file")
    header = lines[0].strip().split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise DataFormatError(path, 1, f"not a MatrixMarket header: {lines[0].strip()!r}")
    obj, fmt, field, symmetry = (t.lower() for t in header[1:])
    if obj != "matrix" or fmt != "coordinate" or field != "real":
        raise DataFormatError(
            path, 1, f"unsupported MatrixMarket flavor {obj}/{fmt}/{field}"
        )
    if symmetry != "symmetric":
        raise DataFormatError(
            path, 1, f"need a symmetric matrix, header declares {symmetry!r}"
        )
    line_no = 1
    size_line = None
    for line in lines[1:]:
        line_no += 1
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        size_line = text
        break
    if size_line is None:
        raise DataFormatError(path, line_no, "missing size line")
    parts = size_line.split()
    if len(parts) != 3:
        raise DataFormatError(path, line_no, f"bad size line: {size_line!r}")
    try:
        rows, cols, nnz = (int(p) for p in parts)
    except ValueError:
        raise DataFormatError(path, line_no, f"bad size line: {size_line!r}") from None
    if rows != cols:
        raise DataFormatError(path, line_no, f"matrix is {rows}x{cols}, expected square")
    a = np.zeros((rows, rows))
    seen = 0
    for offset, line in enumerate(lines[line_no:], start=line_no + 1):
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise DataFormatError(path, offset, f"bad entry line: {text!r}")
        try:
            i, j, value = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise DataFormatError(path, offset, f"bad entry line: {text!r}") from None
        if not (1 <= i <= rows and 1 <= j <= rows):
            raise DataFormatError(path, offset, f"index ({i}, {j}) out of range")
        a[i - 1, j - 1] = value
        a[j - 1, i - 1] = value
        seen += 1
    if seen != nnz:
        raise DataFormatError(
            path, len(lines), f"expected {nnz} entries, found {seen}"
        )
    try:
        return SpsdMatrix(a, psd_tolerance=psd_tolerance)
    except ValueError as exc:
        raise DataFormatError(path, 1, str(exc)) from exc


def write_matrix_market(matrix, path):
    """Write an SpsdMatrix (or symmetric array) in coordinate symmetric form.

    Entries are written with 17 significant digits, which round-trips
    IEEE doubles exactly.
    """
    a = matrix.entries if hasattr(matrix, "entries") else np.asarray(matrix)
    n = a.shape[0]
    ii, jj = np.nonzero(np.tril(a))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{n} {n} {len(ii)}\n")
        for i, j in zip(ii, jj):
            fh.write(f"{i + 1} {j + 1} {a[i, j]:.17g}\n")


def _looks_like_header(tokens):
    for tok in tokens:
        try:
            float(tok)
        except ValueError:
            return True
    return False


def read_points_csv(path):
    """Read a comma-separated point cloud, sniffing an optional header row."""
    rows = []
    names = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, tokens in enumerate(reader, start=1):
            tokens = [t.strip() for t in tokens if t.strip() != ""]
            if not tokens:
                continue
            if line_no == 1 and _looks_like_header(tokens):
                names = tuple(tokens)
                continue
            try:
                rows.append([float(t) for t in tokens])
            except ValueError:
                raise DataFormatError(
                    path, line_no, f"non-numeric value in {tokens!r}"
                ) from None
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise DataFormatError(
                    path, line_no,
                    f"row has {len(rows[-1])} values, expected {len(rows[0])}",
                )
    if not rows:
        raise DataFormatError(path, 1, "no data rows")
    return PointCloud(X=np.array(rows), feature_names=names)


def read_edge_list(path):
    """Read an undirected edge list: ``i j [weight]`` per line.

    Comma or whitespace separated; lines starting with ``#`` are comments.
    Node count is one plus the largest index seen.
    """
    edges = []
    max_node = -1
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.replace(",", " ").split()
            if len(parts) not in (2, 3):
                raise DataFormatError(path, line_no, f"bad edge line: {text!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise DataFormatError(path, line_no, f"bad edge line: {text!r}") from None
            if i < 0 or j < 0:
                raise DataFormatError(path, line_no, "negative node index")
            edges.append((i, j, w))
            max_node = max(max_node, i, j)
    if max_node < 0:
        raise DataFormatError(path, 1, "no edges")
    return Graph(n=max_node + 1, edges=tuple(edges))
