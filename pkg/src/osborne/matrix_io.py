"""Readers for Matrix Market coordinate files and dense CSV."""

import csv

import numpy as np
import scipy.sparse as sp

__all__ = ["ParseError", "parse_matrix", "read_matrix_market", "read_dense_csv", "FORMATS"]

FORMATS = ("matrix-market", "dense-csv")


class ParseError(ValueError):
    def __init__(self, message, path=None, line=None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


def read_matrix_market(path):
    """Coordinate, real (or integer), general.  Duplicate entries are summed.

    Returns a ``scipy.sparse.csr_matrix``.
    """
    rows, cols, vals = [], [], []
    shape = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if lineno == 1:
                head = text.split()
                if len(head) != 5 or head[0].lower() != "%%matrixmarket":
                    raise ParseError("missing %%MatrixMarket header", path, lineno)
                obj, fmt, field, sym = (h.lower() for h in head[1:])
                if obj != "matrix" or fmt != "coordinate":
                    raise ParseError(f"unsupported object/format {obj} {fmt}", path, lineno)
                if field not in ("real", "integer", "double"):
                    raise ParseError(f"field must be real, got {field}", path, lineno)
                if sym != "general":
                    raise ParseError(f"symmetry must be general, got {sym}", path, lineno)
                continue
            if not text or text.startswith("%"):
                continue
            parts = text.split()
            if shape is None:
                if len(parts) != 3:
                    raise ParseError("size line needs rows, columns, entries", path, lineno)
                try:
                    m, n, nnz = (int(p) for p in parts)
                except ValueError:
                    raise ParseError("size line must hold integers", path, lineno) from None
                if m != n:
                    raise ParseError(f"matrix must be square, got {m}x{n}", path, lineno)
                shape = (m, n, nnz)
                continue
            if len(parts) != 3:
                raise ParseError("entry line needs row, column, value", path, lineno)
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ParseError(f"bad entry {text!r}", path, lineno) from None
            if not (1 <= i <= shape[0] and 1 <= j <= shape[1]):
                raise ParseError(f"index ({i}, {j}) out of range", path, lineno)
            if not np.isfinite(v):
                raise ParseError(f"non-finite value {parts[2]!r}", path, lineno)
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
    if shape is None:
        raise ParseError("missing size line", path)
    if len(vals) != shape[2]:
        raise ParseError(f"expected {shape[2]} entries, found {len(vals)}", path)
    return sp.coo_matrix((vals, (rows, cols)), shape=shape[:2]).tocsr()


def read_dense_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                raise ParseError(f"non-numeric value in {rec!r}", path, lineno) from None
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(
                    f"row has {len(rows[-1])} columns, expected {len(rows[0])}", path, lineno
                )
    if not rows:
        raise ParseError("empty matrix", path)
    a = np.array(rows)
    if a.shape[0] != a.shape[1]:
        raise ParseError(f"matrix must be square, got {a.shape[0]}x{a.shape[1]}", path)
    if not np.all(np.isfinite(a)):
        raise ParseError("non-finite value", path)
    return a


def parse_matrix(path, fmt="matrix-market"):
    if fmt == "matrix-market":
        return read_matrix_market(path)
    if fmt == "dense-csv":
        return read_dense_csv(path)
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
