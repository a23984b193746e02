"""Exact rational helpers and the min-plus kernels everything else is built on.

Matrices are handled as tuples of tuples of :class:`fractions.Fraction`.  The
heavy kernels (all-pairs shortest paths, blockwise attachment) rescale the
entries to integers over a common denominator and run on numpy arrays; the
int64 fast path is used only when no intermediate sum can overflow, otherwise
the same code runs on object arrays of Python ints.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

Matrix = tuple[tuple[Fraction, ...], ...]

_INT64_SAFE = 2**61


def to_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings.  Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not distances")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError(f"refusing inexact float {value!r}; pass a Fraction or 'p/q' string")
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fmt(q: Fraction) -> str:
    """Canonical text form: ``"p/q"`` in lowest terms, ``"p"`` when q == 1."""
    return str(Fraction(q))


def as_matrix(rows: Iterable[Iterable]) -> Matrix:
    return tuple(tuple(to_fraction(v) for v in row) for row in rows)


def common_scale(mats: Sequence[Sequence[Sequence[Fraction]]]) -> int:
    scale = 1
    for mat in mats:
        for row in mat:
            for v in row:
                d = v.denominator
                if scale % d:
                    scale = scale * d // math.gcd(scale, d)
    return scale


def to_int_array(mat: Sequence[Sequence[Fraction]], scale: int, dtype) -> np.ndarray:
    n = len(mat)
    out = np.empty((n, len(mat[0]) if n else 0), dtype=dtype)
    for i, row in enumerate(mat):
        for j, v in enumerate(row):
            out[i, j] = v.numerator * (scale // v.denominator)
    return out


def pick_dtype(mats: Sequence[Sequence[Sequence[Fraction]]], scale: int, factor: int = 4):
    """int64 when ``factor * max entry`` stays clear of overflow, else object."""
    biggest = 0
    for mat in mats:
        for row in mat:
            for v in row:
                a = abs(v.numerator) * (scale // v.denominator)
                if a > biggest:
                    biggest = a
    return np.int64 if biggest * factor < _INT64_SAFE else object


def from_int_array(arr: np.ndarray, scale: int) -> Matrix:
    cache: dict[int, Fraction] = {}
    rows = []
    for row in arr.tolist():
        out = []
        for v in row:
            f = cache.get(v)
            if f is None:
                f = Fraction(int(v), scale)
                cache[v] = f
            out.append(f)
        rows.append(tuple(out))
    return tuple(rows)


def floyd_warshall_int(arr: np.ndarray) -> np.ndarray:
    """In-place min-plus closure of a square integer array."""
    n = arr.shape[0]
    for k in range(n):
        np.minimum(arr, arr[:, k : k + 1] + arr[k : k + 1, :], out=arr)
    return arr


def shortest_path_closure(mat: Sequence[Sequence[Fraction]]) -> Matrix:
    """All-pairs shortest paths of a complete weighted graph given as a matrix.

    Entries must be finite nonnegative rationals; the diagonal is forced to 0.
    """
    n = len(mat)
    if n == 0:
        return ()
    scale = common_scale([mat])
    arr = to_int_array(mat, scale, pick_dtype([mat], scale))
    np.fill_diagonal(arr, 0)
    floyd_warshall_int(arr)
    return from_int_array(arr, scale)
