"""Dense exact linear algebra over Q on tuples of tuples."""

from __future__ import annotations

from typing import Sequence

from .polycore import Q, Rational, format_rational

Matrix = tuple[tuple[Rational, ...], ...]


class SingularMatrixError(ValueError):
    pass


def matrix(rows: Sequence[Sequence]) -> Matrix:
    m = tuple(tuple(Q(v) for v in row) for row in rows)
    if m and any(len(row) != len(m[0]) for row in m):
        raise ValueError("ragged matrix")
    return m


def identity(n: int) -> Matrix:
    return tuple(tuple(Q(int(i == j)) for j in range(n)) for i in range(n))


def is_square(a: Matrix) -> bool:
    return all(len(row) == len(a) for row in a)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else ()


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a and len(a[0]) != len(b):
        raise ValueError("shape mismatch in matrix product")
    cols = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Q(0)) for col in cols) for row in a)


def matvec(a: Matrix, v: Sequence) -> tuple[Rational, ...]:
    return tuple(sum((x * Q(y) for x, y in zip(row, v)), Q(0)) for row in a)


def _echelon(rows: list[list[Rational]], ncols: int):
    """In-place reduced row echelon form; returns pivot columns and determinant sign/product."""
    pivots = []
    det = Q(1)
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            det = Q(0)
            continue
        if pivot != r:
            rows[r], rows[pivot] = rows[pivot], rows[r]
            det = -det
        pv = rows[r][c]
        det *= pv
        inv = 1 / pv
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [v - f * w for v, w in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots, det


def det(a: Matrix) -> Rational:
    if not is_square(a):
        raise ValueError("determinant of a non-square matrix")
    if not a:
        return Q(1)
    rows = [list(row) for row in a]
    pivots, d = _echelon(rows, len(a))
    return d if len(pivots) == len(a) else Q(0)


def rank(a: Matrix) -> int:
    if not a:
        return 0
    rows = [list(row) for row in a]
    pivots, _ = _echelon(rows, len(a[0]))
    return len(pivots)


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    if not is_square(a):
        raise ValueError("inverse of a non-square matrix")
    rows = [list(row) + [Q(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    pivots, _ = _echelon(rows, n)
    if pivots != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return tuple(tuple(row[n:]) for row in rows)


def solve(a: Matrix, b: Sequence) -> tuple[Rational, ...]:
    inv = inverse(a)
    return matvec(inv, b)


def to_json(a: Matrix) -> list[list[str]]:
    return [[format_rational(v) for v in row] for row in a]


def from_json(rows) -> Matrix:
    return matrix([[Q(str(v)) for v in row] for row in rows])
