"""
Small dense linear algebra over commutative coefficient rings (CRat, Jet).

Matrices are lists of rows. Inversion is Gauss-Jordan with pivots chosen
among entries that are units of the ring.
"""
import itertools
import logging
from fractions import Fraction
from typing import List, Sequence

import sympy

from exceptions import NotInvertibleError
from quantization.coeff import CRat

logger = logging.getLogger(__name__)

Matrix = List[List[object]]


def is_unit(x) -> bool:
    """A jet or scalar is a unit iff its constant term is nonzero."""
    return bool(x.constant())


def identity_matrix(n: int, one, zero) -> Matrix:
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence[object]], b: Sequence[Sequence[object]], zero) -> Matrix:
    n, k, p = len(a), len(b), len(b[0]) if b else 0
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc = zero
            for t in range(k):
                acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def invert_matrix(rows: Sequence[Sequence[object]], one, zero) -> Matrix:
    """Inverse of a square matrix whose entries are Jets or CRats."""
    n = len(rows)
    x = [list(r) for r in rows]
    y = identity_matrix(n, one, zero)

    for i in range(n):
        # find a unit pivot at or below the diagonal
        for j in range(i, n):
            if is_unit(x[j][i]):
                if j != i:
                    x[i], x[j] = x[j], x[i]
                    y[i], y[j] = y[j], y[i]
                break
        else:
            raise NotInvertibleError(f"Matrix is not invertible at the base point (column {i})")

        inv = x[i][i].invert()
        x[i] = [e * inv for e in x[i]]
        y[i] = [e * inv for e in y[i]]

        for j in range(n):
            if j == i:
                continue
            factor = x[j][i]
            if factor.is_exact_zero():
                continue
            x[j] = [a - factor * b for a, b in zip(x[j], x[i])]
            y[j] = [a - factor * b for a, b in zip(y[j], y[i])]
    return y


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def determinant(rows: Sequence[Sequence[object]], one) -> object:
    """Leibniz expansion; the sizes used here never exceed 4."""
    n = len(rows)
    if n == 0:
        return one
    total = None
    for perm in itertools.permutations(range(n)):
        term = one
        for i, j in enumerate(perm):
            term = term * rows[i][j]
        if _permutation_sign(perm) < 0:
            term = -term
        total = term if total is None else total + term
    return total


def minor(rows: Sequence[Sequence[object]], row_idx: Sequence[int], col_idx: Sequence[int], one) -> object:
    return determinant([[rows[i][j] for j in col_idx] for i in row_idx], one)


def to_sympy(rows: Sequence[Sequence[CRat]]) -> sympy.Matrix:
    return sympy.Matrix([
        [sympy.Rational(c.re.numerator, c.re.denominator)
         + sympy.I * sympy.Rational(c.im.numerator, c.im.denominator) for c in row]
        for row in rows
    ])


def sympy_determinant(rows: Sequence[Sequence[CRat]]) -> CRat:
    """Independent exact determinant through sympy, converted back to CRat."""
    value = sympy.expand(to_sympy(rows).det(method="bareiss"))
    re, im = sympy.re(value), sympy.im(value)
    return CRat(_to_fraction(re), _to_fraction(im))


def _to_fraction(value) -> Fraction:
    rational = sympy.Rational(value)
    return Fraction(int(rational.p), int(rational.q))
