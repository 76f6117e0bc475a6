"""Exact rational scalars and square matrices for consensus checking.

Scalars are gmpy2.mpq values: arbitrary precision, automatically kept in
lowest terms with a positive denominator, so every equality test in this
package is exact and no rounding ever occurs. str() on a scalar already
emits the wire format, "p/q" or a bare "p" when the denominator is 1.

Matrices are square and stored row-sparse: each row is a dict mapping column
index to a nonzero value. Rows are treated as immutable once built. The row
of an update matrix that leaves a node untouched is exactly the identity
row, and products share such rows by reference instead of recomputing them,
which keeps the product of a long, mostly-identity sequence cheap.

Matrix rows and columns are 0-based; graph nodes are 1-based throughout the
package, so node v corresponds to row and column v - 1.
"""

import re
from typing import Mapping, Optional, Sequence

from gmpy2 import mpq

from .graph import Graph

Rational = mpq

_ZERO = mpq(0)
_ONE = mpq(1)

_RATIONAL_RE = re.compile(r"-?\d+(/\d+)?\Z")


class DimensionMismatch(ValueError):
    """Raised when operands of an exact operation disagree in size."""


def parse_rational(text: str) -> Rational:
    """Parse "p/q" or a bare integer string into an exact rational."""
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise ValueError(f"not a rational literal: {text!r} (expected 'p/q' or 'p')")
    try:
        return mpq(text)
    except ZeroDivisionError:
        raise ValueError(f"zero denominator in rational literal: {text!r}") from None


def format_rational(value) -> str:
    """Lowest-terms string form: "p/q", or "p" when the denominator is 1."""
    return str(mpq(value))


def _as_rational(value) -> Rational:
    if isinstance(value, str):
        return parse_rational(value)
    return mpq(value)


def _identity_row(i: int) -> dict:
    return {i: _ONE}


def _is_identity_row(row: dict, i: int) -> bool:
    return len(row) == 1 and row.get(i) == _ONE


class RationalMatrix:
    """A square matrix of exact rationals with sparse rows.

    `touched` records which rows differ from the identity row; products and
    row predicates skip the rest, which is what keeps long mostly-identity
    update sequences cheap.
    """

    __slots__ = ("n", "rows", "touched")

    def __init__(self, n: int, rows: tuple):
        # trusted constructor: rows must be a tuple of n dicts holding only
        # nonzero mpq values, keys in range(n)
        self.n = n
        self.rows = rows
        self.touched = tuple(
            i for i, row in enumerate(rows) if not _is_identity_row(row, i)
        )

    @classmethod
    def from_entries(cls, grid: Sequence) -> "RationalMatrix":
        """Build from a dense row-major grid of ints, strings, or rationals."""
        n = len(grid)
        if n == 0:
            raise ValueError("matrix must have at least one row")
        rows = []
        for r in grid:
            if len(r) != n:
                raise DimensionMismatch(
                    f"row of length {len(r)} in a matrix of order {n}"
                )
            row = {}
            for j, value in enumerate(r):
                q = _as_rational(value)
                if q != 0:
                    row[j] = q
            rows.append(row)
        return cls(n, tuple(rows))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        if n < 1:
            raise ValueError("matrix order must be positive")
        return cls(n, tuple(_identity_row(i) for i in range(n)))

    @classmethod
    def uniform_average(cls, n: int) -> "RationalMatrix":
        """The exact averaging matrix: every entry 1/n."""
        q = mpq(1, n)
        return cls(n, tuple({j: q for j in range(n)} for _ in range(n)))

    @classmethod
    def from_row_updates(cls, n: int, updates: Mapping) -> "RationalMatrix":
        """Identity matrix with the given rows replaced.

        `updates` maps a 0-based row index to {column: value}; zero values
        are dropped.
        """
        rows = []
        for i in range(n):
            if i in updates:
                rows.append({j: v for j, v in updates[i].items() if v != 0})
            else:
                rows.append(_identity_row(i))
        return cls(n, tuple(rows))

    def entry(self, i: int, j: int) -> Rational:
        return self.rows[i].get(j, _ZERO)

    def dense(self) -> list:
        return [[row.get(j, _ZERO) for j in range(self.n)] for row in self.rows]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.n == other.n and self.rows == other.rows

    __hash__ = None

    def __repr__(self) -> str:
        if self.n <= 6:
            body = "; ".join(
                " ".join(format_rational(self.entry(i, j)) for j in range(self.n))
                for i in range(self.n)
            )
            return f"RationalMatrix({self.n}: {body})"
        return f"RationalMatrix(order {self.n})"


def matrix_to_strings(A: RationalMatrix) -> list:
    """Dense row-major grid of rational strings (the serialized form)."""
    return [
        [format_rational(A.entry(i, j)) for j in range(A.n)] for i in range(A.n)
    ]


def matrix_from_strings(grid: Sequence) -> RationalMatrix:
    return RationalMatrix.from_entries(grid)


def mat_mul(A: RationalMatrix, B: RationalMatrix) -> RationalMatrix:
    """Exact product A*B. Identity rows of A reuse B's rows unchanged."""
    if A.n != B.n:
        raise DimensionMismatch(f"cannot multiply order {A.n} by order {B.n}")
    b_rows = B.rows
    rows = list(b_rows)
    for i in A.touched:
        acc = {}
        for k, a in A.rows[i].items():
            for j, b in b_rows[k].items():
                prod = a * b
                cur = acc.get(j)
                if cur is None:
                    acc[j] = prod
                else:
                    cur = cur + prod
                    if cur == 0:
                        del acc[j]
                    else:
                        acc[j] = cur
        rows[i] = acc
    return RationalMatrix(A.n, tuple(rows))


def mat_vec(A: RationalMatrix, x: Sequence) -> tuple:
    """Exact matrix-vector product as a tuple of rationals."""
    if len(x) != A.n:
        raise DimensionMismatch(f"vector of length {len(x)} for order {A.n}")
    xs = [mpq(v) for v in x]
    out = list(xs)
    for i in A.touched:
        out[i] = sum((v * xs[j] for j, v in A.rows[i].items()), _ZERO)
    return tuple(out)


def sequence_product(matrices: Sequence, n: Optional[int] = None) -> RationalMatrix:
    """Product A_T * ... * A_1 of a sequence applied first-to-last.

    The empty product is the identity; its order must then be supplied.
    """
    mats = list(matrices)
    if not mats:
        if n is None:
            raise ValueError("empty sequence needs an explicit order n")
        return RationalMatrix.identity(n)
    order = mats[0].n
    if n is not None and n != order:
        raise DimensionMismatch(f"sequence of order {order}, expected {n}")
    product = RationalMatrix.identity(order)
    for A in mats:
        product = mat_mul(A, product)
    return product


def is_stochastic(A: RationalMatrix) -> bool:
    """Every entry >= 0 and every row sums to exactly 1."""
    # identity rows are stochastic by construction
    for i in A.touched:
        total = _ZERO
        for v in A.rows[i].values():
            if v < 0:
                return False
            total += v
        if total != 1:
            return False
    return True


def has_positive_diagonal(A: RationalMatrix) -> bool:
    return all(A.rows[i].get(i, _ZERO) > 0 for i in A.touched)


def is_consistent(A: RationalMatrix, G: Graph) -> bool:
    """Every strictly positive off-diagonal (i, j) is licensed by an arc.

    Entry (i, j) > 0 with i != j requires the arc (j+1, i+1): node i+1 may
    listen to node j+1. Zero entries are always allowed; arcs permit, never
    require.
    """
    if A.n != G.n:
        raise DimensionMismatch(f"matrix order {A.n} vs graph on {G.n} nodes")
    for i in A.touched:
        for j, v in A.rows[i].items():
            if i != j and v > 0 and not G.has_arc(j + 1, i + 1):
                return False
    return True


def is_rank_one_stochastic(A: RationalMatrix) -> bool:
    """True iff A is stochastic with all rows identical (A = 1 v^T)."""
    if not is_stochastic(A):
        return False
    first = A.rows[0]
    return all(row == first for row in A.rows[1:])


def is_average_matrix(A: RationalMatrix) -> bool:
    """True iff every entry is exactly 1/n."""
    q = mpq(1, A.n)
    return all(
        len(row) == A.n and all(v == q for v in row.values()) for row in A.rows
    )
