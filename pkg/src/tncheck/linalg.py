"""Exact rational scalars, dense matrices, and the determinant machinery.

Scalars are ``fractions.Fraction`` (always reduced, positive denominator,
structural equality).  Matrices are immutable, dense, row-major.  All
operations are exact: hot paths clear denominators and run the integer
kernels from :mod:`tncheck.kernels`, then reattach scale factors.

Index conventions: Python-internal positions are 0-based, but
mathematical indices exposed in the API (``MultiIndex`` row/column sets,
arm and point numbering in reports) are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from typing import Iterable, Optional, Sequence, Union

from tncheck import kernels

Rat = Fraction
RatLike = Union[Fraction, int, str]

#: Sentinel returned by :func:`rank_one_decompose` for the zero matrix.
ZERO_MATRIX = object()


def rat(value: RatLike) -> Fraction:
    """Parse a rational from an int, a Fraction, or a 'p/q' / 'p' string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def rat_str(value: Fraction) -> str:
    """Serialize a rational as 'p' or 'p/q'."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class RatMatrix:
    """Dense matrix of exact rationals, row-major, immutable."""

    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative dimensions")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entry count does not match shape")

    # -- construction ------------------------------------------------

    @staticmethod
    def from_rows(rows: Sequence[Sequence[RatLike]]) -> "RatMatrix":
        r = len(rows)
        c = len(rows[0]) if r else 0
        flat = []
        for row in rows:
            if len(row) != c:
                raise ValueError("ragged rows")
            flat.extend(rat(x) for x in row)
        return RatMatrix(r, c, tuple(flat))

    @staticmethod
    def zero(rows: int, cols: int) -> "RatMatrix":
        return RatMatrix(rows, cols, (Fraction(0),) * (rows * cols))

    @staticmethod
    def identity(n: int) -> "RatMatrix":
        flat = [Fraction(0)] * (n * n)
        for i in range(n):
            flat[i * n + i] = Fraction(1)
        return RatMatrix(n, n, tuple(flat))

    @staticmethod
    def column(values: Sequence[RatLike]) -> "RatMatrix":
        vals = tuple(rat(v) for v in values)
        return RatMatrix(len(vals), 1, vals)

    # -- access ------------------------------------------------------

    @property
    def shape(self):
        return (self.rows, self.cols)

    def entry(self, i: int, j: int) -> Fraction:
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> "RatMatrix":
        return RatMatrix(self.rows, 1,
                         tuple(self.entries[i * self.cols + j] for i in range(self.rows)))

    def to_rows(self):
        return [list(self.row(i)) for i in range(self.rows)]

    def is_zero(self) -> bool:
        return all(e == 0 for e in self.entries)

    def is_square(self) -> bool:
        return self.rows == self.cols

    # -- arithmetic --------------------------------------------------

    def _same_shape(self, other: "RatMatrix"):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "RatMatrix") -> "RatMatrix":
        self._same_shape(other)
        return RatMatrix(self.rows, self.cols,
                         tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "RatMatrix") -> "RatMatrix":
        self._same_shape(other)
        return RatMatrix(self.rows, self.cols,
                         tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "RatMatrix":
        return RatMatrix(self.rows, self.cols, tuple(-a for a in self.entries))

    def scale(self, s: RatLike) -> "RatMatrix":
        s = rat(s)
        return RatMatrix(self.rows, self.cols, tuple(s * a for a in self.entries))

    def __matmul__(self, other: "RatMatrix") -> "RatMatrix":
        if self.cols != other.rows:
            raise ValueError(f"inner dimensions {self.cols} vs {other.rows}")
        da, ia = _clear_global(self.entries)
        db, ib = _clear_global(other.entries)
        prod = kernels.matmul_int(ia, ib, self.rows, self.cols, other.cols)
        d = da * db
        return RatMatrix(self.rows, other.cols, tuple(Fraction(p, d) for p in prod))

    def transpose(self) -> "RatMatrix":
        return RatMatrix(self.cols, self.rows,
                         tuple(self.entries[i * self.cols + j]
                               for j in range(self.cols) for i in range(self.rows)))

    @property
    def T(self) -> "RatMatrix":
        return self.transpose()

    def trace(self) -> Fraction:
        if not self.is_square():
            raise ValueError("trace of non-square matrix")
        return sum((self.entry(i, i) for i in range(self.rows)), Fraction(0))

    def inner(self, other: "RatMatrix") -> Fraction:
        """Hilbert-Schmidt inner product tr(self^T other)."""
        self._same_shape(other)
        return sum((a * b for a, b in zip(self.entries, other.entries)), Fraction(0))

    def norm_sq(self) -> Fraction:
        return self.inner(self)

    # -- serialization -----------------------------------------------

    def to_json(self):
        return [[rat_str(self.entry(i, j)) for j in range(self.cols)]
                for i in range(self.rows)]

    @staticmethod
    def from_json(doc) -> "RatMatrix":
        return RatMatrix.from_rows(doc)


def outer(u: RatMatrix, v: RatMatrix) -> RatMatrix:
    """Outer product u v^T of two column vectors."""
    if u.cols != 1 or v.cols != 1:
        raise ValueError("outer expects column vectors")
    return RatMatrix(u.rows, v.rows,
                     tuple(a * b for a in u.entries for b in v.entries))


def matvec(M: RatMatrix, v: RatMatrix) -> RatMatrix:
    return M @ v


def _clear_global(entries: Iterable[Fraction]):
    """Common denominator d and the integer list of d * entries."""
    d = 1
    for e in entries:
        d = d * e.denominator // math.gcd(d, e.denominator)
    if d == 1:
        return 1, [e.numerator for e in entries]
    return d, [e.numerator * (d // e.denominator) for e in entries]


def det(M: RatMatrix) -> Fraction:
    """Exact determinant (fraction-free elimination over the integers;
    per-row denominator clearing keeps the integers small)."""
    if not M.is_square():
        raise ValueError("determinant of non-square matrix")
    n = M.rows
    scale = 1
    ints = []
    for i in range(n):
        row = M.row(i)
        d = 1
        for e in row:
            d = d * e.denominator // math.gcd(d, e.denominator)
        scale *= d
        ints.extend(e.numerator * (d // e.denominator) for e in row)
    return Fraction(kernels.det_int(ints, n), scale)


def cof(M: RatMatrix) -> RatMatrix:
    """Cofactor matrix C with M C = C M = det(M) id (the adjugate:
    C_ij is the signed complementary determinant for entry (j, i))."""
    if not M.is_square():
        raise ValueError("cofactor matrix of non-square matrix")
    n = M.rows
    if n == 0:
        return M
    d, ints = _clear_global(M.entries)
    adj = kernels.adj_int(ints, n)
    denom = d ** (n - 1)
    return RatMatrix(n, n, tuple(Fraction(a, denom) for a in adj))


def det_brute(M: RatMatrix) -> Fraction:
    """Signed permutation-sum determinant; independent oracle for small n."""
    if not M.is_square():
        raise ValueError("determinant of non-square matrix")
    n = M.rows
    total = Fraction(0)
    for perm in permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):  # count inversions
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        term = Fraction(1)
        for i in range(n):
            term *= M.entry(i, perm[i])
        total += sign * term
    return total


@dataclass(frozen=True)
class MultiIndex:
    """Row set I and column set J (1-based, strictly increasing, equal
    length >= 2) selecting a square minor."""

    I: tuple
    J: tuple

    def __post_init__(self):
        I, J = tuple(self.I), tuple(self.J)
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "J", J)
        if len(I) != len(J):
            raise ValueError("row and column sets must have equal length")
        if len(I) < 2:
            raise ValueError("minor order must be at least 2")
        for seq in (I, J):
            if any(b <= a for a, b in zip(seq, seq[1:])) or seq[0] < 1:
                raise ValueError("index sets must be strictly increasing and 1-based")

    @property
    def order(self) -> int:
        return len(self.I)

    def key(self) -> str:
        return ",".join(map(str, self.I)) + ":" + ",".join(map(str, self.J))

    @staticmethod
    def from_key(key: str) -> "MultiIndex":
        left, right = key.split(":")
        return MultiIndex(tuple(int(x) for x in left.split(",")),
                          tuple(int(x) for x in right.split(",")))


def minor_indices(n: int, m: int, r: int):
    """All order-r multi-indices of an n x m shape, lexicographic in (I, J)."""
    return tuple(MultiIndex(I, J)
                 for I in combinations(range(1, n + 1), r)
                 for J in combinations(range(1, m + 1), r))


def a2_indices(n: int, m: int):
    """The order-2 minor index set."""
    return minor_indices(n, m, 2)


def all_minor_indices(n: int, m: int):
    """Every minor index of orders 2..min(n, m), lexicographic in (r, I, J).
    This fixed ordering also defines the tail of the minor vector."""
    out = []
    for r in range(2, min(n, m) + 1):
        out.extend(minor_indices(n, m, r))
    return tuple(out)


def _check_multiindex(M: RatMatrix, Z: MultiIndex):
    if Z.I[-1] > M.rows or Z.J[-1] > M.cols:
        raise IndexError(f"multi-index {Z.key()} out of range for shape {M.shape}")


def minor_extract(M: RatMatrix, Z: MultiIndex) -> RatMatrix:
    """Square submatrix M^Z in the order induced by I and J."""
    _check_multiindex(M, Z)
    r = Z.order
    return RatMatrix(r, r, tuple(M.entry(i - 1, j - 1) for i in Z.I for j in Z.J))


def embed_cof_bar(M: RatMatrix, Z: MultiIndex) -> RatMatrix:
    """The n x m matrix vanishing off rows I / columns J and carrying
    cof(M^Z)^T on the selected positions."""
    _check_multiindex(M, Z)
    c = cof(minor_extract(M, Z)).transpose()
    flat = [Fraction(0)] * (M.rows * M.cols)
    for a, i in enumerate(Z.I):
        for b, j in enumerate(Z.J):
            flat[(i - 1) * M.cols + (j - 1)] = c.entry(a, b)
    return RatMatrix(M.rows, M.cols, tuple(flat))


def _echelon(M: RatMatrix):
    """Integer echelon form of M after per-row denominator clearing.
    Row scaling preserves row space and kernel."""
    ints = []
    for i in range(M.rows):
        row = M.row(i)
        d = 1
        for e in row:
            d = d * e.denominator // math.gcd(d, e.denominator)
        ints.extend(e.numerator * (d // e.denominator) for e in row)
    return kernels.row_echelon_int(ints, M.rows, M.cols)


def rank(M: RatMatrix) -> int:
    if M.rows == 0 or M.cols == 0:
        return 0
    _, pivots = _echelon(M)
    return len(pivots)


def nullspace(M: RatMatrix):
    """Exact basis of the right kernel, one column vector per free column
    (the free coordinate is set to 1); empty iff full column rank."""
    cols = M.cols
    if M.rows == 0:
        return [RatMatrix.column([1 if i == f else 0 for i in range(cols)])
                for f in range(cols)]
    flat, pivots = _echelon(M)
    pivot_set = set(pivots)
    free = [c for c in range(cols) if c not in pivot_set]
    basis = []
    for f in free:
        v = [Fraction(0)] * cols
        v[f] = Fraction(1)
        for pr in range(len(pivots) - 1, -1, -1):
            pc = pivots[pr]
            s = sum((Fraction(flat[pr * cols + c]) * v[c]
                     for c in range(pc + 1, cols) if v[c] != 0), Fraction(0))
            v[pc] = -s / flat[pr * cols + pc]
        basis.append(RatMatrix.column(v))
    return basis


def solve(A: RatMatrix, b: RatMatrix) -> Optional[RatMatrix]:
    """Exact solution of A x = b for square A; None when A is singular."""
    if not A.is_square() or b.rows != A.rows:
        raise ValueError("solve expects square A and matching b")
    d = det(A)
    if d == 0:
        return None
    return (cof(A) @ b).scale(Fraction(1) / d)


def inverse(A: RatMatrix) -> Optional[RatMatrix]:
    d = det(A)
    if d == 0:
        return None
    return cof(A).scale(Fraction(1) / d)


def rank_one_decompose(M: RatMatrix):
    """Decompose M = u v^T when rank(M) <= 1.

    Returns ``(u, v)`` column vectors with u the first nonzero column of M
    and v the per-column coefficients (v at that column is 1);
    :data:`ZERO_MATRIX` for M = 0; ``None`` when rank(M) >= 2.
    """
    if M.is_zero():
        return ZERO_MATRIX
    j0 = next(j for j in range(M.cols)
              if any(M.entry(i, j) != 0 for i in range(M.rows)))
    u = M.col(j0)
    i0 = next(i for i in range(M.rows) if u.entry(i, 0) != 0)
    pivot = u.entry(i0, 0)
    v = [M.entry(i0, j) / pivot for j in range(M.cols)]
    for i in range(M.rows):
        ui = u.entry(i, 0)
        for j in range(M.cols):
            if M.entry(i, j) != ui * v[j]:
                return None
    return u, RatMatrix.column(v)
