"""Dense arbitrary-precision integer matrices and the exact reference oracles.

Everything the probabilistic machinery is checked against lives here: the
Hadamard bound, a fraction-free (Bareiss) determinant, a Smith normal form by
naive reduction, and the matrix generators used by tests and benchmarks.
"""

from __future__ import annotations

import io
import random
from math import gcd, isqrt
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "IntMatrix",
    "SmithForm",
    "MatrixFormatError",
    "hadamard_bound",
    "bareiss_det",
    "smith_form",
    "gen_random",
    "gen_engineered",
    "gen_unimodular",
    "read_matrix",
    "write_matrix",
    "parse_matrix",
    "format_matrix",
]

_INT64_SAFE = 1 << 62


class MatrixFormatError(ValueError):
    """Raised on malformed matrix text."""


class IntMatrix:
    """Immutable dense matrix of Python integers, stored row-major."""

    __slots__ = ("rows", "cols", "entries", "_np", "_norm")

    def __init__(self, rows: int, cols: int, entries: Iterable[int]):
        entries = tuple(int(e) for e in entries)
        if rows < 0 or cols < 0 or len(entries) != rows * cols:
            raise ValueError(
                f"expected {rows}x{cols}={rows * cols} entries, got {len(entries)}"
            )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_np", None)
        object.__setattr__(self, "_norm", None)

    def __setattr__(self, name, value):
        raise AttributeError("IntMatrix is immutable")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntMatrix":
        rows = [list(r) for r in rows]
        m = len(rows[0]) if rows else 0
        if any(len(r) != m for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), m, (x for r in rows for x in r))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, (1 if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def diag(cls, values: Sequence[int]) -> "IntMatrix":
        n = len(values)
        return cls(n, n, (values[i] if i == j else 0 for i in range(n) for j in range(n)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list[int]:
        return list(self.entries[i * self.cols : (i + 1) * self.cols])

    def col(self, j: int) -> list[int]:
        return list(self.entries[j :: self.cols])

    def tolist(self) -> list[list[int]]:
        return [self.row(i) for i in range(self.rows)]

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, (x for j in range(self.cols) for x in self.col(j)))

    T = property(transpose)

    def norm(self) -> int:
        """Largest absolute entry (0 for an empty matrix)."""
        if self._norm is None:
            object.__setattr__(self, "_norm", max((abs(e) for e in self.entries), default=0))
        return self._norm

    def matvec(self, v: Sequence[int]) -> list[int]:
        if len(v) != self.cols:
            raise ValueError("dimension mismatch")
        c = self.cols
        e = self.entries
        return [sum(e[i * c + j] * v[j] for j in range(c) if v[j]) for i in range(self.rows)]

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            if self.cols != other.rows:
                raise ValueError("dimension mismatch")
            cols = [other.col(j) for j in range(other.cols)]
            out = []
            for i in range(self.rows):
                r = self.row(i)
                out.extend(sum(a * b for a, b in zip(r, c)) for c in cols)
            return IntMatrix(self.rows, other.cols, out)
        return self.matvec(other)

    def as_array(self) -> np.ndarray:
        """Numpy view: int64 when every entry fits comfortably, object otherwise."""
        if self._np is None:
            dtype = np.int64 if self.norm() < _INT64_SAFE else object
            arr = np.array(self.entries, dtype=dtype).reshape(self.rows, self.cols)
            arr.setflags(write=False)
            object.__setattr__(self, "_np", arr)
        return self._np

    def reduce_mod(self, p: int) -> np.ndarray:
        """Entries reduced into [0, p) as a fresh int64 array (p must fit a word)."""
        arr = self.as_array() % p
        return np.ascontiguousarray(arr, dtype=np.int64)

    def __eq__(self, other):
        return (
            isinstance(other, IntMatrix)
            and self.shape == other.shape
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def __repr__(self):
        if self.rows * self.cols <= 36:
            return f"IntMatrix({self.tolist()})"
        return f"IntMatrix({self.rows}x{self.cols}, norm={self.norm()})"


class SmithForm(tuple):
    """Invariant factors s_1 | s_2 | ... | s_r of a matrix of rank r."""

    @property
    def factors(self) -> tuple[int, ...]:
        return tuple(self)

    @property
    def rank(self) -> int:
        return len(self)

    def largest(self, k: int = 1) -> int:
        """Product of the k largest invariant factors (pi_k)."""
        out = 1
        for s in self[len(self) - k :]:
            out *= s
        return out

    def smallest(self, k: int) -> int:
        """Product of the k smallest invariant factors (mu_k)."""
        out = 1
        for s in self[:k]:
            out *= s
        return out

    def nontrivial(self) -> int:
        return sum(1 for s in self if s > 1)

    def count_divisible(self, p: int) -> int:
        return sum(1 for s in self if s % p == 0)


def _require_square(A: IntMatrix) -> int:
    if not A.is_square:
        raise ValueError(f"square matrix required, got {A.rows}x{A.cols}")
    return A.rows


def hadamard_bound(A: IntMatrix) -> int:
    """Smallest integer H with H >= (sqrt(n) * ||A||)^n.

    Evaluated without square roots: H is the integer ceiling of
    sqrt(n^n * ||A||^(2n)). Returns 1 for the zero matrix.
    """
    n = _require_square(A)
    a = A.norm()
    if n == 0 or a == 0:
        return 1
    sq = n**n * a ** (2 * n)
    h = isqrt(sq)
    return h if h * h == sq else h + 1


def bareiss_det(A: IntMatrix) -> int:
    """Exact determinant by fraction-free elimination."""
    n = _require_square(A)
    if n == 0:
        return 1
    M = A.tolist()
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = M[k][k]
        rk = M[k]
        for i in range(k + 1, n):
            ri = M[i]
            a = ri[k]
            # exact by Sylvester's identity
            M[i] = [0] * (k + 1) + [
                (pivot * ri[j] - a * rk[j]) // prev for j in range(k + 1, n)
            ]
        prev = pivot
    return sign * M[n - 1][n - 1]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def _smith_diagonal(M: list[list[int]], modulus: int = 0) -> list[int]:
    """Diagonalize M in place by unimodular row/column operations.

    With ``modulus`` > 0 every entry is kept reduced into [0, modulus); the
    caller is responsible for that being legitimate (modulus in the row
    lattice). Returns the diagonal (zeros included).
    """
    m = len(M)
    n = len(M[0]) if m else 0

    def red(row):
        if modulus:
            return [x % modulus for x in row]
        return row

    diag = []
    for r in range(min(m, n)):
        best = None
        for i in range(r, m):
            Mi = M[i]
            for j in range(r, n):
                v = Mi[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            diag.extend([0] * (min(m, n) - r))
            break
        _, pi, pj = best
        M[r], M[pi] = M[pi], M[r]
        if pj != r:
            for row in M:
                row[r], row[pj] = row[pj], row[r]
        while True:
            # clear column r below the pivot
            for i in range(r + 1, m):
                b = M[i][r]
                if not b:
                    continue
                a = M[r][r]
                if b % a == 0:
                    q = b // a
                    M[i] = red([x - q * y for x, y in zip(M[i], M[r])])
                else:
                    g, s, t = _xgcd(a, b)
                    u, v = -b // g, a // g
                    Rr, Ri = M[r], M[i]
                    M[r] = red([s * x + t * y for x, y in zip(Rr, Ri)])
                    M[i] = red([u * x + v * y for x, y in zip(Rr, Ri)])
            # clear row r right of the pivot
            dirty = False
            for j in range(r + 1, n):
                b = M[r][j]
                if not b:
                    continue
                a = M[r][r]
                if b % a == 0:
                    q = b // a
                    for row in M[r:]:
                        row[j] -= q * row[r]
                        if modulus:
                            row[j] %= modulus
                else:
                    g, s, t = _xgcd(a, b)
                    u, v = -b // g, a // g
                    for row in M[r:]:
                        x, y = row[r], row[j]
                        row[r] = s * x + t * y
                        row[j] = u * x + v * y
                        if modulus:
                            row[r] %= modulus
                            row[j] %= modulus
                    dirty = True
            if dirty and any(M[i][r] for i in range(r + 1, m)):
                continue
            a = M[r][r]
            if a == 0:
                break
            bad = None
            for i in range(r + 1, m):
                Mi = M[i]
                for j in range(r + 1, n):
                    if Mi[j] % a:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            M[r] = red([x + y for x, y in zip(M[r], M[bad])])
        diag.append(abs(M[r][r]))
    return diag


def smith_form(A: IntMatrix) -> SmithForm:
    """Invariant factors of A by naive unimodular reduction.

    For nonsingular square input the reduction runs modulo |det(A)| (which
    lies in the row lattice), keeping entries bounded; each diagonal value t
    then maps to gcd(t, |det(A)|). Intended for oracle use at n <= ~60.
    """
    if A.rows == 0 or A.cols == 0:
        return SmithForm(())
    d = abs(bareiss_det(A)) if A.is_square else 0
    if d == 1:
        return SmithForm((1,) * A.rows)
    M = A.tolist()
    if d:
        M = [[x % d for x in row] for row in M]
        diag = [gcd(t, d) for t in _smith_diagonal(M, d)]
    else:
        diag = [t for t in _smith_diagonal(M) if t]
    # normalize to a divisibility chain (the reduction may leave it unordered)
    return SmithForm(_chain(diag))


def _chain(values: list[int]) -> tuple[int, ...]:
    vals = [v for v in values if v]
    k = len(vals)
    # s_i = gcd of all i-fold products is overkill; the pairwise gcd/lcm
    # exchange below converges to the chain and preserves the product
    for i in range(k):
        for j in range(i + 1, k):
            a, b = vals[i], vals[j]
            g = gcd(a, b)
            vals[i], vals[j] = g, a // g * b
    return tuple(vals)


def _symmetric_set(lam: int) -> tuple[int, int]:
    return -(lam // 2), (lam + 1) // 2


def gen_random(n: int, lam: int, seed: int) -> IntMatrix:
    """n x n matrix with i.i.d. entries uniform on {-floor(lam/2), ..., ceil(lam/2)}."""
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    lo, hi = _symmetric_set(lam)
    rng = np.random.default_rng(seed)
    vals = rng.integers(lo, hi + 1, size=n * n)
    return IntMatrix(n, n, vals.tolist())


def _random_elementary(M: list[list[int]], rng: random.Random, ops: int, on_rows: bool):
    n = len(M)
    if n < 2:
        return
    for _ in range(ops):
        i, j = rng.sample(range(n), 2)
        c = rng.choice((-2, -1, 1, 2))
        if on_rows:
            Mi, Mj = M[i], M[j]
            M[i] = [x + c * y for x, y in zip(Mi, Mj)]
        else:
            for row in M:
                row[i] += c * row[j]


def gen_unimodular(n: int, seed: int) -> IntMatrix:
    """Product of at most 4n elementary matrices with coefficients in {-2..2}; det = +-1."""
    rng = random.Random(f"unimodular:{n}:{seed}")
    M = IntMatrix.identity(n).tolist()
    if n and rng.random() < 0.5:
        r = rng.randrange(n)
        M[r] = [-x for x in M[r]]
    half = 2 * n
    _random_elementary(M, rng, half, on_rows=True)
    _random_elementary(M, rng, 4 * n - half - (1 if n else 0), on_rows=False)
    return IntMatrix.from_rows(M) if n else IntMatrix(0, 0, ())


def gen_engineered(n: int, seed: int) -> IntMatrix:
    """U * diag(1..n) * V with U, V random unimodular: Smith form of diag(1..n), |det| = n!."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(f"engineered:{n}:{seed}")
    M = IntMatrix.diag(list(range(1, n + 1))).tolist()
    # interleave row and column mixing so the diagonal structure is hidden
    for _ in range(2):
        _random_elementary(M, rng, n, on_rows=True)
        _random_elementary(M, rng, n, on_rows=False)
    order = list(range(n))
    rng.shuffle(order)
    M = [M[i] for i in order]
    return IntMatrix.from_rows(M)


def parse_matrix(text: str) -> IntMatrix:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MatrixFormatError("empty matrix text")
    try:
        header = [int(t) for t in lines[0].split()]
    except ValueError:
        raise MatrixFormatError(f"bad header line: {lines[0]!r}") from None
    if len(header) != 2 or min(header) < 0:
        raise MatrixFormatError(f"header must be 'n m', got {lines[0]!r}")
    n, m = header
    body = lines[1:]
    if len(body) != n:
        raise MatrixFormatError(f"expected {n} rows, found {len(body)}")
    entries = []
    for k, ln in enumerate(body, start=1):
        try:
            row = [int(t) for t in ln.split()]
        except ValueError:
            raise MatrixFormatError(f"row {k}: non-integer entry") from None
        if len(row) != m:
            raise MatrixFormatError(f"row {k}: expected {m} entries, got {len(row)}")
        entries.extend(row)
    return IntMatrix(n, m, entries)


def format_matrix(A: IntMatrix) -> str:
    out = io.StringIO()
    out.write(f"{A.rows} {A.cols}\n")
    for i in range(A.rows):
        out.write(" ".join(str(x) for x in A.row(i)))
        out.write("\n")
    return out.getvalue()


def read_matrix(path) -> IntMatrix:
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def write_matrix(A: IntMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_matrix(A))
