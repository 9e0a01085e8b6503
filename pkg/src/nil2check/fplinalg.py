"""Exact linear algebra over prime fields GF(p).

Everything here works on least non-negative residues with Python integers;
there is no floating point anywhere. Subspaces are carried in reduced row
echelon form (RREF), so structural equality of two Subspace values coincides
with equality of the underlying sets of vectors, and enumeration of
subspaces is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeField:
    """The field GF(p). Primality is checked eagerly by trial division."""

    p: int

    def __post_init__(self) -> None:
        if not _is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse mod {self.p}")
        return pow(a, self.p - 2, self.p)


@dataclass(frozen=True)
class VectorFp:
    """A vector over GF(p), coordinates reduced mod p."""

    field: PrimeField
    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        p = self.field.p
        object.__setattr__(self, "coords", tuple(int(c) % p for c in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def __add__(self, other: "VectorFp") -> "VectorFp":
        self._check_compatible(other)
        p = self.field.p
        return VectorFp(self.field, tuple((a + b) % p for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "VectorFp") -> "VectorFp":
        self._check_compatible(other)
        p = self.field.p
        return VectorFp(self.field, tuple((a - b) % p for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "VectorFp":
        p = self.field.p
        return VectorFp(self.field, tuple((-a) % p for a in self.coords))

    def scale(self, a: int) -> "VectorFp":
        p = self.field.p
        a %= p
        return VectorFp(self.field, tuple((a * c) % p for c in self.coords))

    def dot(self, other: "VectorFp") -> int:
        self._check_compatible(other)
        p = self.field.p
        return sum(a * b for a, b in zip(self.coords, other.coords)) % p

    def concat(self, other: "VectorFp") -> "VectorFp":
        return VectorFp(self.field, self.coords + other.coords)

    def _check_compatible(self, other: "VectorFp") -> None:
        if self.field != other.field or self.dim != other.dim:
            raise ValueError("vector dimension or field mismatch")

    @staticmethod
    def zero(field: PrimeField, dim: int) -> "VectorFp":
        return VectorFp(field, (0,) * dim)

    @staticmethod
    def unit(field: PrimeField, dim: int, i: int) -> "VectorFp":
        return VectorFp(field, tuple(1 if j == i else 0 for j in range(dim)))


def all_vectors(field: PrimeField, dim: int) -> Iterator[VectorFp]:
    """All p^dim vectors, first coordinate varying slowest."""
    for coords in itertools.product(range(field.p), repeat=dim):
        yield VectorFp(field, coords)


@dataclass(frozen=True)
class MatrixFp:
    """A rows x cols matrix over GF(p), row-major, entries reduced mod p."""

    field: PrimeField
    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        p = self.field.p
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entry shape does not match declared dimensions")
        object.__setattr__(
            self, "entries", tuple(tuple(int(x) % p for x in row) for row in self.entries)
        )

    @staticmethod
    def from_rows(field: PrimeField, rows: Sequence[Sequence[int]], cols: Optional[int] = None) -> "MatrixFp":
        rows = [tuple(r) for r in rows]
        if cols is None:
            if not rows:
                raise ValueError("cols must be given for a 0-row matrix")
            cols = len(rows[0])
        return MatrixFp(field, len(rows), cols, tuple(rows))

    @staticmethod
    def zeros(field: PrimeField, rows: int, cols: int) -> "MatrixFp":
        return MatrixFp(field, rows, cols, tuple((0,) * cols for _ in range(rows)))

    @staticmethod
    def identity(field: PrimeField, n: int) -> "MatrixFp":
        return MatrixFp(
            field, n, n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
        )

    @staticmethod
    def vstack(field: PrimeField, mats: Sequence["MatrixFp"], cols: Optional[int] = None) -> "MatrixFp":
        if mats:
            cols = mats[0].cols
            if any(m.cols != cols or m.field != field for m in mats):
                raise ValueError("stacked matrices must share field and width")
        elif cols is None:
            raise ValueError("cols must be given when stacking nothing")
        entries = tuple(row for m in mats for row in m.entries)
        return MatrixFp(field, len(entries), cols, entries)

    def row(self, i: int) -> VectorFp:
        return VectorFp(self.field, self.entries[i])

    def row_vectors(self) -> list[VectorFp]:
        return [VectorFp(self.field, r) for r in self.entries]

    def transpose(self) -> "MatrixFp":
        ent = tuple(tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols))
        return MatrixFp(self.field, self.cols, self.rows, ent)

    def matvec(self, v: VectorFp) -> VectorFp:
        if v.dim != self.cols or v.field != self.field:
            raise ValueError(f"matvec dimension mismatch: {self.rows}x{self.cols} with dim-{v.dim} vector")
        p = self.field.p
        return VectorFp(
            self.field,
            tuple(sum(a * b for a, b in zip(row, v.coords)) % p for row in self.entries),
        )

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.entries for x in row)


def rref(m: MatrixFp) -> tuple[int, MatrixFp]:
    """Reduced row echelon form. Returns (rank, reduced); reduced keeps m's shape."""
    p = m.field.p
    a = [list(row) for row in m.entries]
    r = 0
    for c in range(m.cols):
        pivot = next((i for i in range(r, m.rows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = m.field.inv(a[r][c])
        a[r] = [(x * inv) % p for x in a[r]]
        for i in range(m.rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        r += 1
        if r == m.rows:
            break
    return r, MatrixFp(m.field, m.rows, m.cols, tuple(tuple(row) for row in a))


def _pivot_columns(reduced: MatrixFp, rank: int) -> list[int]:
    pivots = []
    for i in range(rank):
        pivots.append(next(j for j in range(reduced.cols) if reduced.entries[i][j] != 0))
    return pivots


@dataclass(frozen=True)
class Subspace:
    """A subspace of GF(p)^ambient_dim, basis rows in RREF.

    Canonicity of the RREF basis makes structural equality of Subspace values
    agree with set equality, and makes enumeration orders reproducible.
    """

    ambient_dim: int
    basis: MatrixFp

    def __post_init__(self) -> None:
        if self.basis.cols != self.ambient_dim:
            raise ValueError("basis width does not match ambient dimension")

    @property
    def field(self) -> PrimeField:
        return self.basis.field

    @property
    def rank(self) -> int:
        return self.basis.rows

    @property
    def dim(self) -> int:
        return self.basis.rows

    @staticmethod
    def from_vectors(field: PrimeField, ambient_dim: int, vectors: Iterable[VectorFp]) -> "Subspace":
        rows = [v.coords for v in vectors]
        if not rows:
            return Subspace(ambient_dim, MatrixFp(field, 0, ambient_dim, ()))
        m = MatrixFp.from_rows(field, rows, cols=ambient_dim)
        rank, red = rref(m)
        return Subspace(ambient_dim, MatrixFp(field, rank, ambient_dim, red.entries[:rank]))

    @staticmethod
    def zero(field: PrimeField, ambient_dim: int) -> "Subspace":
        return Subspace(ambient_dim, MatrixFp(field, 0, ambient_dim, ()))

    @staticmethod
    def full(field: PrimeField, ambient_dim: int) -> "Subspace":
        return Subspace(ambient_dim, MatrixFp.identity(field, ambient_dim))

    def contains(self, v: VectorFp) -> bool:
        if v.dim != self.ambient_dim:
            raise ValueError("vector dimension does not match ambient dimension")
        p = self.field.p
        residue = list(v.coords)
        pivots = _pivot_columns(self.basis, self.rank)
        for i, c in enumerate(pivots):
            f = residue[c]
            if f:
                residue = [(x - f * y) % p for x, y in zip(residue, self.basis.entries[i])]
        return all(x == 0 for x in residue)

    def vectors(self) -> Iterator[VectorFp]:
        """All p^rank vectors of the subspace (coefficient odometer order)."""
        basis_rows = self.basis.row_vectors()
        for coeffs in itertools.product(range(self.field.p), repeat=self.rank):
            v = VectorFp.zero(self.field, self.ambient_dim)
            for a, b in zip(coeffs, basis_rows):
                v = v + b.scale(a)
            yield v


def kernel(m: MatrixFp) -> Subspace:
    """The right kernel {x : m.x = 0} in canonical form; dim = cols - rank."""
    rank, red = rref(m)
    pivots = _pivot_columns(red, rank)
    pivot_set = set(pivots)
    free = [j for j in range(m.cols) if j not in pivot_set]
    p = m.field.p
    gens = []
    for f in free:
        coords = [0] * m.cols
        coords[f] = 1
        for i, c in enumerate(pivots):
            coords[c] = (-red.entries[i][f]) % p
        gens.append(VectorFp(m.field, tuple(coords)))
    return Subspace.from_vectors(m.field, m.cols, gens)


def solve(m: MatrixFp, b: VectorFp) -> Optional[VectorFp]:
    """One solution of m.x = b (free variables pinned to 0), or None.

    Free variables are pinned to 0 so witnesses in reports are reproducible.
    """
    if b.dim != m.rows or b.field != m.field:
        raise ValueError(f"right-hand side has dim {b.dim}, expected {m.rows}")
    aug = MatrixFp(
        m.field,
        m.rows,
        m.cols + 1,
        tuple(row + (b.coords[i],) for i, row in enumerate(m.entries)),
    )
    rank, red = rref(aug)
    pivots = _pivot_columns(red, rank)
    if m.cols in pivots:
        return None
    coords = [0] * m.cols
    for i, c in enumerate(pivots):
        coords[c] = red.entries[i][m.cols]
    return VectorFp(m.field, tuple(coords))


def annihilator(s: Subspace) -> Subspace:
    """{y : v . y = 0 for all v in s}, under the standard pairing on GF(p)^n."""
    if s.rank == 0:
        return Subspace.full(s.field, s.ambient_dim)
    return kernel(s.basis)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    _check_same_ambient(a, b)
    return Subspace.from_vectors(a.field, a.ambient_dim, a.basis.row_vectors() + b.basis.row_vectors())


def subspace_intersection(a: Subspace, b: Subspace) -> Subspace:
    _check_same_ambient(a, b)
    return annihilator(subspace_sum(annihilator(a), annihilator(b)))


def subspace_ops(a: Subspace, b: Subspace) -> tuple[Subspace, Subspace]:
    """Canonical (sum, intersection) of two subspaces of the same ambient space."""
    return subspace_sum(a, b), subspace_intersection(a, b)


def _check_same_ambient(a: Subspace, b: Subspace) -> None:
    if a.ambient_dim != b.ambient_dim or a.field != b.field:
        raise ValueError("subspaces live in different ambient spaces")


def enumerate_subspaces(ambient_dim: int, k: int, field: PrimeField) -> Iterator[Subspace]:
    """Each k-dimensional subspace of GF(p)^ambient_dim exactly once.

    Enumeration is by RREF canonical form: pivot column sets in lexicographic
    order, then an odometer over the free entries (rightmost entry fastest).
    The total count is the Gaussian binomial coefficient.
    """
    if not 0 <= k <= ambient_dim:
        raise ValueError(f"k={k} out of range for ambient dimension {ambient_dim}")
    if k == 0:
        yield Subspace.zero(field, ambient_dim)
        return
    p = field.p
    for pivots in itertools.combinations(range(ambient_dim), k):
        pivot_set = set(pivots)
        free_positions = [
            (i, j)
            for i in range(k)
            for j in range(pivots[i] + 1, ambient_dim)
            if j not in pivot_set
        ]
        for values in itertools.product(range(p), repeat=len(free_positions)):
            rows = [[0] * ambient_dim for _ in range(k)]
            for i in range(k):
                rows[i][pivots[i]] = 1
            for (i, j), v in zip(free_positions, values):
                rows[i][j] = v
            basis = MatrixFp(field, k, ambient_dim, tuple(tuple(r) for r in rows))
            yield Subspace(ambient_dim, basis)


def gaussian_binomial(n: int, k: int, p: int) -> int:
    """Number of k-dimensional subspaces of GF(p)^n."""
    if not 0 <= k <= n:
        return 0
    num = 1
    den = 1
    for i in range(k):
        num *= p ** (n - i) - 1
        den *= p ** (i + 1) - 1
    return num // den
