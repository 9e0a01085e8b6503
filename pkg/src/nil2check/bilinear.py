"""Two-sorted bilinear structures (V, W, beta) over GF(p) and their axioms.

A structure is stored by its Gram array: gram[i][j] = beta(e_i, e_j), a
vector in W. The psi and sigma_k axioms ask that the stacked linear maps
z -> (beta(v_1, z), ..., beta(v_k, z)) be surjective for every linearly
independent tuple; surjectivity only depends on the span of the tuple, so
the checkers sweep one canonical RREF basis per k-dimensional subspace of V
(brute-force oracles for this reduction live in the test suite).

The exhaustive no-finite-model verifier enumerates every bilinear map on
given dimensions by an odometer over Gram entries and certifies that none
satisfies psi once both dimensions are at least 2.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .fplinalg import (
    MatrixFp,
    PrimeField,
    Subspace,
    VectorFp,
    enumerate_subspaces,
    gaussian_binomial,
    kernel,
    rref,
    solve,
)
from .textio import ParseError, iter_data_lines, parse_ints

DEFAULT_MAP_BUDGET = 10**7


@dataclass(frozen=True)
class BilinearStructure:
    """The triple (V, W, beta): V = GF(p)^n, W = GF(p)^d, beta bilinear."""

    field: PrimeField
    n: int
    d: int
    gram: tuple[tuple[VectorFp, ...], ...]

    def __post_init__(self) -> None:
        if self.n < 1 or self.d < 1:
            raise ValueError("both dimensions must be at least 1")
        if len(self.gram) != self.n or any(len(row) != self.n for row in self.gram):
            raise ValueError("gram array must be n x n")
        for row in self.gram:
            for w in row:
                if w.dim != self.d or w.field != self.field:
                    raise ValueError("gram entries must be dim-d vectors over the same field")

    @staticmethod
    def from_entries(
        p: int, n: int, d: int, entries: Sequence[Sequence[Sequence[int]]]
    ) -> "BilinearStructure":
        field = PrimeField(p)
        gram = tuple(
            tuple(VectorFp(field, tuple(entries[i][j])) for j in range(n)) for i in range(n)
        )
        return BilinearStructure(field, n, d, gram)

    @staticmethod
    def zero(p: int, n: int, d: int) -> "BilinearStructure":
        field = PrimeField(p)
        z = VectorFp.zero(field, d)
        return BilinearStructure(field, n, d, tuple(tuple(z for _ in range(n)) for _ in range(n)))

    @staticmethod
    def standard_symplectic(p: int, k: int) -> "BilinearStructure":
        """Orthogonal sum of k hyperbolic planes: d = 1, n = 2k, blocks [[0,1],[-1,0]]."""
        field = PrimeField(p)
        n = 2 * k
        entries = [[(0,) for _ in range(n)] for _ in range(n)]
        for b in range(k):
            entries[2 * b][2 * b + 1] = (1,)
            entries[2 * b + 1][2 * b] = (p - 1,)
        return BilinearStructure.from_entries(p, n, 1, entries)

    @staticmethod
    def orthogonal_sum(a: "BilinearStructure", b: "BilinearStructure") -> "BilinearStructure":
        """Direct sum on V, shared W: beta((x1,x2),(y1,y2)) = beta_a(x1,y1) + beta_b(x2,y2)."""
        if a.field != b.field or a.d != b.d:
            raise ValueError("summands must share the field and W")
        field = a.field
        n = a.n + b.n
        z = VectorFp.zero(field, a.d)
        gram = []
        for i in range(n):
            row = []
            for j in range(n):
                if i < a.n and j < a.n:
                    row.append(a.gram[i][j])
                elif i >= a.n and j >= a.n:
                    row.append(b.gram[i - a.n][j - a.n])
                else:
                    row.append(z)
            gram.append(tuple(row))
        return BilinearStructure(field, n, a.d, tuple(gram))

    def gram_int_array(self) -> np.ndarray:
        return np.array(
            [[list(self.gram[i][j].coords) for j in range(self.n)] for i in range(self.n)],
            dtype=np.int64,
        )


@dataclass(frozen=True)
class Counterexample:
    """A failing quantified tuple plus one target no z can reach."""

    vectors: tuple[VectorFp, ...]
    targets: tuple[VectorFp, ...]


@dataclass(frozen=True)
class AxiomVerdict:
    holds: bool
    counterexample: Optional[Counterexample]
    cases_checked: int


def beta_eval(s: BilinearStructure, v1: VectorFp, v2: VectorFp) -> VectorFp:
    """beta(v1, v2), the bilinear extension of the Gram array."""
    if v1.dim != s.n or v2.dim != s.n:
        raise ValueError(f"arguments must have dim {s.n}")
    p = s.field.p
    acc = [0] * s.d
    for i, a in enumerate(v1.coords):
        if a == 0:
            continue
        for j, b in enumerate(v2.coords):
            if b == 0:
                continue
            ab = a * b
            w = s.gram[i][j].coords
            for t in range(s.d):
                acc[t] += ab * w[t]
    return VectorFp(s.field, tuple(x % p for x in acc))


def left_map(s: BilinearStructure, v: VectorFp) -> MatrixFp:
    """The d x n matrix of z -> beta(v, z)."""
    if v.dim != s.n:
        raise ValueError(f"argument must have dim {s.n}")
    p = s.field.p
    cols = []
    for j in range(s.n):
        col = [0] * s.d
        for i, a in enumerate(v.coords):
            if a == 0:
                continue
            w = s.gram[i][j].coords
            for t in range(s.d):
                col[t] += a * w[t]
        cols.append([x % p for x in col])
    entries = tuple(tuple(cols[j][t] for j in range(s.n)) for t in range(s.d))
    return MatrixFp(s.field, s.d, s.n, entries)


def right_map(s: BilinearStructure, v: VectorFp) -> MatrixFp:
    """The d x n matrix of z -> beta(z, v)."""
    if v.dim != s.n:
        raise ValueError(f"argument must have dim {s.n}")
    p = s.field.p
    entries = []
    for t in range(s.d):
        row = []
        for j in range(s.n):
            acc = 0
            for i, a in enumerate(v.coords):
                acc += a * s.gram[j][i].coords[t]
            row.append(acc % p)
        entries.append(tuple(row))
    return MatrixFp(s.field, s.d, s.n, tuple(entries))


def is_alternating(s: BilinearStructure) -> bool:
    """True iff beta(v, v) = 0 for all v: zero diagonal and gram[i][j] = -gram[j][i]."""
    for i in range(s.n):
        if not s.gram[i][i].is_zero():
            return False
        for j in range(i + 1, s.n):
            if not (s.gram[i][j] + s.gram[j][i]).is_zero():
                return False
    return True


def radical(s: BilinearStructure) -> Subspace:
    """{v : beta(v, .) = 0 and beta(., v) = 0} in canonical form."""
    p = s.field.p
    rows = []
    for j in range(s.n):
        for t in range(s.d):
            rows.append(tuple(s.gram[i][j].coords[t] % p for i in range(s.n)))
    for j in range(s.n):
        for t in range(s.d):
            rows.append(tuple(s.gram[j][i].coords[t] % p for i in range(s.n)))
    stacked = MatrixFp(s.field, len(rows), s.n, tuple(rows))
    return kernel(stacked)


def _stacked_map(s: BilinearStructure, vs: Sequence[VectorFp]) -> MatrixFp:
    return MatrixFp.vstack(s.field, [left_map(s, v) for v in vs], cols=s.n)


def _unreachable_target(
    s: BilinearStructure, stacked: MatrixFp, k: int
) -> tuple[VectorFp, ...]:
    """Least standard basis vector of W^k outside the image, split into blocks.

    The image of the stacked map is a proper subspace here, and a proper
    subspace cannot contain every standard basis vector.
    """
    image = Subspace.from_vectors(
        s.field, stacked.rows, stacked.transpose().row_vectors()
    )
    m = stacked.rows
    for i in range(m):
        e = VectorFp.unit(s.field, m, i)
        if not image.contains(e):
            blocks = tuple(
                VectorFp(s.field, e.coords[b * s.d : (b + 1) * s.d]) for b in range(k)
            )
            return blocks
    raise AssertionError("surjective map passed to _unreachable_target")


def sigma_check(s: BilinearStructure, k: int) -> AxiomVerdict:
    """The k-fold simultaneous-solvability axiom on (V, W, beta).

    Holds iff for every linearly independent k-tuple in V and all targets in
    W^k some z solves beta(v_i, z) = w_i for all i. One canonical basis per
    k-dimensional subspace is tested for surjectivity of the stacked map;
    k > n holds vacuously with cases_checked = 0.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > s.n:
        return AxiomVerdict(holds=True, counterexample=None, cases_checked=0)
    cases = 0
    for sub in enumerate_subspaces(s.n, k, s.field):
        cases += 1
        vs = sub.basis.row_vectors()
        stacked = _stacked_map(s, vs)
        rank, _ = rref(stacked)
        if rank < k * s.d:
            targets = _unreachable_target(s, stacked, k)
            flat = targets[0]
            for t in targets[1:]:
                flat = flat.concat(t)
            assert solve(stacked, flat) is None
            return AxiomVerdict(
                holds=False,
                counterexample=Counterexample(vectors=tuple(vs), targets=targets),
                cases_checked=cases,
            )
    return AxiomVerdict(holds=True, counterexample=None, cases_checked=cases)


def psi_check(s: BilinearStructure) -> AxiomVerdict:
    """The two-variable simultaneous-solvability sentence; requires dim V >= 2."""
    if s.n < 2:
        raise ValueError("hypothesis of psi requires dim V >= 2")
    return sigma_check(s, 2)


def sigma_failure_density(s: BilinearStructure, k: int) -> tuple[Fraction, Fraction]:
    """(failing-subspace fraction, mean unreachable-target fraction among failures).

    The first component is the exact fraction of k-dimensional subspaces of V
    whose stacked map is not surjective onto W^k. For each failing subspace
    the image reaches p^rank of the p^(k*d) targets; the second component
    averages the unreachable fraction over the failing subspaces. Both are
    exact rationals; (0, 0) when nothing fails.
    """
    if k < 1 or k > s.n:
        raise ValueError(f"k must be in [1, {s.n}]")
    p = s.field.p
    total = 0
    failing = 0
    unreachable_sum = Fraction(0)
    target_count = p ** (k * s.d)
    for sub in enumerate_subspaces(s.n, k, s.field):
        total += 1
        stacked = _stacked_map(s, sub.basis.row_vectors())
        rank, _ = rref(stacked)
        if rank < k * s.d:
            failing += 1
            unreachable_sum += Fraction(target_count - p**rank, target_count)
    assert total == gaussian_binomial(s.n, k, p)
    if failing == 0:
        return Fraction(0), Fraction(0)
    return Fraction(failing, total), unreachable_sum / failing


def counting_bound(p: int, n: int, d: int) -> tuple[int, int, int, bool]:
    """The dual-space packing count behind the no-finite-model argument.

    A surjective family would give (p^n-1)/(p-1) dual subspaces of dimension
    d with pairwise trivial intersection; they would need family*(p^d - 1)
    distinct nonzero vectors, but only p^n - 1 exist. Returns (family_size,
    vectors_required, vectors_available, packing_possible).
    """
    PrimeField(p)
    if n < 2 or d < 1:
        raise ValueError("requires n >= 2 and d >= 1")
    family_size = (p**n - 1) // (p - 1)
    vectors_required = family_size * (p**d - 1)
    vectors_available = p**n - 1
    return family_size, vectors_required, vectors_available, vectors_required <= vectors_available


@dataclass(frozen=True)
class ExhaustReport:
    p: int
    n: int
    d: int
    maps_checked: int
    satisfying_count: int
    first_satisfying_index: Optional[int]
    refutation: bool  # a psi-satisfying map was found although n >= 2 and d >= 2


def structure_from_index(p: int, n: int, d: int, index: int) -> BilinearStructure:
    """The bilinear map at a given odometer position.

    Gram entries are ordered row-major as (i, j, t) with entry (0,0,0) the
    least significant digit; digit e of the base-p expansion of index is the
    residue of entry number e.
    """
    total = p ** (d * n * n)
    if not 0 <= index < total:
        raise ValueError(f"index out of range [0, {total})")
    digits = []
    x = index
    for _ in range(d * n * n):
        digits.append(x % p)
        x //= p
    entries = [
        [[digits[(i * n + j) * d + t] for t in range(d)] for j in range(n)] for i in range(n)
    ]
    return BilinearStructure.from_entries(p, n, d, entries)


def _inverse_table(p: int) -> np.ndarray:
    inv = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        inv[a] = pow(a, p - 2, p)
    return inv


def _batched_rank_modp(mats: np.ndarray, p: int, inv: np.ndarray) -> np.ndarray:
    """Ranks of a (B, m, n) batch over GF(p) via vectorized Jordan elimination."""
    a = np.ascontiguousarray(mats % p, dtype=np.int64)
    nbatch, m, n = a.shape
    cursor = np.zeros(nbatch, dtype=np.int64)
    row_idx = np.arange(m)
    for c in range(n):
        eligible = (a[:, :, c] != 0) & (row_idx[None, :] >= cursor[:, None])
        has = eligible.any(axis=1)
        if not has.any():
            continue
        sel = np.nonzero(has)[0]
        sub = a[sel]
        k = len(sel)
        ar = np.arange(k)
        piv = eligible[sel].argmax(axis=1)
        cur = cursor[sel]
        tmp = sub[ar, cur].copy()
        sub[ar, cur] = sub[ar, piv]
        sub[ar, piv] = tmp
        sub[ar, cur] = (sub[ar, cur] * inv[sub[ar, cur, c]][:, None]) % p
        factors = sub[:, :, c].copy()
        factors[ar, cur] = 0
        sub = (sub - factors[:, :, None] * sub[ar, cur][:, None, :]) % p
        a[sel] = sub
        cursor[sel] += 1
    return cursor


def _exhaust_chunk(
    p: int, n: int, d: int, start: int, stop: int, bases: list[np.ndarray], inv: np.ndarray
) -> tuple[int, int, Optional[int]]:
    """(maps, satisfying, least satisfying index) over [start, stop)."""
    idx = np.arange(start, stop, dtype=np.int64)
    nentries = d * n * n
    digits = np.empty((len(idx), nentries), dtype=np.int64)
    x = idx.copy()
    for e in range(nentries):
        digits[:, e] = x % p
        x //= p
    grams = digits.reshape(len(idx), n, n, d)
    if not bases:
        # no independent pair exists (n < 2): psi is vacuously true everywhere
        return len(idx), len(idx), start if len(idx) else None
    ok = np.ones(len(idx), dtype=bool)
    for basis in bases:
        blocks = [
            np.einsum("i,bijt->btj", row, grams, optimize=True) % p for row in basis
        ]
        stacked = np.concatenate(blocks, axis=1)
        ok &= _batched_rank_modp(stacked, p, inv) == 2 * d
    sat = int(ok.sum())
    first = int(idx[ok][0]) if sat else None
    return len(idx), sat, first


def lemma_bil_exhaust(
    p: int,
    n: int,
    d: int,
    budget: int = DEFAULT_MAP_BUDGET,
    threads: int = 1,
    chunk_size: int = 1 << 15,
) -> ExhaustReport:
    """Enumerate all p^(d*n*n) bilinear maps and count those satisfying psi.

    For n >= 2 and d >= 2 the satisfying count must be 0; a nonzero count is
    a refutation event. n = 1 (vacuous psi) and d = 1 act as negative
    controls. Partial counts over enumeration shards combine by addition, so
    the report is independent of thread count.
    """
    field = PrimeField(p)
    if p == 2:
        raise ValueError("requires an odd prime")
    if n < 1 or d < 1:
        raise ValueError("both dimensions must be at least 1")
    total = p ** (d * n * n)
    if total > budget:
        raise ValueError(
            f"enumeration of {total} maps exceeds budget {budget}; "
            f"raise the budget to at least {total} to run this size"
        )
    bases = [
        np.array(sub.basis.entries, dtype=np.int64)
        for sub in enumerate_subspaces(n, 2, field)
    ] if n >= 2 else []
    inv = _inverse_table(p)
    ranges = [(s, min(s + chunk_size, total)) for s in range(0, total, chunk_size)]

    def run(rng: tuple[int, int]) -> tuple[int, int, Optional[int]]:
        return _exhaust_chunk(p, n, d, rng[0], rng[1], bases, inv)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, ranges))
    else:
        parts = [run(r) for r in ranges]
    checked = sum(c for c, _, _ in parts)
    satisfying = sum(s for _, s, _ in parts)
    firsts = [f for _, _, f in parts if f is not None]
    first = min(firsts) if firsts else None
    return ExhaustReport(
        p=p,
        n=n,
        d=d,
        maps_checked=checked,
        satisfying_count=satisfying,
        first_satisfying_index=first,
        refutation=(n >= 2 and d >= 2 and satisfying > 0),
    )


# ---------------------------------------------------------------------------
# Structure text format (shared with the CLI): first line "p n d", then n*n
# lines of d residues each, Gram entries row-major; '#' starts a comment.
# ---------------------------------------------------------------------------


def parse_structure(text: str) -> BilinearStructure:
    lines = list(iter_data_lines(text))
    if not lines:
        raise ParseError(1, "empty structure file")
    lineno, header = lines[0]
    p, n, d = parse_ints(lineno, header, expected=3)
    body = lines[1:]
    if len(body) != n * n:
        raise ParseError(lineno, f"expected {n * n} gram rows, found {len(body)}")
    entries = [[[0] * d for _ in range(n)] for _ in range(n)]
    for pos, (ln, line) in enumerate(body):
        entries[pos // n][pos % n] = parse_ints(ln, line, expected=d)
    try:
        return BilinearStructure.from_entries(p, n, d, entries)
    except ValueError as exc:
        raise ParseError(lineno, str(exc)) from None


def format_structure(s: BilinearStructure) -> str:
    out = [f"{s.field.p} {s.n} {s.d}"]
    for i in range(s.n):
        for j in range(s.n):
            out.append(" ".join(str(c) for c in s.gram[i][j].coords))
    return "\n".join(out) + "\n"
