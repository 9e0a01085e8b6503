"""Heights, purity, and finite instances of the comprehensive-extension condition.

An abelian p-group here is a product of cyclic groups of orders p^e1 >= p^e2
>= ...; heights and purity are computed by honest sweeps. The extension
condition asks, for a finite pure subgroup A of G* = G/Z and compatible data
(alpha: A -> Z, w in Z, r), for an element g in G with

    <A, g*> pure in G*,  |g*| = p^r,  g^(p^r) = w,  [a, g*] = alpha(a) for all a in A.

Finite groups generally fail some instances, so the checkers report
satisfaction per instance and a "satisfied up to bounds" tally rather than a
single verdict. Since the groups this artifact builds have exponent p,
purity inside G* is exercised for real on standalone mixed-exponent
fixtures in the tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence

from .fplinalg import VectorFp, enumerate_subspaces
from .groups import C2El, Class2Group
from .textio import ParseError, iter_data_lines, parse_ints


@dataclass(frozen=True)
class AbelianPGroup:
    """Product of cyclic groups of orders p^e1 >= p^e2 >= ... (possibly none)."""

    p: int
    exponents: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(e < 1 for e in self.exponents):
            raise ValueError("cyclic factor exponents must be positive")
        if any(a < b for a, b in zip(self.exponents, self.exponents[1:])):
            raise ValueError("exponents must be non-increasing")

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(self.p**e for e in self.exponents)

    @property
    def order(self) -> int:
        out = 1
        for m in self.moduli:
            out *= m
        return out

    def identity(self) -> tuple[int, ...]:
        return (0,) * len(self.exponents)

    def reduce(self, g: Sequence[int]) -> tuple[int, ...]:
        return tuple(x % m for x, m in zip(g, self.moduli))

    def add(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        return tuple((x + y) % m for x, y, m in zip(a, b, self.moduli))

    def neg(self, a: Sequence[int]) -> tuple[int, ...]:
        return tuple((-x) % m for x, m in zip(a, self.moduli))

    def scale(self, k: int, a: Sequence[int]) -> tuple[int, ...]:
        return tuple((k * x) % m for x, m in zip(a, self.moduli))

    def elements(self) -> Iterator[tuple[int, ...]]:
        for tup in itertools.product(*(range(m) for m in self.moduli)):
            yield tup

    def element_order(self, a: Sequence[int]) -> int:
        order = 1
        for x, e in zip(a, self.exponents):
            if x == 0:
                continue
            val = x
            m = e
            while val % self.p == 0:
                val //= self.p
                m -= 1
            order = max(order, self.p**m)
        return order

    def subgroup(self, gens: Iterable[Sequence[int]]) -> frozenset[tuple[int, ...]]:
        gens = [self.reduce(g) for g in gens]
        members = {self.identity()} | set(gens)
        frontier = list(members)
        while frontier:
            new = []
            for a in frontier:
                for b in gens:
                    c = self.add(a, b)
                    if c not in members:
                        members.add(c)
                        new.append(c)
            frontier = new
        return frozenset(members)


def height(a: AbelianPGroup, g: Sequence[int]) -> Optional[int]:
    """sup{n >= 0 : g is a p^n-th power in a}; None encodes the infinite height
    of the identity (every arithmetic elsewhere stays in exact integers)."""
    g = a.reduce(g)
    if not a.exponents:
        return None
    e1 = a.exponents[0]
    best: Optional[int] = None
    for n in range(e1 + 1):
        solvable = all(
            x % (a.p ** min(n, e)) == 0 for x, e in zip(g, a.exponents)
        )
        if solvable:
            best = n
        else:
            break
    if best == e1:
        return None  # only the identity is a p^e1-th power
    return best


def height_in(
    a: AbelianPGroup, members: frozenset[tuple[int, ...]], g: Sequence[int]
) -> Optional[int]:
    """Height computed inside a subgroup, by sweeping its elements."""
    g = a.reduce(g)
    if g not in members:
        raise ValueError("element does not belong to the subgroup")
    bound = a.exponents[0] if a.exponents else 0
    best: Optional[int] = None
    for n in range(bound + 1):
        power = a.p**n
        if any(a.scale(power, h) == g for h in members):
            best = n
        else:
            break
    if best == bound:
        return None
    return best


def is_pure(a: AbelianPGroup, members: frozenset[tuple[int, ...]]) -> bool:
    """Whether the subgroup computes the same heights as the ambient group."""
    return all(height_in(a, members, g) == height(a, g) for g in members)


# ---------------------------------------------------------------------------
# The extension condition on bilinear-presented groups
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StarInstance:
    """One instance of the extension condition on a Class2Group.

    Generators are lifts in G whose images generate A <= G*; alpha is given
    by its values on those generators (central elements of G); w is central;
    r is the order exponent demanded of the witness image.
    """

    generators: tuple[C2El, ...]
    alpha_images: tuple[C2El, ...]
    w: C2El
    r: int


@dataclass(frozen=True)
class StarContext:
    """G* = G/Z as an elementary abelian group with explicit coordinates."""

    group: Class2Group
    gstar: AbelianPGroup
    complement: tuple[int, ...]  # V-coordinates carrying G*

    @staticmethod
    def for_group(g: Class2Group) -> "StarContext":
        rad = g.center_subspace()
        pivots = {
            next(j for j in range(g.n) if rad.basis.entries[i][j] != 0)
            for i in range(rad.rank)
        }
        complement = tuple(j for j in range(g.n) if j not in pivots)
        gstar = AbelianPGroup(g.p, (1,) * len(complement))
        return StarContext(group=g, gstar=gstar, complement=complement)

    def star_coords(self, x: C2El) -> tuple[int, ...]:
        g = self.group
        rad = g.center_subspace()
        coords = list(x[0].coords)
        for i in range(rad.rank):
            c = next(j for j in range(g.n) if rad.basis.entries[i][j] != 0)
            f = coords[c]
            if f:
                for j in range(g.n):
                    coords[j] = (coords[j] - f * rad.basis.entries[i][j]) % g.p
        return tuple(coords[j] for j in self.complement)

    def lift(self, star: Sequence[int]) -> C2El:
        g = self.group
        coords = [0] * g.n
        for c, j in zip(star, self.complement):
            coords[j] = c
        return (VectorFp(g.field, tuple(coords)), VectorFp.zero(g.field, g.d))

    def star_order(self, x: C2El) -> int:
        return 1 if self.group.is_central(x) else self.group.p

    def exponent_star(self) -> int:
        return 1 if self.gstar.order == 1 or _all_central(self.group) else self.group.p


def _all_central(g: Class2Group) -> bool:
    return g.center_subspace().dim == g.n


class InvalidInstance(ValueError):
    """A hypothesis clause of the extension condition fails."""


@dataclass(frozen=True)
class AlphaMap:
    """alpha closed over A: star-coords -> required central value, or marked
    contradictory when the generator data does not factor through G*."""

    table: dict[tuple[int, ...], C2El]
    consistent: bool


def _close_alpha(ctx: StarContext, inst: StarInstance) -> AlphaMap:
    g = ctx.group
    table: dict[tuple[int, ...], C2El] = {ctx.gstar.identity(): g.identity()}
    consistent = True
    frontier = [ctx.gstar.identity()]
    gen_pairs = [
        (ctx.star_coords(gen), val) for gen, val in zip(inst.generators, inst.alpha_images)
    ]
    while frontier:
        new = []
        for a in frontier:
            for s, val in gen_pairs:
                b = ctx.gstar.add(a, s)
                combined = g.mul(table[a], val)
                if b in table:
                    if table[b] != combined:
                        consistent = False
                else:
                    table[b] = combined
                    new.append(b)
        frontier = new
    return AlphaMap(table=table, consistent=consistent)


def _validate_instance(ctx: StarContext, inst: StarInstance) -> AlphaMap:
    g = ctx.group
    if len(inst.alpha_images) != len(inst.generators):
        raise InvalidInstance("alpha must assign one value per generator")
    for val in inst.alpha_images + (inst.w,):
        if not g.is_central(val):
            raise InvalidInstance("alpha values and w must be central")
    if inst.r < 0:
        raise InvalidInstance("r must be non-negative")
    closed = _close_alpha(ctx, inst)
    # exp(alpha(A)) is read off the closed table: the values actually taken on A
    exp_alpha = 1
    for val in closed.table.values():
        if val != g.identity():
            exp_alpha = g.p
    exp_star = ctx.exponent_star()
    if not exp_alpha <= g.p**inst.r:
        raise InvalidInstance("hypothesis exp(alpha(A)) <= p^r fails")
    if not g.p**inst.r <= exp_star:
        raise InvalidInstance("hypothesis p^r <= exp(G*) fails")
    w_order = 1 if inst.w == g.identity() else g.p
    exp_g = 1 if g.order == 1 else g.p
    if not g.p**inst.r * w_order <= exp_g:
        raise InvalidInstance("hypothesis p^r * |w| <= exp(G) fails")
    return closed


def _clauses_hold(ctx: StarContext, inst: StarInstance, alpha: AlphaMap, cand: C2El) -> bool:
    g = ctx.group
    if not alpha.consistent:
        return False
    # |g*| = p^r
    if ctx.star_order(cand) != g.p**inst.r:
        return False
    # g^(p^r) = w
    if g.power(cand, g.p**inst.r) != inst.w:
        return False
    # [a, g*] = alpha(a) for every a in A
    for coords, val in alpha.table.items():
        lifted = ctx.lift(coords)
        if g.comm(lifted, cand) != val:
            return False
    # <A, g*> pure in G*
    joined = ctx.gstar.subgroup(list(alpha.table.keys()) + [ctx.star_coords(cand)])
    if not is_pure(ctx.gstar, joined):
        return False
    return True


@dataclass
class _WitnessEngine:
    """Per-group state for sweeping witness candidates through the table."""

    ctx: StarContext
    central: frozenset[int]

    @staticmethod
    def for_group(g: Class2Group) -> "_WitnessEngine":
        return _witness_engine_cached(g)


@lru_cache(maxsize=None)
def _witness_engine_cached(g: Class2Group) -> _WitnessEngine:
    ctx = StarContext.for_group(g)
    central = frozenset(g.as_table().center_indices())
    return _WitnessEngine(ctx=ctx, central=central)


def star_witness(g: Class2Group, inst: StarInstance) -> Optional[C2El]:
    """First element of G satisfying all four clauses, or None after a full sweep.

    Hypothesis-clause violations raise InvalidInstance naming the clause;
    alpha data that fails to factor through G* makes the commutator clause
    contradictory, so such instances report absent.
    """
    engine = _WitnessEngine.for_group(g)
    ctx = engine.ctx
    alpha = _validate_instance(ctx, inst)
    if not alpha.consistent:
        return None  # conflicting demands on the same element of A
    t = g.as_table()
    pr = g.p**inst.r
    w_idx = g.index_of(inst.w)
    alpha_pairs = [
        (g.index_of(ctx.lift(coords)), g.index_of(val))
        for coords, val in alpha.table.items()
    ]
    a_coords = list(alpha.table.keys())
    for idx in range(g.order):
        central = idx in engine.central
        if central != (inst.r == 0):
            continue
        if t.power(idx, pr) != w_idx:
            continue
        if any(t.comm(a_i, idx) != v_i for a_i, v_i in alpha_pairs):
            continue
        cand = g.element_by_index(idx)
        joined = ctx.gstar.subgroup(a_coords + [ctx.star_coords(cand)])
        if not is_pure(ctx.gstar, joined):
            continue
        assert _clauses_hold(ctx, inst, alpha, cand)  # re-verify before returning
        return cand
    return None


@dataclass(frozen=True)
class StarScanReport:
    max_rank: int
    subgroups_seen: int
    instances_checked: int
    satisfied: int
    failed: int
    truncated: bool
    failures: tuple[StarInstance, ...]  # capped sample of failing instances


def star_scan(
    g: Class2Group,
    max_a_rank: int,
    max_instances: int = 10**5,
    failure_cap: int = 20,
) -> StarScanReport:
    """Sweep pure subgroups A of G* up to a rank bound with all compatible data.

    Enumeration order is deterministic: subgroup rank ascending with the RREF
    subspace order, homomorphisms by an odometer over the centre's element
    order, r ascending, then w in centre order. Instances whose hypothesis
    clauses fail are skipped (they are outside the condition); the tally
    counts satisfied versus failed instances within budget.
    """
    if max_a_rank < 0 or max_instances <= 0:
        raise ValueError("bounds must be positive")
    ctx = StarContext.for_group(g)
    dim = len(ctx.complement)
    center = sorted(g.center_elements(), key=g.index_of)
    exp_star = ctx.exponent_star()
    t_max = 0 if exp_star == 1 else 1
    checked = satisfied = failed = 0
    subgroups = 0
    truncated = False
    failures: list[StarInstance] = []
    for rank in range(0, min(max_a_rank, dim) + 1):
        for sub in enumerate_subspaces(dim, rank, g.field):
            a_members = frozenset(tuple(v.coords) for v in sub.vectors())
            if not is_pure(ctx.gstar, a_members):
                continue
            subgroups += 1
            gens = [ctx.lift(row) for row in sub.basis.entries]
            for r in range(0, t_max + 1):
                image_pool = (
                    [g.identity()] if r == 0 else [el for el in center]
                )
                for images in itertools.product(image_pool, repeat=rank):
                    w_pool = center if r == 0 else [g.identity()]
                    for w in w_pool:
                        if checked >= max_instances:
                            truncated = True
                            break
                        inst = StarInstance(
                            generators=tuple(gens),
                            alpha_images=tuple(images),
                            w=w,
                            r=r,
                        )
                        checked += 1
                        if star_witness(g, inst) is not None:
                            satisfied += 1
                        else:
                            failed += 1
                            if len(failures) < failure_cap:
                                failures.append(inst)
                    if truncated:
                        break
                if truncated:
                    break
            if truncated:
                break
        if truncated:
            break
    return StarScanReport(
        max_rank=max_a_rank,
        subgroups_seen=subgroups,
        instances_checked=checked,
        satisfied=satisfied,
        failed=failed,
        truncated=truncated,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# Instance text format: one record per line, all whitespace-separated ints:
#   k  then k*n ints (generator V-coordinates)
#      then k*(n+d) ints (alpha images as full element coordinates)
#      then (n+d) ints (w)  then r
# ---------------------------------------------------------------------------


def parse_instances(text: str, g: Class2Group) -> list[StarInstance]:
    out = []
    n, d = g.n, g.d
    for lineno, line in iter_data_lines(text):
        vals = parse_ints(lineno, line)
        if not vals:
            continue
        k = vals[0]
        expected = 1 + k * n + k * (n + d) + (n + d) + 1
        if len(vals) != expected:
            raise ParseError(lineno, f"expected {expected} integers for k={k}, found {len(vals)}")
        pos = 1
        gens = []
        for _ in range(k):
            coords = vals[pos : pos + n]
            pos += n
            gens.append((VectorFp(g.field, tuple(coords)), VectorFp.zero(g.field, d)))
        images = []
        for _ in range(k):
            coords = vals[pos : pos + n + d]
            pos += n + d
            images.append(
                (VectorFp(g.field, tuple(coords[:n])), VectorFp(g.field, tuple(coords[n:])))
            )
        wc = vals[pos : pos + n + d]
        pos += n + d
        w = (VectorFp(g.field, tuple(wc[:n])), VectorFp(g.field, tuple(wc[n:])))
        r = vals[pos]
        out.append(StarInstance(tuple(gens), tuple(images), w, r))
    return out


def format_instance(inst: StarInstance) -> str:
    parts = [str(len(inst.generators))]
    for gen in inst.generators:
        parts.extend(str(c) for c in gen[0].coords)
    for val in inst.alpha_images:
        parts.extend(str(c) for c in val[0].coords + val[1].coords)
    parts.extend(str(c) for c in inst.w[0].coords + inst.w[1].coords)
    parts.append(str(inst.r))
    return " ".join(parts)
