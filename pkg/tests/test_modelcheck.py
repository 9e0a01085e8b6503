"""Centralizers, axiom evaluation on groups, and direct-power diagnostics."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from nil2check.bilinear import BilinearStructure, sigma_check
from nil2check.fplinalg import MatrixFp, rref
from nil2check.groups import (
    central_product,
    extraspecial,
    group_from_bilinear,
    heisenberg,
)
from nil2check.modelcheck import (
    FAIL_CENTER_GAP,
    FAIL_RANK,
    centralizer,
    centralizer_elements,
    finite_stage_maximality,
    reduced_structure,
    rho_check,
    sigma_on_group,
    sop_chain_direct_power,
)

COHERENCE_GROUPS = [
    ("extraspecial(3,1)", lambda: extraspecial(3, 1)),
    ("extraspecial(3,2)", lambda: extraspecial(3, 2)),
    ("heisenberg(3,2,1)", lambda: heisenberg(3, 2, 1)),
    ("central_product(extraspecial(3,1),2)", lambda: central_product(extraspecial(3, 1), 2)),
]


def abelian_group(p=3, n=1, d=1):
    return group_from_bilinear(BilinearStructure.zero(p, n, d))


def radical_example():
    # symplectic plane plus a one-dimensional radical: order 3^4
    entries = [[[0], [1], [0]], [[-1], [0], [0]], [[0], [0], [0]]]
    return group_from_bilinear(BilinearStructure.from_entries(3, 3, 1, entries))


def lifted_sigma_oracle(g, k: int) -> bool:
    """Brute force over all independent lifted tuples, all targets, all y.

    Tuples sweep every independent combination of V-vectors (not one basis
    per subspace), so this is a genuine oracle for the canonical-basis
    optimization; commutators do not depend on the W-part, which the
    construction certificate established separately.
    """
    t = g.as_table()
    dense = t.dense.astype(np.int64)
    inv = np.array(t.inverse, dtype=np.int64)
    wn = g.p**g.d
    center = set(t.center_indices())
    zelems = sorted(center)
    n_v = g.p**g.n
    lifts = [i * wn for i in range(1, n_v)]  # nonzero v, w = 0
    ally = np.arange(t.order, dtype=np.int64)

    def comm_with_all(x: int) -> np.ndarray:
        return dense[dense[dense[inv[x], inv[ally]], x], ally]

    comm_cache = {x: comm_with_all(x) for x in lifts}
    for tup in itertools.product(lifts, repeat=k):
        rows = [g.element_by_index(i)[0].coords for i in tup]
        rank, _ = rref(MatrixFp.from_rows(g.field, rows, cols=g.n))
        if rank < k:
            continue
        reachable = set(
            zip(*(comm_cache[x].tolist() for x in tup))
        )
        for targets in itertools.product(zelems, repeat=k):
            if targets not in reachable:
                return False
    return True


def element_sigma_oracle(g, k: int) -> bool:
    """Brute force over all independent tuples of actual group elements."""
    t = g.as_table()
    center = set(t.center_indices())
    zelems = sorted(center)
    non_central = [i for i in range(t.order) if i not in center]
    rad = g.center_subspace()

    def star(idx):
        coords = list(g.element_by_index(idx)[0].coords)
        for i in range(rad.rank):
            c = next(j for j in range(g.n) if rad.basis.entries[i][j] != 0)
            f = coords[c]
            if f:
                for j in range(g.n):
                    coords[j] = (coords[j] - f * rad.basis.entries[i][j]) % g.p
        return coords

    for tup in itertools.product(non_central, repeat=k):
        rows = [star(i) for i in tup]
        rank, _ = rref(MatrixFp.from_rows(g.field, rows, cols=g.n))
        if rank < k:
            continue
        for targets in itertools.product(zelems, repeat=k):
            if not any(
                all(t.comm(x, y) == h for x, h in zip(tup, targets))
                for y in range(t.order)
            ):
                return False
    return True


class TestCentralizer:
    def test_central_element_gives_whole_group(self):
        g = extraspecial(3, 1)
        rec = centralizer(g, g.element_by_index(1))
        assert rec.order == 27

    def test_non_central_order_nine(self):
        g = extraspecial(3, 1)
        rec = centralizer(g, g.element_by_index(3))
        assert rec.order == 9

    @pytest.mark.parametrize(
        "maker",
        [
            lambda: extraspecial(3, 1),
            lambda: extraspecial(3, 2),
            lambda: abelian_group(),
            radical_example,
        ],
    )
    def test_kernel_formula_agrees_with_table_scan(self, maker):
        g = maker()
        t = g.as_table()
        for i in range(t.order):
            x = g.element_by_index(i)
            members = centralizer_elements(g, x)
            scan = {j for j in range(t.order) if t.mul(i, j) == t.mul(j, i)}
            assert members == scan
            assert centralizer(g, x).order == len(scan)

    def test_table_group_scan(self):
        t = extraspecial(3, 1).as_table()
        rec = centralizer(t, 3)
        assert rec.order == 9
        assert len(rec.members) == 9


class TestRho:
    @pytest.mark.parametrize("p,k", [(3, 1), (3, 2), (5, 1)])
    def test_extraspecial(self, p, k):
        assert rho_check(extraspecial(p, k))

    def test_abelian_fails(self):
        assert not rho_check(abelian_group())

    def test_radical_makes_center_exceed_commutators(self):
        g = radical_example()
        assert g.order == 81
        assert not rho_check(g)


class TestSigmaOnGroup:
    def test_extraspecial_32_k2_holds(self):
        assert sigma_on_group(extraspecial(3, 2), 2).holds

    def test_heisenberg_k2_fails(self):
        verdict = sigma_on_group(heisenberg(3, 2, 1), 2)
        assert not verdict.holds
        assert verdict.failure_mode == FAIL_RANK
        assert verdict.counterexample is not None

    def test_nondegenerate_k1_holds(self):
        for g in (extraspecial(3, 1), extraspecial(3, 2), heisenberg(3, 2, 1)):
            assert sigma_on_group(g, 1).holds

    def test_radical_failure_reports_center_gap(self):
        verdict = sigma_on_group(radical_example(), 1)
        assert not verdict.holds
        assert verdict.failure_mode == FAIL_CENTER_GAP

    def test_counterexample_revalidates_by_table_sweep(self):
        g = heisenberg(3, 2, 1)
        verdict = sigma_on_group(g, 2)
        cex = verdict.counterexample
        t = g.as_table()
        xs = [g.index_of(el) for el in cex.elements]
        hs = [g.index_of(el) for el in cex.targets]
        for y in range(t.order):
            assert not all(t.comm(x, y) == h for x, h in zip(xs, hs))

    def test_oracle_lifted_tuples(self):
        # oracle sweeping every independent tuple, not one basis per subspace
        assert lifted_sigma_oracle(extraspecial(3, 2), 2)
        assert not lifted_sigma_oracle(heisenberg(3, 2, 1), 2)

    def test_oracle_full_element_tuples_small(self):
        g = extraspecial(3, 1)
        for k in (1, 2):
            assert element_sigma_oracle(g, k) == sigma_on_group(g, k).holds


class TestReductionCoherence:
    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("name,maker", COHERENCE_GROUPS)
    def test_group_matches_bilinear(self, k, name, maker):
        g = maker()
        assert sigma_on_group(g, k).holds == sigma_check(reduced_structure(g), k).holds

    def test_reduction_of_radical_free_group_is_identity(self):
        g = extraspecial(3, 1)
        assert reduced_structure(g) == g.structure

    def test_reduction_with_radical(self):
        g = radical_example()
        s = reduced_structure(g)
        assert s.n == 2  # V/Z collapses the radical line
        assert s.d == 2  # Z = radical x W


class TestSopChain:
    def test_chain_k3_orders(self):
        r = sop_chain_direct_power(extraspecial(3, 1), 3)
        assert r.centralizer_orders == (9 * 27 * 27, 9 * 9 * 27, 9 * 9 * 9)
        assert all(r.strict)

    def test_chain_k4_acceptance_shape(self):
        r = sop_chain_direct_power(extraspecial(3, 1), 4)
        assert r.centralizer_orders == (9 * 27**3, 9**2 * 27**2, 9**3 * 27, 9**4)
        orders = r.centralizer_orders
        assert all(a > b for a, b in zip(orders, orders[1:]))
        assert all(r.strict)

    def test_monotonicity_formula(self):
        g = extraspecial(3, 1)
        x = g.element_by_index(3)
        cx = centralizer(g, x).order
        r = sop_chain_direct_power(g, 3)
        for i, order in enumerate(r.centralizer_orders, start=1):
            assert order == cx**i * g.order ** (3 - i)

    def test_k1_single_element_chain(self):
        r = sop_chain_direct_power(extraspecial(3, 1), 1)
        assert len(r.elements) == 1
        assert r.strict == ()

    def test_separators_validated_by_multiplication(self):
        g = extraspecial(3, 1)
        t = g.as_table()
        r = sop_chain_direct_power(g, 3)
        for i, sep in enumerate(r.separators):
            phi_i, phi_next = r.elements[i], r.elements[i + 1]
            assert all(t.mul(a, b) == t.mul(b, a) for a, b in zip(sep, phi_i))
            assert any(t.mul(a, b) != t.mul(b, a) for a, b in zip(sep, phi_next))

    def test_abelian_rejected(self):
        with pytest.raises(ValueError, match="abelian"):
            sop_chain_direct_power(abelian_group(), 2)


class TestMaximality:
    def test_k2_minimal_centralizer(self):
        rep = finite_stage_maximality(extraspecial(3, 1), 2)
        assert rep.centralizer_order == 81

    def test_k1_all_non_central_equivalent(self):
        rep = finite_stage_maximality(extraspecial(3, 1), 1)
        assert rep.centralizer_order == 9

    def test_postcondition_replay(self):
        g = extraspecial(3, 1)
        rep = finite_stage_maximality(g, 2)
        t = g.as_table()
        center = set(t.center_indices())
        k = 2

        def cent(tup):
            per = []
            for c in tup:
                per.append({j for j in range(t.order) if t.mul(c, j) == t.mul(j, c)})
            return set(itertools.product(*per))

        c_max = cent(rep.element)
        assert len(c_max) == rep.centralizer_order
        for other in itertools.product(range(t.order), repeat=k):
            if all(c in center for c in other):
                continue
            assert not (cent(other) < c_max)

    def test_abelian_rejected(self):
        with pytest.raises(ValueError, match="abelian"):
            finite_stage_maximality(abelian_group(), 2)
