"""Heights, purity, and instance checking of the extension condition."""

from __future__ import annotations

import itertools

import pytest

from nil2check.bilinear import BilinearStructure, sigma_check
from nil2check.comprehensive import (
    AbelianPGroup,
    InvalidInstance,
    StarContext,
    StarInstance,
    format_instance,
    height,
    height_in,
    is_pure,
    parse_instances,
    star_scan,
    star_witness,
)
from nil2check.fplinalg import VectorFp
from nil2check.groups import extraspecial, group_from_bilinear, heisenberg

C9 = AbelianPGroup(3, (2,))
C9xC3 = AbelianPGroup(3, (2, 1))


def brute_force_height(a: AbelianPGroup, g) -> int | None:
    g = a.reduce(g)
    best = None
    n = 0
    while True:
        power = a.p**n
        if any(a.scale(power, h) == g for h in a.elements()):
            best = n
        else:
            return best
        if n > a.exponents[0]:
            return None  # solvable beyond the exponent: the identity
        n += 1


def all_subgroups(a: AbelianPGroup) -> set[frozenset]:
    # every subgroup of a rank-2 group is generated by at most two elements
    out = {a.subgroup([])}
    elems = list(a.elements())
    for x in elems:
        out.add(a.subgroup([x]))
        for y in elems:
            out.add(a.subgroup([x, y]))
    return out


class TestHeight:
    def test_identity_is_infinite(self):
        assert height(C9, (0,)) is None

    def test_cube_in_c9(self):
        # oracle: exhaust all h and all n up to the exponent
        assert height(C9, (3,)) == 1 == brute_force_height(C9, (3,))

    def test_exponent_p_heights_vanish(self):
        a = AbelianPGroup(3, (1, 1))
        for g in a.elements():
            if g != a.identity():
                assert height(a, g) == 0

    def test_against_bruteforce_on_mixed_group(self):
        for g in C9xC3.elements():
            assert height(C9xC3, g) == brute_force_height(C9xC3, g)

    def test_element_orders(self):
        assert C9.element_order((1,)) == 9
        assert C9.element_order((3,)) == 3
        assert C9xC3.element_order((0, 1)) == 3
        assert C9xC3.element_order((0, 0)) == 1


class TestPurity:
    def test_whole_group_is_pure(self):
        assert is_pure(C9, C9.subgroup([(1,)]))

    def test_cube_subgroup_not_pure_in_c9(self):
        sub = C9.subgroup([(3,)])
        assert height_in(C9, sub, (3,)) == 0
        assert height(C9, (3,)) == 1
        assert not is_pure(C9, sub)

    def test_every_subgroup_of_elementary_abelian_is_pure(self):
        a = AbelianPGroup(3, (1, 1))
        for sub in all_subgroups(a):
            assert is_pure(a, sub)

    def test_height_monotone_under_subgroups(self):
        # ht_B(g) <= ht_A(g) for every subgroup B of C9 x C3, with None = infinity
        for sub in all_subgroups(C9xC3):
            for g in sub:
                hb = height_in(C9xC3, sub, g)
                ha = height(C9xC3, g)
                if hb is None:
                    assert ha is None or g == C9xC3.identity()
                elif ha is not None:
                    assert hb <= ha

    def test_extraspecial_gstar_subgroups_all_pure(self):
        ctx = StarContext.for_group(extraspecial(3, 1))
        assert ctx.gstar.exponents == (1, 1)
        for sub in all_subgroups(ctx.gstar):
            assert is_pure(ctx.gstar, sub)


def nonzero_center(g):
    return (VectorFp.zero(g.field, g.n), VectorFp.unit(g.field, g.d, 0))


class TestStarWitness:
    def test_rank_one_instance_satisfied(self):
        g = extraspecial(3, 2)
        gen = (VectorFp.unit(g.field, 4, 0), VectorFp.zero(g.field, 1))
        inst = StarInstance((gen,), (nonzero_center(g),), g.identity(), 1)
        wit = star_witness(g, inst)
        assert wit is not None
        # independent replay of all four clauses
        ctx = StarContext.for_group(g)
        assert not g.is_central(wit)
        assert g.power(wit, 3) == g.identity()
        assert g.comm(gen, wit) == nonzero_center(g)
        joined = ctx.gstar.subgroup([ctx.star_coords(gen), ctx.star_coords(wit)])
        assert is_pure(ctx.gstar, joined)

    def test_trivial_instance_any_non_central_element(self):
        g = extraspecial(3, 2)
        inst = StarInstance((), (), g.identity(), 1)
        wit = star_witness(g, inst)
        assert wit is not None and not g.is_central(wit)

    def test_sigma2_obstruction_transfers(self):
        # the failing simultaneous-commutator pair gives an unsatisfiable instance
        g = heisenberg(3, 2, 1)
        verdict = sigma_check(g.structure, 2)
        assert not verdict.holds
        gens = tuple(
            (v, VectorFp.zero(g.field, g.d)) for v in verdict.counterexample.vectors
        )
        images = tuple(
            (VectorFp.zero(g.field, g.n), t) for t in verdict.counterexample.targets
        )
        inst = StarInstance(gens, images, g.identity(), 1)
        assert star_witness(g, inst) is None

    def test_non_central_alpha_value_rejected(self):
        g = extraspecial(3, 1)
        gen = (VectorFp.unit(g.field, 2, 0), VectorFp.zero(g.field, 1))
        bad = (VectorFp.unit(g.field, 2, 1), VectorFp.zero(g.field, 1))
        with pytest.raises(InvalidInstance, match="central"):
            star_witness(g, StarInstance((gen,), (bad,), g.identity(), 1))

    def test_hypothesis_clause_r_too_large(self):
        g = extraspecial(3, 1)
        with pytest.raises(InvalidInstance, match="exp"):
            star_witness(g, StarInstance((), (), g.identity(), 2))

    def test_abelian_group_nonzero_alpha_all_fail(self):
        g = group_from_bilinear(BilinearStructure.zero(3, 2, 1))
        gen = (VectorFp.unit(g.field, 2, 0), VectorFp.zero(g.field, 1))
        z = nonzero_center(g)
        # commutators are trivial, so a nonzero alpha demand is unsatisfiable
        inst = StarInstance((gen,), (z,), g.identity(), 0)
        assert star_witness(g, inst) is None
        for w in (g.identity(), z):
            assert star_witness(g, StarInstance((gen,), (z,), w, 0)) is None


class TestStarScan:
    def test_extraspecial_rank_one_all_satisfied(self):
        rep = star_scan(extraspecial(3, 2), 1)
        assert rep.instances_checked == 244
        assert rep.satisfied == 244
        assert rep.failed == 0
        assert not rep.truncated

    def test_heisenberg_rank_two_reports_failures(self):
        # rank 0 and 1 take 730 instances (|Z| = 9); the first rank-2 subgroup
        # is an extension-field line, where most alpha demands are unreachable
        rep = star_scan(heisenberg(3, 2, 1), 2, max_instances=800)
        assert rep.failed > 0
        assert rep.failures
        # each sampled failure really has no witness
        g = heisenberg(3, 2, 1)
        for inst in rep.failures[:3]:
            assert star_witness(g, inst) is None

    def test_scan_agrees_with_witness(self):
        g = extraspecial(3, 1)
        rep = star_scan(g, 1)
        assert rep.failed == 0
        assert rep.satisfied == rep.instances_checked


class TestInstanceFormat:
    def test_roundtrip(self):
        g = extraspecial(3, 2)
        gen = (VectorFp.unit(g.field, 4, 0), VectorFp.zero(g.field, 1))
        inst = StarInstance((gen,), (nonzero_center(g),), g.identity(), 1)
        text = format_instance(inst) + "\n"
        parsed = parse_instances(text, g)
        assert parsed == [inst]

    def test_parse_error_position(self):
        g = extraspecial(3, 1)
        with pytest.raises(ValueError, match="line 2"):
            parse_instances("# ok\n1 0\n", g)
