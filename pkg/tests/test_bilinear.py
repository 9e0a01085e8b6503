"""Bilinear structures, the psi/sigma axioms, densities, and the exhaustive verifier."""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nil2check.bilinear import (
    BilinearStructure,
    beta_eval,
    counting_bound,
    format_structure,
    is_alternating,
    left_map,
    lemma_bil_exhaust,
    parse_structure,
    psi_check,
    radical,
    sigma_check,
    sigma_failure_density,
    structure_from_index,
)
from nil2check.fplinalg import (
    MatrixFp,
    PrimeField,
    Subspace,
    VectorFp,
    all_vectors,
    rref,
)
from nil2check.groups import extraspecial, heisenberg
from nil2check.textio import ParseError

F3 = PrimeField(3)

SYMPLECTIC = BilinearStructure.standard_symplectic(3, 1)


def e(field, dim, i):
    return VectorFp.unit(field, dim, i)


def reachable_targets(s, vs):
    """{(beta(v_1,z), ..., beta(v_k,z)) : z in V} computed by full z-sweep."""
    out = set()
    for z in all_vectors(s.field, s.n):
        out.add(tuple(beta_eval(s, v, z).coords for v in vs))
    return out


def holds_by_bruteforce(s, k):
    """Quantify over ALL independent k-tuples (not canonical bases) and all targets."""
    p = s.field.p
    nonzero = [v for v in all_vectors(s.field, s.n) if not v.is_zero()]
    total_targets = p ** (k * s.d)
    for vs in itertools.product(nonzero, repeat=k):
        m = MatrixFp.from_rows(s.field, [v.coords for v in vs], cols=s.n)
        rank, _ = rref(m)
        if rank < k:
            continue
        if len(reachable_targets(s, vs)) < total_targets:
            return False
    return True


@st.composite
def structures(draw, primes=(3, 5), max_n=3, max_d=2):
    p = draw(st.sampled_from(primes))
    n = draw(st.integers(1, max_n))
    d = draw(st.integers(1, max_d))
    entries = [
        [[draw(st.integers(0, p - 1)) for _ in range(d)] for _ in range(n)]
        for _ in range(n)
    ]
    return BilinearStructure.from_entries(p, n, d, entries)


class TestBetaEval:
    def test_zero_argument(self):
        v = VectorFp(F3, (1, 2))
        assert beta_eval(SYMPLECTIC, VectorFp.zero(F3, 2), v).is_zero()

    def test_symplectic_pairing(self):
        assert beta_eval(SYMPLECTIC, e(F3, 2, 0), e(F3, 2, 1)) == VectorFp(F3, (1,))

    def test_scalar_linearity(self):
        got = beta_eval(SYMPLECTIC, e(F3, 2, 0).scale(2), e(F3, 2, 1))
        assert got == VectorFp(F3, (2,))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            beta_eval(SYMPLECTIC, VectorFp(F3, (1,)), e(F3, 2, 1))

    @given(structures(), st.data())
    @settings(max_examples=50)
    def test_bilinearity(self, s, data):
        p = s.field.p
        coords = lambda: tuple(data.draw(st.integers(0, p - 1)) for _ in range(s.n))  # noqa: E731
        v1, v1p, v2 = (VectorFp(s.field, coords()) for _ in range(3))
        a = data.draw(st.integers(0, p - 1))
        left = beta_eval(s, v1.scale(a) + v1p, v2)
        right = beta_eval(s, v1, v2).scale(a) + beta_eval(s, v1p, v2)
        assert left == right
        left2 = beta_eval(s, v2, v1.scale(a) + v1p)
        right2 = beta_eval(s, v2, v1).scale(a) + beta_eval(s, v2, v1p)
        assert left2 == right2


class TestLeftMap:
    def test_zero_vector(self):
        assert left_map(SYMPLECTIC, VectorFp.zero(F3, 2)).is_zero()

    def test_symplectic_functional(self):
        m = left_map(SYMPLECTIC, e(F3, 2, 0))
        assert m.entries == ((0, 1),)  # z -> z_2

    def test_matches_basis_evaluation(self):
        s = BilinearStructure.standard_symplectic(5, 2)
        for i in range(s.n):
            m = left_map(s, e(s.field, s.n, i))
            rank, _ = rref(m)
            assert rank >= 1
            for j in range(s.n):
                assert m.matvec(e(s.field, s.n, j)) == beta_eval(
                    s, e(s.field, s.n, i), e(s.field, s.n, j)
                )


class TestAlternating:
    def test_zero(self):
        assert is_alternating(BilinearStructure.zero(3, 2, 1))

    def test_symplectic(self):
        assert is_alternating(SYMPLECTIC)

    def test_diagonal_obstruction(self):
        s = BilinearStructure.from_entries(
            3, 2, 2, [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]
        )
        assert not is_alternating(s)

    @given(structures(primes=(3,), max_n=3, max_d=1))
    @settings(max_examples=40)
    def test_matches_pointwise_definition(self, s):
        pointwise = all(beta_eval(s, v, v).is_zero() for v in all_vectors(s.field, s.n))
        assert is_alternating(s) == pointwise


class TestRadical:
    def test_zero_structure(self):
        assert radical(BilinearStructure.zero(3, 2, 1)) == Subspace.full(F3, 2)

    def test_symplectic_trivial(self):
        assert radical(SYMPLECTIC).dim == 0

    def test_symplectic_plus_zero_plane(self):
        s = BilinearStructure.orthogonal_sum(SYMPLECTIC, BilinearStructure.zero(3, 2, 1))
        r = radical(s)
        assert r.dim == 2
        # oracle: brute-force scan of all 81 vectors against both sides
        members = {
            v.coords
            for v in all_vectors(s.field, 4)
            if all(
                beta_eval(s, v, w).is_zero() and beta_eval(s, w, v).is_zero()
                for w in (e(s.field, 4, j) for j in range(4))
            )
        }
        assert members == {v.coords for v in r.vectors()}


class TestPsi:
    def test_symplectic_holds_with_bruteforce_oracle(self):
        assert psi_check(SYMPLECTIC).holds
        assert holds_by_bruteforce(SYMPLECTIC, 2)

    def test_zero_structure_fails_with_counterexample(self):
        verdict = psi_check(BilinearStructure.zero(3, 2, 1))
        assert not verdict.holds
        cex = verdict.counterexample
        assert [v.coords for v in cex.vectors] == [(1, 0), (0, 1)]
        assert any(not t.is_zero() for t in cex.targets)

    def test_small_v_rejected(self):
        with pytest.raises(ValueError, match="dim V"):
            psi_check(BilinearStructure.zero(3, 1, 1))

    def test_every_n2_d2_structure_fails(self):
        # spot check of the no-finite-model statement on a handful of maps
        for index in (0, 1, 17, 4040, 6560):
            s = structure_from_index(3, 2, 2, index)
            assert not psi_check(s).holds


class TestSigma:
    def test_extraspecial_rank2_structure_k2(self):
        s = extraspecial(3, 2).structure
        assert sigma_check(s, 2).holds
        assert holds_by_bruteforce(s, 2)

    def test_heisenberg_k2_fails_with_parallel_kernels(self):
        s = heisenberg(3, 2, 1).structure
        verdict = sigma_check(s, 2)
        assert not verdict.holds
        v1, v2 = verdict.counterexample.vectors
        # the witness pair is forced to span a line over the extension field:
        # the two one-sided maps have equal kernels
        from nil2check.fplinalg import kernel

        assert kernel(left_map(s, v1)) == kernel(left_map(s, v2))

    def test_vacuous_when_k_exceeds_dim(self):
        verdict = sigma_check(SYMPLECTIC, 5)
        assert verdict.holds and verdict.cases_checked == 0

    def test_counterexamples_revalidate_by_z_sweep(self):
        for s in (
            BilinearStructure.zero(3, 2, 1),
            heisenberg(3, 2, 1).structure,
            structure_from_index(3, 2, 2, 1234),
        ):
            verdict = sigma_check(s, 2)
            assert not verdict.holds
            cex = verdict.counterexample
            targets = tuple(t.coords for t in cex.targets)
            assert targets not in reachable_targets(s, cex.vectors)

    def test_representative_bases_rank_invariant_vs_all_tuple_bruteforce(self):
        """One canonical basis per subspace decides sigma for every tuple.

        Two bases of the same span differ by an invertible left factor, so the
        stacked maps have equal rank; sweeping canonical RREF bases must agree
        with brute force over all independent tuples and targets.
        """
        cases = [structure_from_index(3, 2, 1, i) for i in range(81)]
        for s in cases:
            assert sigma_check(s, 2).holds == holds_by_bruteforce(s, 2)
        sampled = [
            structure_from_index(3, 3, 1, 11),
            structure_from_index(3, 3, 1, 5000),
            structure_from_index(3, 3, 2, 123456),
            structure_from_index(3, 2, 2, 77),
            heisenberg(3, 2, 1).structure,
            extraspecial(3, 1).structure,
        ]
        for s in sampled:
            for k in (1, 2):
                assert sigma_check(s, k).holds == holds_by_bruteforce(s, k)


class TestDensity:
    def test_extraspecial_structure_never_fails(self):
        s = extraspecial(3, 2).structure
        assert sigma_failure_density(s, 2) == (Fraction(0), Fraction(0))

    def test_zero_structure_only_reaches_zero(self):
        s = BilinearStructure.zero(3, 2, 1)
        frac, unreachable = sigma_failure_density(s, 2)
        assert frac == Fraction(1)
        assert unreachable == Fraction(3**2 - 1, 3**2)
        s2 = BilinearStructure.zero(5, 3, 2)
        frac2, unreachable2 = sigma_failure_density(s2, 2)
        assert frac2 == Fraction(1)
        assert unreachable2 == Fraction(5**4 - 1, 5**4)

    def test_heisenberg_regression_values(self):
        # frozen after first computation; the failing planes are exactly the
        # 10 extension-field lines among the 130 planes, each reaching a
        # 9-element image inside the 81 targets
        frac, unreachable = sigma_failure_density(heisenberg(3, 2, 1).structure, 2)
        assert frac == Fraction(1, 13)
        assert unreachable == Fraction(8, 9)
        assert frac > 0


class TestExhaust:
    def test_3_2_2_no_satisfying_map(self):
        r = lemma_bil_exhaust(3, 2, 2)
        assert r.maps_checked == 6561
        assert r.satisfying_count == 0
        assert not r.refutation

    def test_3_2_1_negative_control(self):
        r = lemma_bil_exhaust(3, 2, 1)
        assert r.maps_checked == 81
        assert r.satisfying_count >= 1
        assert not r.refutation  # d = 1 is outside the impossible regime
        # the first satisfying map is a genuine psi model
        s = structure_from_index(3, 2, 1, r.first_satisfying_index)
        assert psi_check(s).holds

    def test_satisfying_count_matches_per_map_checker(self):
        r = lemma_bil_exhaust(3, 2, 1)
        direct = sum(
            1 for i in range(81) if psi_check(structure_from_index(3, 2, 1, i)).holds
        )
        assert r.satisfying_count == direct == 48  # the invertible 2x2 maps

    def test_vacuous_dimension_one(self):
        r = lemma_bil_exhaust(3, 1, 2)
        assert r.maps_checked == r.satisfying_count == 9
        assert not r.refutation

    def test_thread_count_does_not_change_report(self):
        a = lemma_bil_exhaust(3, 2, 2, threads=1)
        b = lemma_bil_exhaust(3, 2, 2, threads=4, chunk_size=1000)
        assert a == b

    def test_budget_error_names_required_count(self):
        with pytest.raises(ValueError, match=str(3**18)):
            lemma_bil_exhaust(3, 3, 2, budget=10**6)

    def test_even_prime_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            lemma_bil_exhaust(2, 2, 2)


class TestCountingBound:
    def test_3_2_2_impossible(self):
        assert counting_bound(3, 2, 2) == (4, 32, 8, False)

    def test_3_2_1_boundary(self):
        assert counting_bound(3, 2, 1) == (4, 8, 8, True)

    def test_d_one_always_possible(self):
        for p in (3, 5, 7):
            for n in range(2, 7):
                assert counting_bound(p, n, 1)[3]

    def test_grid_impossible_for_d_at_least_two(self):
        for p in (3, 5, 7):
            for n in range(2, 7):
                for d in range(2, 7):
                    family, required, available, possible = counting_bound(p, n, d)
                    assert family == (p**n - 1) // (p - 1)
                    assert not possible


class TestStructureFormat:
    def test_roundtrip(self):
        s = heisenberg(3, 2, 1).structure
        assert parse_structure(format_structure(s)) == s

    def test_comments_and_whitespace(self):
        text = "# a structure\n3 2 1\n0\n1  # beta(e1,e2)\n2\n0\n"
        s = parse_structure(text)
        assert s.gram[0][1] == VectorFp(F3, (1,))

    def test_parse_error_line_number(self):
        with pytest.raises(ParseError, match="line 3"):
            parse_structure("3 2 1\n0\n1 2\n2\n0\n")
