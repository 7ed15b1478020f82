import random
from fractions import Fraction

import pytest
import sympy as sp

from oscq.errors import DimensionMismatchError, InputError
from oscq.poly_algebra import (
    PolyObservable,
    SubalgebraTag,
    bracket_closed,
    classify_subalgebra,
    in_involution,
    in_span,
    is_constant_of_motion,
    moyal_bracket,
    parse_poly,
    poisson_bracket,
    random_observable,
)

Q = PolyObservable.q()
P = PolyObservable.p()


# ---------------------------------------------------------------------------
# sympy oracle: independent term-by-term symbolic differentiation
# ---------------------------------------------------------------------------


def to_sympy(f: PolyObservable):
    n = f.num_dof
    qs = sp.symbols(f"q1:{n + 1}")
    ps = sp.symbols(f"p1:{n + 1}")
    hb = sp.Symbol("hb")
    expr = sp.Integer(0)
    for key, c in f.terms.items():
        term = sp.Rational(c.numerator, c.denominator)
        for i in range(n):
            term *= qs[i] ** key[i] * ps[i] ** key[n + i]
        term *= hb ** key[-1]
        expr += term
    return sp.expand(expr), qs, ps


def sympy_poisson(f: PolyObservable, g: PolyObservable):
    ef, qs, ps = to_sympy(f)
    eg, _, _ = to_sympy(g)
    out = sp.Integer(0)
    for qi, pi in zip(qs, ps):
        out += sp.diff(ef, qi) * sp.diff(eg, pi) - sp.diff(ef, pi) * sp.diff(eg, qi)
    return sp.expand(out)


def assert_equals_sympy(poly: PolyObservable, expr):
    got, _, _ = to_sympy(poly)
    assert sp.expand(got - expr) == 0


# ---------------------------------------------------------------------------
# construction / arithmetic
# ---------------------------------------------------------------------------


class TestConstruction:
    def test_zero_coefficients_dropped(self):
        f = PolyObservable(1, {(1, 0, 0): 0, (0, 1, 0): 2})
        assert list(f.terms) == [(0, 1, 0)]

    def test_canonical_form_unique(self):
        f = Q * 2 + P - Q
        g = P + Q
        assert f == g and hash(f) == hash(g)

    def test_float_rejected(self):
        with pytest.raises(InputError):
            PolyObservable(1, {(1, 0, 0): 0.5})

    def test_negative_exponent_rejected(self):
        with pytest.raises(InputError):
            PolyObservable(1, {(-1, 0, 0): 1})

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Q + PolyObservable.q(1, num_dof=2)

    def test_immutable(self):
        with pytest.raises(AttributeError):
            Q.num_dof = 3
        with pytest.raises(TypeError):
            Q.terms[(5, 0, 0)] = Fraction(1)

    def test_exact_arithmetic(self):
        f = Q * Fraction(1, 3) + P * Fraction(1, 6)
        g = f * 6
        assert g == Q * 2 + P

    def test_power(self):
        assert (Q + P) ** 2 == Q**2 + Q * P * 2 + P**2


class TestSerialization:
    def test_round_trip_examples(self):
        cases = [
            Q**2 * P**2 * 9 - PolyObservable.hbar(2) * Fraction(3, 2),
            PolyObservable.one(),
            PolyObservable.zero(),
            Q * Fraction(-1, 3),
            PolyObservable.monomial(2, q={1: 2, 2: 1}, p={2: 3}, h=1, coeff=Fraction(7, 4)),
        ]
        for f in cases:
            assert parse_poly(f.to_text(), f.num_dof) == f

    def test_whitespace_insensitive(self):
        a = parse_poly("3/2*q1^2*p1 + -1/2*hbar^2")
        b = parse_poly("  3/2 q1^2 p1   -   1/2 hbar^2 ")
        assert a == b

    def test_bare_q_p_aliases(self):
        assert parse_poly("q^3 p") == Q**3 * P

    def test_gvh_difference_text(self):
        f = PolyObservable.hbar(2) * Fraction(-1, 3)
        assert f.to_text() == "-1/3 * hbar^2"

    def test_round_trip_random(self):
        rng = random.Random(7)
        for _ in range(50):
            f = random_observable(rng, num_dof=rng.randint(1, 3), max_degree=5)
            assert parse_poly(f.to_text(), f.num_dof) == f

    def test_garbage_rejected(self):
        for bad in ["", "q1 &", "x^2", "+"]:
            with pytest.raises(InputError):
                parse_poly(bad)


# ---------------------------------------------------------------------------
# Poisson bracket
# ---------------------------------------------------------------------------


class TestPoissonBracket:
    def test_canonical_pair(self):
        assert poisson_bracket(Q, P) == PolyObservable.one()

    def test_q3_p3(self):
        # Oracle first: sympy term-by-term differentiation gives 9 q^2 p^2.
        expected = sympy_poisson(Q**3, P**3)
        assert expected == sp.expand(
            9 * sp.Symbol("q1") ** 2 * sp.Symbol("p1") ** 2
        )
        assert poisson_bracket(Q**3, P**3) == Q**2 * P**2 * 9

    def test_self_bracket_vanishes(self):
        rng = random.Random(1)
        for _ in range(20):
            f = random_observable(rng, num_dof=2, max_degree=4)
            assert poisson_bracket(f, f).is_zero

    def test_matches_sympy_randomized(self):
        rng = random.Random(2)
        for _ in range(25):
            n = rng.randint(1, 3)
            f = random_observable(rng, num_dof=n, max_degree=5)
            g = random_observable(rng, num_dof=n, max_degree=5)
            assert_equals_sympy(poisson_bracket(f, g), sympy_poisson(f, g))

    def test_rejects_hbar_graded(self):
        with pytest.raises(InputError):
            poisson_bracket(PolyObservable.hbar(), P)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            poisson_bracket(Q, PolyObservable.p(1, num_dof=2))


class TestBracketAxioms:
    def test_antisymmetry_jacobi_leibniz(self):
        rng = random.Random(3)
        for _ in range(40):
            n = rng.randint(1, 3)
            f = random_observable(rng, num_dof=n, max_degree=5)
            g = random_observable(rng, num_dof=n, max_degree=5)
            h = random_observable(rng, num_dof=n, max_degree=5)
            assert poisson_bracket(f, g) == -poisson_bracket(g, f)
            jacobi = (
                poisson_bracket(f, poisson_bracket(g, h))
                + poisson_bracket(g, poisson_bracket(h, f))
                + poisson_bracket(h, poisson_bracket(f, g))
            )
            assert jacobi.is_zero
            leibniz = poisson_bracket(f, g * h) - (
                poisson_bracket(f, g) * h + g * poisson_bracket(f, h)
            )
            assert leibniz.is_zero


# ---------------------------------------------------------------------------
# Moyal bracket
# ---------------------------------------------------------------------------


class TestMoyalBracket:
    def test_canonical_pair_no_corrections(self):
        assert moyal_bracket(Q, P) == PolyObservable.one()

    def test_q3_p3(self):
        expected = Q**2 * P**2 * 9 - PolyObservable.hbar(2) * Fraction(3, 2)
        assert moyal_bracket(Q**3, P**3) == expected

    def test_q2p_qp2(self):
        expected = Q**2 * P**2 * 3 + PolyObservable.hbar(2) * Fraction(1, 2)
        assert moyal_bracket(Q**2 * P, Q * P**2) == expected

    def test_hbar0_part_is_poisson(self):
        rng = random.Random(4)
        for _ in range(20):
            n = rng.randint(1, 2)
            f = random_observable(rng, num_dof=n, max_degree=6)
            g = random_observable(rng, num_dof=n, max_degree=6)
            assert moyal_bracket(f, g).hbar_component(0) == poisson_bracket(f, g)

    def test_degenerates_on_p2_pairs(self):
        basis = [PolyObservable.one(), Q, P, Q**2, P**2, Q * P]
        for f in basis:
            for g in basis:
                assert moyal_bracket(f, g) == poisson_bracket(f, g)

    def test_degenerates_on_pinf1_pairs(self):
        rng = random.Random(5)
        for _ in range(25):
            f = _random_pinf1(rng)
            g = _random_pinf1(rng)
            assert moyal_bracket(f, g) == poisson_bracket(f, g)


def _random_pinf1(rng, max_q_degree: int = 6) -> PolyObservable:
    """Random polynomial linear in p with polynomial q coefficients."""
    f = PolyObservable.zero(1)
    for _ in range(rng.randint(1, 4)):
        a = rng.randint(0, max_q_degree)
        b = rng.randint(0, 1)
        coeff = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        f = f + PolyObservable.monomial(1, q={1: a}, p={1: b}, coeff=coeff)
    return f


def _random_p2(rng) -> PolyObservable:
    f = PolyObservable.zero(1)
    for key in [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1)]:
        if rng.random() < 0.6:
            coeff = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
            f = f + PolyObservable.monomial(1, q={1: key[0]}, p={1: key[1]}, coeff=coeff)
    return f


# ---------------------------------------------------------------------------
# constants of motion / involution
# ---------------------------------------------------------------------------


class TestConstantsOfMotion:
    def test_hamiltonian_conserves_itself(self):
        h = P**2 * Fraction(1, 2) + Q**4
        assert is_constant_of_motion(h, h)

    def test_q_not_conserved_by_free_motion(self):
        h = P**2 * Fraction(1, 2)
        assert not is_constant_of_motion(Q, h)
        assert is_constant_of_motion(P, h)

    def test_involution_examples(self):
        q1 = PolyObservable.q(1, num_dof=2)
        q2 = PolyObservable.q(2, num_dof=2)
        p1 = PolyObservable.p(1, num_dof=2)
        p2 = PolyObservable.p(2, num_dof=2)
        assert in_involution([q1, q2])
        assert not in_involution([Q, P])
        assert in_involution([p1, p2, p1 * p2])

    def test_empty_list_rejected(self):
        with pytest.raises(InputError):
            in_involution([])


# ---------------------------------------------------------------------------
# classification and span closure
# ---------------------------------------------------------------------------


class TestClassification:
    @pytest.mark.parametrize(
        "poly,tag",
        [
            (Q**2 * P**2, SubalgebraTag.GENERAL),
            (Q**5 * P + Q**2, SubalgebraTag.PINF1),
            (Q * P, SubalgebraTag.P2),
            (Q + PolyObservable.one() * 3, SubalgebraTag.P1),
            (PolyObservable.zero(), SubalgebraTag.P1),
            (Q**3, SubalgebraTag.PINF1),
        ],
    )
    def test_examples(self, poly, tag):
        assert classify_subalgebra(poly) == tag

    def test_smallest_tag_wins(self):
        # P1 members never classify as P2 or PInf1.
        for f in [PolyObservable.one(), Q, P, Q - P * 2]:
            assert classify_subalgebra(f) == SubalgebraTag.P1

    def test_multi_dof_unsupported(self):
        with pytest.raises(InputError):
            classify_subalgebra(PolyObservable.q(1, num_dof=2))


class TestBracketClosed:
    def test_heisenberg(self):
        assert bracket_closed([PolyObservable.one(), Q, P])

    def test_p2_closed(self):
        assert bracket_closed([PolyObservable.one(), Q, P, Q**2, P**2, Q * P])

    def test_cubic_not_closed(self):
        # {q^3, p} = 3 q^2 is outside span{1, q, p, q^3}.
        assert not bracket_closed([PolyObservable.one(), Q, P, Q**3])

    def test_span_membership_exact(self):
        assert in_span(Q * 2 + P * Fraction(1, 3), [Q, P])
        assert not in_span(Q**2, [Q, P])

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            bracket_closed([])
