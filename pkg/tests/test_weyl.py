import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import coefficients, polys, random_symplectic_word, seeds
from tamelift import linalg
from tamelift.endo import PolyEndo
from tamelift.polycore import Poly, Q, poisson_bracket
from tamelift.tame import Shift, SympLinear, TameWord, TransvectionP, TransvectionX, WordError, eval_word
from tamelift.weyl import (
    HbarPoly,
    WeylElement,
    WeylEndo,
    check_weyl_relations,
    classical_symbol,
    commutator_symbol,
    hbar_from_json,
    hbar_to_json,
    lift_word,
    moyal_star,
    specialize,
    weyl_commutator,
    weyl_endo_from_json,
    weyl_endo_to_json,
    weyl_from_json,
    weyl_mul,
    weyl_to_json,
)

Xh, Ph = WeylElement.gens(1)
X, P = Poly.gens(2)


class TestProduct:
    def test_examples(self):
        assert weyl_mul(Ph, Xh) == Xh * Ph + 1
        assert weyl_mul(Xh, Ph) == WeylElement(1, {((1,), (1,), 0): 1})
        assert weyl_mul(weyl_mul(Ph, Ph), Xh) == Xh * Ph * Ph + 2 * Ph

    def test_formal_relation_carries_hbar(self):
        xf, pf = WeylElement.gens(1, formal=True)
        assert weyl_mul(pf, xf) == xf * pf + WeylElement.hbar(1)

    def test_rank_mismatch(self):
        with pytest.raises(ValueError):
            weyl_mul(Xh, WeylElement.x(0, 2))

    def test_commutators(self):
        x1, x2, p1, p2 = WeylElement.gens(2)
        assert weyl_commutator(p1, x1) == 1
        assert weyl_commutator(x1, x2) == 0
        assert weyl_commutator(p2, x1) == 0
        assert weyl_commutator(Xh * Ph, Xh) == Xh


@st.composite
def weyl_elements(draw, n: int, max_degree: int = 4, formal: bool = False):
    terms = {}
    for _ in range(draw(st.integers(0, 4))):
        d = draw(st.integers(0, max_degree))
        exps = [0] * (2 * n)
        for _ in range(d):
            exps[draw(st.integers(0, 2 * n - 1))] += 1
        h = draw(st.integers(0, 1)) if formal else 0
        terms[(tuple(exps[:n]), tuple(exps[n:]), h)] = draw(coefficients)
    return WeylElement(n, terms, formal)


ranks = st.sampled_from([1, 2])


@settings(max_examples=60, deadline=None)
@given(ranks.flatmap(lambda n: st.tuples(weyl_elements(n), weyl_elements(n), weyl_elements(n))))
def test_associativity(triple):
    a, b, c = triple
    assert weyl_mul(weyl_mul(a, b), c) == weyl_mul(a, weyl_mul(b, c))


@settings(max_examples=30, deadline=None)
@given(st.tuples(weyl_elements(2, formal=True), weyl_elements(2, formal=True), weyl_elements(2, formal=True)))
def test_formal_associativity(triple):
    a, b, c = triple
    assert weyl_mul(weyl_mul(a, b), c) == weyl_mul(a, weyl_mul(b, c))


@settings(max_examples=60, deadline=None)
@given(ranks.flatmap(lambda n: st.tuples(weyl_elements(n), weyl_elements(n))))
def test_degree_filtration_and_top_symbols(pair):
    a, b = pair
    ab = weyl_mul(a, b)
    if not a or not b:
        assert not ab
        return
    assert ab.degree() <= a.degree() + b.degree()
    top = weyl_mul(a.top_component(), b.top_component())
    want = a.top_component().symbol() * b.top_component().symbol()
    got = ab.symbol().homogeneous_component(a.degree() + b.degree())
    assert got == want
    assert top.symbol().homogeneous_component(a.degree() + b.degree()) == want


class TestLift:
    def test_transvection(self):
        e = lift_word(TameWord((TransvectionX(P**3),), 2), formal=False)
        assert e.images == (Xh + 3 * Ph * Ph, Ph)
        assert weyl_commutator(e.images[1], e.images[0]) == 1

    def test_identity_linear(self):
        e = lift_word(TameWord((SympLinear(linalg.identity(4)),), 4))
        assert e == WeylEndo.identity(2, formal=True)

    def test_three_factor_word(self):
        x1, x2, p1, p2 = Poly.gens(4)
        w = TameWord((TransvectionX(p1**2 * p2), TransvectionP(x1**3 + x1 * x2), TransvectionX(p2**3)), 4)
        e = lift_word(w)
        assert check_weyl_relations(e)
        assert check_weyl_relations(specialize(e))
        assert classical_symbol(e) == eval_word(w)

    def test_plain_symbol_differs_from_classical_composition(self):
        # reordering under hbar = 1 leaves lower-order terms in the normal-ordered symbol
        w = TameWord((TransvectionX(P**3), TransvectionP(X**3)), 2)
        plain = lift_word(w, formal=False)
        assert check_weyl_relations(plain)
        assert classical_symbol(plain) != eval_word(w)
        assert classical_symbol(lift_word(w)) == eval_word(w)

    def test_specialized_formal_lift_equals_plain_lift(self):
        w = random_symplectic_word(random.Random(11), 2, 4, 3)
        assert specialize(lift_word(w)) == lift_word(w, formal=False)

    def test_rejects_shifts(self):
        a, b = Poly.gens(2)
        with pytest.raises(WordError):
            lift_word(TameWord((Shift(0, 1, b**2),), 2))


class TestRelations:
    def test_identity(self):
        assert check_weyl_relations(WeylEndo.identity(2))
        assert check_weyl_relations(WeylEndo.identity(2, formal=True))

    def test_violation(self):
        report = check_weyl_relations(WeylEndo((Xh + Ph * Ph, Ph + Xh * Xh)))
        assert not report
        assert [(u, v) for u, v, _ in report.violations] == [(0, 1)]


class TestSymbol:
    def test_identity(self):
        assert classical_symbol(WeylEndo.identity(2)) == PolyEndo.identity(4)

    def test_no_reordering(self):
        e = WeylEndo((Xh + 3 * Ph * Ph, Ph))
        assert classical_symbol(e).images[0] == X + 3 * P**2


@settings(max_examples=30, deadline=None)
@given(seeds, ranks)
def test_lift_commuting_square(seed, n):
    w = random_symplectic_word(random.Random(seed), n, 4, 3)
    e = lift_word(w)
    assert check_weyl_relations(e)
    assert check_weyl_relations(specialize(e))
    assert classical_symbol(e) == eval_word(w)


def hp(f, order=4):
    return HbarPoly.from_poly(f, order)


class TestMoyal:
    def test_examples(self):
        comm = moyal_star(hp(X), hp(P)) - moyal_star(hp(P), hp(X))
        assert comm.coeffs[1] == poisson_bracket(X, P) == -1
        assert not comm.coeffs[0] and not any(comm.coeffs[2:])
        f = hp(X**2 * P + P)
        assert moyal_star(f, hp(Poly.const(1, 2))) == f
        comm = moyal_star(hp(X**2), hp(P**2)) - moyal_star(hp(P**2), hp(X**2))
        assert comm.coeffs[1] == poisson_bracket(X**2, P**2)
        assert not comm.coeffs[0] and not any(comm.coeffs[2:])

    def test_truncation_mismatch(self):
        with pytest.raises(ValueError):
            moyal_star(hp(X, 3), hp(P, 4))
        with pytest.raises(ValueError):
            moyal_star(hp(X), hp(P), order=3)

    def test_matches_weyl_relation(self):
        # x*p - p*x = -hbar mirrors [p, x] = hbar
        assert commutator_symbol(P, X).coeffs[0] == 1


hbar_series = st.lists(polys(4, 3, 3), min_size=4, max_size=4).map(lambda cs: HbarPoly(tuple(cs)))


@settings(max_examples=30, deadline=None)
@given(hbar_series, hbar_series, hbar_series)
def test_moyal_associativity(f, g, h):
    assert moyal_star(moyal_star(f, g), h) == moyal_star(f, moyal_star(g, h))


@settings(max_examples=50, deadline=None)
@given(polys(4, 3, 4), polys(4, 3, 4))
def test_correspondence_principle(f, g):
    assert commutator_symbol(f, g).coeffs[0] == poisson_bracket(f, g)


class TestJson:
    def test_element_round_trip(self):
        a = Xh * Ph * Q("3/2") + Ph
        obj = weyl_to_json(a)
        assert obj["terms"][0]["c"] == "3/2"
        assert weyl_from_json(obj) == a

    def test_endo_round_trip(self):
        e = lift_word(random_symplectic_word(random.Random(5), 2, 3, 3))
        assert weyl_endo_from_json(weyl_endo_to_json(e)) == e

    def test_hbar_round_trip(self):
        f = moyal_star(hp(X**2), hp(P**2))
        obj = hbar_to_json(f)
        assert obj["L"] == 4
        assert hbar_from_json(obj) == f
