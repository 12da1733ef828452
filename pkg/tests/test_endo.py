import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import parse, random_tame_word, seeds
from tamelift import linalg
from tamelift.endo import (
    PolyEndo,
    SingularLinearPart,
    compose,
    endo_from_json,
    endo_height,
    endo_to_json,
    formal_inverse,
    height_from_identity,
    is_symplectic,
    jacobian,
    linear_part,
    metric,
)
from tamelift.polycore import INF, Poly, Q
from tamelift.tame import Linear, eval_word
from tamelift.jsonio import load_fixture

import random

x, y = Poly.gens(2)
X, P = Poly.gens(2)  # symplectic reading: (x1, p1)


def endo(*texts, names="x y"):
    return PolyEndo(tuple(parse(t, names) for t in texts))


def nagata():
    return endo_from_json(load_fixture("nagata"))


class TestCompose:
    def test_identity_is_neutral(self):
        g = endo("x + y^2", "y - x^3")
        ident = PolyEndo.identity(2)
        assert compose(ident, g) == g
        assert compose(g, ident) == g

    def test_elementary_pair(self):
        assert compose(endo("x + y^2", "y"), endo("x - y^2", "y")) == PolyEndo.identity(2)

    def test_linear_maps_compose_by_reversed_matrix_product(self):
        a = linalg.matrix([[1, 2], [0, 1]])
        b = linalg.matrix([[0, 1], [-1, 3]])
        got = compose(Linear(a).to_endo(), Linear(b).to_endo())
        assert linear_part(got) == linalg.matmul(b, a)

    def test_point_map_order(self):
        # compose(f, g) is "g first, then f" on points
        f = endo("x + y^2", "y")
        g = endo("x", "y + x")
        h = compose(f, g)
        assert h.images[0] == parse("x + (y + x)^2", "x y")

    def test_nvars_mismatch(self):
        with pytest.raises(ValueError):
            compose(PolyEndo.identity(2), PolyEndo.identity(3))


class TestJacobian:
    def test_examples(self):
        assert jacobian(PolyEndo.identity(3)) == 1
        assert jacobian(nagata()) == 1
        assert jacobian(endo("x + y^2", "y")) == 1

    def test_literal_nagata_formula_is_not_unimodular(self):
        literal = endo_from_json(load_fixture("nagata_literal"))
        assert not jacobian(literal).is_constant()

    def test_truncated_jacobian(self):
        f = endo("x + x^2 + y^3", "y + x*y")
        full = jacobian(f)
        for k in range(4):
            assert jacobian(f, max_degree=k) == full.truncate(k)


class TestHeight:
    def test_examples(self):
        f = endo("x + y^2", "y")
        assert endo_height(f, f) is INF
        assert endo_height(f, PolyEndo.identity(2)) == 2
        assert height_from_identity(Linear(linalg.matrix([[2, 0], [1, 1]])).to_endo()) == 1

    def test_metric(self):
        f = endo("x + y^2", "y")
        ident = PolyEndo.identity(2)
        assert metric(f, f) == 0.0
        assert metric(f, ident) == pytest.approx(math.exp(-2))
        assert metric(f, ident) == metric(ident, f)


class TestLinearPart:
    def test_examples(self):
        assert linear_part(PolyEndo.identity(2)) == linalg.identity(2)
        assert linear_part(endo("x + y^2", "y")) == linalg.identity(2)
        assert linear_part(endo("2*x + y", "y")) == linalg.matrix([[2, 0], [1, 1]])

    def test_round_trip_through_from_matrix(self):
        a = linalg.matrix([[1, 2, 0], [3, 0, 1], [0, Q("1/2"), 5]])
        assert linear_part(PolyEndo.from_matrix(a)) == a


class TestFormalInverse:
    def test_elementary(self):
        assert formal_inverse(endo("x + y^2", "y"), 5) == endo("x - y^2", "y")

    def test_identity(self):
        assert formal_inverse(PolyEndo.identity(3), 6) == PolyEndo.identity(3)

    def test_nagata(self):
        n = nagata()
        g = formal_inverse(n, 8)
        assert height_from_identity(compose(n, g).truncate(8)) > 8
        assert height_from_identity(compose(g, n).truncate(8)) > 8

    def test_singular_linear_part(self):
        with pytest.raises(SingularLinearPart):
            formal_inverse(endo("x + y", "x + y + x^2"), 3)


class TestSymplecticCheck:
    def test_examples(self):
        assert is_symplectic(PolyEndo.identity(4))
        assert is_symplectic(endo("x + y^2", "y"), 1)
        report = is_symplectic(endo("x + y^2", "y + x^2"), 1)
        assert not report
        assert report.violations == [(0, 1, 2)]

    def test_cutoff_only_looks_at_low_degrees(self):
        f = endo("x + y^3", "y + x^3")  # defect -9 x^2 y^2 has degree 4
        assert not is_symplectic(f, 1)
        assert is_symplectic(f, 1, cutoff=3)

    def test_odd_dimension(self):
        with pytest.raises(ValueError):
            is_symplectic(PolyEndo.identity(3))


def test_constant_terms_rejected():
    with pytest.raises(ValueError):
        PolyEndo((x + 1, y))


def test_json_round_trip():
    f = endo("x + 3/2*y^2", "y - x*y").with_symplectic_n(1)
    back = endo_from_json(endo_to_json(f))
    assert back == f and back.symplectic_n == 1


def word_maps(n=3, degree=None):
    return seeds.map(lambda s: eval_word(random_tame_word(random.Random(s), n, 3, 2), degree))


@settings(max_examples=25, deadline=None)
@given(word_maps(), word_maps(), word_maps())
def test_compose_associative(f, g, h):
    assert compose(compose(f, g), h) == compose(f, compose(g, h))


@settings(max_examples=25, deadline=None)
@given(word_maps(), word_maps())
def test_jacobian_chain_rule(f, g):
    lhs = jacobian(compose(f, g))
    rhs = jacobian(f).substitute(g.images) * jacobian(g)
    assert lhs == rhs


@settings(max_examples=40, deadline=None)
@given(word_maps(degree=6), word_maps(degree=6), word_maps(degree=6))
def test_ultrametric_inequality(f, g, h):
    assert metric(f, h) <= max(metric(f, g), metric(g, h))
    assert endo_height(f, h) >= min(endo_height(f, g), endo_height(g, h))


@settings(max_examples=25, deadline=None)
@given(word_maps(), st.integers(2, 7))
def test_formal_inverse_both_sides(f, cutoff):
    g = formal_inverse(f, cutoff)
    assert height_from_identity(compose(f, g, cutoff)) > cutoff
    assert height_from_identity(compose(g, f, cutoff)) > cutoff


def trace_component(h_images, nvars, degree):
    tr = Poly.zero(nvars)
    for i, hi in enumerate(h_images):
        tr = tr + hi.partial(i)
    return tr.homogeneous_component(degree)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_traceless_jacobian_of_height_k_part(seed):
    # normalize a tame map to id + H with Ht(H) = k >= 2; the degree-(k-1) trace must vanish
    rng = random.Random(seed)
    f = eval_word(random_tame_word(rng, 3, 4, 3), 7)
    a_inv = linalg.inverse(linear_part(f))
    r = Linear(a_inv).act(f)
    dev = r.deviation()
    k = height_from_identity(r)
    if k is INF or k >= 7:
        return
    assert k >= 2
    assert trace_component(dev, 3, k - 1) == 0
