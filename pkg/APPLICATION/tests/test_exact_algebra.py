from fractions import Fraction

import pytest

from conftest import poly
from stab_core.errors import AlgebraError
from stab_core.exact_algebra import (
    LaurentPoly,
    ThetaClass,
    Torus,
    TruncatedQSeries,
    kahler_class,
    koszul_from_weights,
    monomial_sqrt,
    newton_polytope,
    restrict_to_subtorus,
    theta_degree,
)
from stab_core.lattice_geometry import LatticePolytope


# -----------------------------------------------------------------------------
# koszul_from_weights
# -----------------------------------------------------------------------------
def test_koszul_single_weight(torus_ah):
    w = torus_ah.parse_weight("a1/a2")
    assert koszul_from_weights(torus_ah, [w]) == poly(torus_ah, "1 - a2/a1")


def test_koszul_empty_is_one(torus_ah):
    assert koszul_from_weights(torus_ah, []) == torus_ah.one()


def test_koszul_with_parameter(torus_ah):
    w = torus_ah.parse_weight("a2/(h*a1)")
    assert koszul_from_weights(torus_ah, [w]) == poly(torus_ah, "1 - h*a1/a2")


def test_koszul_rejects_fixed_direction(torus_ah):
    with pytest.raises(AlgebraError, match="fixed direction in normal bundle"):
        koszul_from_weights(torus_ah, [torus_ah.parse_weight("h")])


# -----------------------------------------------------------------------------
# LaurentPoly
# -----------------------------------------------------------------------------
def test_ring_laws(torus_ah):
    x = poly(torus_ah, "a1/a2")
    y = poly(torus_ah, "h^1/2 - h^-1/2")
    one = torus_ah.one()
    assert (one - x) * (one + x) == one - x * x
    assert x * (y + one) == x * y + x
    assert (x * y) * y == x * (y * y)
    assert x - x == LaurentPoly.zero(torus_ah)


def test_parse_and_print_round_trip(torus_ah):
    p = poly(torus_ah, "-h^-1/2*a2/a1 + h^1/2 - 3*a1^2")
    assert poly(torus_ah, p.to_string()) == p


def test_monomial_ratio(torus_ah):
    base = poly(torus_ah, "1 - h*a1/a2")
    shifted = base.scale_monomial(torus_ah.parse_weight("h^-1/2*a2/a1"), -1)
    c, w = shifted.monomial_ratio(base)
    assert c == -1
    assert torus_ah.format_weight(w) == "a1^-1*a2*h^-1/2"


def test_divisible_by_binomial(torus_ah):
    v = torus_ah.parse_weight("a1/a2")
    p = (torus_ah.one() - torus_ah.monomial(v)) * poly(torus_ah, "h + a1")
    assert p.divisible_by_binomial(v)
    assert not poly(torus_ah, "1 + a1/a2").divisible_by_binomial(v)


def test_is_unit(torus_ah):
    assert poly(torus_ah, "-h^3/2").is_unit()
    assert not poly(torus_ah, "a1").is_unit()
    assert not poly(torus_ah, "2*h").is_unit()


# -----------------------------------------------------------------------------
# Многогранники Ньютона и ограничения
# -----------------------------------------------------------------------------
def test_newton_polytope_of_zero_raises(torus_ah):
    with pytest.raises(AlgebraError, match="empty polytope"):
        newton_polytope(LaurentPoly.zero(torus_ah))


def test_newton_polytope_is_minkowski_additive(torus_ah):
    p = poly(torus_ah, "1 - a1/a2")
    q = poly(torus_ah, "1 + h*a1 + a2")
    assert newton_polytope(p * q) == newton_polytope(p).minkowski_sum(newton_polytope(q))


def test_restrict_to_subtorus_is_functorial(torus_ah):
    p = poly(torus_ah, "a1^2/a2 - h*a2")
    line = Torus(("t", "h"), ("t",))
    point = Torus(("u",), ())
    first = [[1, 1, 0], [0, 0, 1]]
    second = [[2, 1]]
    composite = [[2, 2, 1]]
    step = restrict_to_subtorus(restrict_to_subtorus(p, first, line), second, point)
    assert step == restrict_to_subtorus(p, composite, point)


def test_monomial_sqrt_requires_square(torus_ah):
    assert monomial_sqrt(torus_ah, torus_ah.parse_weight("a1^2*h")) == torus_ah.parse_weight("a1*h^1/2")
    with pytest.raises(AlgebraError, match="non-square determinant ratio"):
        monomial_sqrt(torus_ah, torus_ah.parse_weight("a1"))


# -----------------------------------------------------------------------------
# TruncatedQSeries
# -----------------------------------------------------------------------------
def test_series_product_precision(torus_ah):
    one = torus_ah.one()
    s = TruncatedQSeries(torus_ah, {0: one, 1: one}, 5)
    t = TruncatedQSeries(torus_ah, {Fraction(-1, 3): one}, 4)
    prod = s * t
    assert prod.order == min(Fraction(5), Fraction(4), Fraction(5) - Fraction(1, 3), Fraction(4))
    assert prod.coefficient(Fraction(2, 3)) == one


def test_series_inverse(torus_ah):
    one = torus_ah.one()
    s = TruncatedQSeries(torus_ah, {0: one, 1: -one}, 10)
    inv = s.inverse()
    assert all(inv.coefficient(k) == one for k in range(10))
    assert (s * inv).agrees_with(TruncatedQSeries.from_poly(one, 10))


def test_series_refuses_coefficient_beyond_order(torus_ah):
    s = TruncatedQSeries.from_poly(torus_ah.one(), 3)
    with pytest.raises(AlgebraError):
        s.coefficient(3)


# -----------------------------------------------------------------------------
# Θ-классы
# -----------------------------------------------------------------------------
def test_theta_degree_of_dual_agrees(torus_ah):
    V = ThetaClass.from_weights(torus_ah, [torus_ah.parse_weight("a1/a2"), torus_ah.parse_weight("a2/(h*a1)")])
    assert theta_degree(V) == theta_degree(V.dual())


def test_theta_degree_is_additive(torus_ah):
    U = ThetaClass.from_weights(torus_ah, [torus_ah.parse_weight("a1^2")])
    V = ThetaClass.from_weights(torus_ah, [torus_ah.parse_weight("a1/a2")])
    assert theta_degree(U + V) == theta_degree(U) + theta_degree(V)


def test_theta_degree_ignores_parameters(torus_ah):
    V = ThetaClass.from_weights(torus_ah, [torus_ah.parse_weight("h")])
    assert theta_degree(V) == theta_degree(ThetaClass(torus_ah))


def test_kahler_class_has_no_degree_along_a_and_z():
    torus = Torus(("a1", "a2", "z"), ("a1", "a2"))
    L = ThetaClass.from_weights(torus, [torus.parse_weight("a1^-1")])
    U = kahler_class(L, torus.parse_weight("z"))
    assert theta_degree(U) == theta_degree(ThetaClass(torus))
    assert theta_degree(U, ["z"])[0, 0] == 0


def test_theta_class_equality_sees_negative_counts(torus_ah):
    w = torus_ah.parse_weight("a1")
    assert ThetaClass(torus_ah, {w: -1}) != ThetaClass(torus_ah, {w: -2})


def test_lattice_polytope_from_newton(torus_ah):
    assert newton_polytope(poly(torus_ah, "1 - a2/a1")) == LatticePolytope([(0, 0), (-1, 1)])
