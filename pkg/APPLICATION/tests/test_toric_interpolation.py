import random
from fractions import Fraction

import pytest

from stab_core.errors import AlgebraError, GeometryError
from stab_core.exact_algebra import LaurentPoly, Torus, koszul_from_weights, newton_polytope
from stab_core.gkm_model import tstar_pn
from stab_core.lattice_geometry import LatticePolytope
from stab_core.toric_interpolation import (
    Congruence,
    InterpolationProblem,
    factor_by_direction,
    interpolate,
    is_multiple,
    is_nondegenerate,
    shifted_cohomology,
    solve_by_multiplier,
    window_points,
)

LINE = Torus(("x", "h"), ("x",))
PLANE = Torus(("x1", "x2", "h"), ("x1", "x2"))

DIRECTIONS = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (1, -2)]


# -----------------------------------------------------------------------------
# Генераторы случайных задач
# -----------------------------------------------------------------------------
def _binomial(torus: Torus, a_part, h_exp: int) -> LaurentPoly:
    w = torus.from_a(a_part) + torus.coordinate("h", h_exp)
    return torus.one() - torus.monomial(w)


def _random_poly(rng: random.Random, torus: Torus, spread: int) -> LaurentPoly:
    terms = {}
    for _ in range(rng.randint(1, 3)):
        a_part = [rng.randint(-spread, spread) for _ in torus.a_names]
        w = torus.from_a(a_part) + torus.coordinate("h", rng.randint(-1, 1))
        terms[w] = terms.get(w, 0) + rng.randint(-3, 3)
    return LaurentPoly(torus, terms)


def _random_shift(rng: random.Random, dim: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(rng.randint(-6, 6), rng.choice([1, 2, 3])) for _ in range(dim))


def _problem(rng: random.Random, P: LaurentPoly, spread: int) -> tuple[InterpolationProblem, LaurentPoly]:
    """Задача с известным представителем f0 в окне: target = f0 + P·g."""
    torus = P.torus
    delta = newton_polytope(P)
    shift = _random_shift(rng, len(torus.a_names))
    f0 = LaurentPoly(
        torus,
        {
            torus.from_a(mu) + torus.coordinate("h", rng.randint(-1, 1)): rng.randint(-3, 3)
            for mu in window_points(delta, shift)
        },
    )
    target = f0 + P * _random_poly(rng, torus, spread)
    return InterpolationProblem(delta, shift, P, target=target), f0


def _rank_one(rng: random.Random):
    P = LINE.one()
    for _ in range(rng.randint(1, 3)):
        P = P * _binomial(LINE, [rng.choice([1, 2])], rng.randint(-1, 1))
    return _problem(rng, P, 3)


def _rank_two(rng: random.Random):
    u, v = rng.sample(DIRECTIONS, 2)
    P = _binomial(PLANE, u, rng.randint(-1, 1)) * _binomial(PLANE, v, 0)
    return _problem(rng, P, 2)


def _assert_solves(prob: InterpolationProblem, f: LaurentPoly) -> None:
    assert all(prob.window.contains(e) for e in f.a_support())
    assert is_multiple(f - prob.target, prob.P)


def _compare(prob: InterpolationProblem, f0: LaurentPoly) -> None:
    first = interpolate(prob)
    second = solve_by_multiplier(prob)
    assert first.free_parameters == second.free_parameters
    _assert_solves(prob, first.f)
    _assert_solves(prob, second.f)
    if prob.shift_is_integral():
        assert first.free_parameters == 1
        assert first.kernel == prob.P.scale_monomial(prob.torus.from_a([int(x) for x in prob.shift]))
    else:
        assert first.free_parameters == 0
        assert first.f == f0
        assert second.f == f0


# -----------------------------------------------------------------------------
# Сверка двух решателей
# -----------------------------------------------------------------------------
@pytest.mark.parametrize("seed", range(300))
def test_rank_one_solvers_agree(seed):
    _compare(*_rank_one(random.Random(seed)))


@pytest.mark.parametrize("seed", range(40))
def test_rank_two_solvers_agree(seed):
    _compare(*_rank_two(random.Random(10_000 + seed)))


@pytest.mark.slow
def test_solvers_agree_on_large_random_batch():
    rng = random.Random(2024)
    for _ in range(1000):
        _compare(*_rank_one(rng))
    for _ in range(100):
        _compare(*_rank_two(rng))


# -----------------------------------------------------------------------------
# Единственность и ядро
# -----------------------------------------------------------------------------
def test_generic_shift_recovers_representative():
    P = _binomial(LINE, [1], 1) * _binomial(LINE, [1], 0)
    f0 = LINE.parse_poly("2*x - h*x^2")
    prob = InterpolationProblem(newton_polytope(P), (Fraction(1, 2),), P, target=f0 + P * LINE.parse_poly("x^3 - h"))
    result = interpolate(prob)
    assert result.f == f0
    assert result.free_parameters == 0
    assert result.kernel is None
    assert not result.warnings


def test_integral_shift_has_kernel_a_lambda_P():
    P = _binomial(PLANE, (1, 0), 0) * _binomial(PLANE, (0, 1), 1)
    f0 = PLANE.parse_poly("x1*x2^-2 + h*x1^2*x2^-1")
    prob = InterpolationProblem(newton_polytope(P), (1, -2), P, target=f0 + P * PLANE.parse_poly("x2 + h"))
    result = interpolate(prob)
    assert result.free_parameters == 1
    assert result.kernel == P.scale_monomial(PLANE.from_a((1, -2)))
    assert any("non-generic slope" in w for w in result.warnings)
    assert is_multiple(result.f - f0, P)


def test_column_order_changes_representative_only():
    P = _binomial(LINE, [1], 0)
    prob = InterpolationProblem(newton_polytope(P), (0,), P, target=LINE.parse_poly("x^2"))
    a = interpolate(prob, column_order=[0, 1])
    b = interpolate(prob, column_order=[1, 0])
    assert a.f == LINE.one()
    assert b.f == LINE.parse_poly("x")
    assert is_multiple(a.f - b.f, P)


def test_congruences_by_factor():
    f1 = _binomial(PLANE, (1, 0), 0)
    f2 = _binomial(PLANE, (0, 1), 0)
    P = f1 * f2
    g0 = PLANE.parse_poly("2*x1*x2 + h*x1*x2")
    prob = InterpolationProblem(
        newton_polytope(P),
        (Fraction(1, 3), Fraction(1, 3)),
        P,
        congruences=(
            Congruence(f1, g0 + f1 * PLANE.parse_poly("x2")),
            Congruence(f2, g0 - f2 * PLANE.parse_poly("h")),
        ),
    )
    assert interpolate(prob).f == g0


def test_factor_by_direction_groups_factors():
    P = _binomial(PLANE, (1, 1), 0) * _binomial(PLANE, (1, 1), 1) * _binomial(PLANE, (1, -1), 0)
    groups = factor_by_direction(P)
    assert groups is not None
    assert sorted(groups) == [(1, -1), (1, 1)]


def test_unit_vertex_coefficients_are_nondegenerate():
    segment = LatticePolytope([(-1,), (0,)])
    assert is_nondegenerate(LINE.parse_poly("1 - h*x^-1"), segment)
    assert not is_nondegenerate(LINE.parse_poly("1 - 2*x^-1"), segment)
    assert is_nondegenerate(LINE.parse_poly("h^1/2*x^2 - x^3"), LatticePolytope([(2,), (3,)]))


@pytest.mark.parametrize("n", [2, 3])
def test_koszul_class_of_normal_bundle_is_nondegenerate(n):
    model = tstar_pn(n)
    for point in model.fixed_points:
        P = koszul_from_weights(model.torus, point.tangent)
        assert is_nondegenerate(P, newton_polytope(P))


def test_degenerate_polynomial_is_rejected():
    P = LINE.parse_poly("1 - 2*x")
    prob = InterpolationProblem(newton_polytope(P), (Fraction(1, 2),), P)
    assert not is_nondegenerate(P, newton_polytope(P))
    with pytest.raises(AlgebraError, match="degenerate polynomial"):
        interpolate(prob)


def test_window_must_contain_newton_polytope():
    P = _binomial(LINE, [2], 0)
    with pytest.raises(GeometryError):
        InterpolationProblem(LatticePolytope([(0,), (1,)]), (0,), P)


def test_is_multiple():
    P = _binomial(PLANE, (1, -1), 0)
    assert is_multiple(P * PLANE.parse_poly("x1^2 + h*x2"), P)
    assert not is_multiple(PLANE.parse_poly("1 + x1/x2"), P)
    assert is_multiple(LaurentPoly.zero(PLANE), P)


# -----------------------------------------------------------------------------
# Когомологии сдвинутого пучка
# -----------------------------------------------------------------------------
def test_shifted_cohomology_on_segment():
    segment = LatticePolytope([(0,), (2,)])
    integral = shifted_cohomology(segment, (0,))
    assert integral.dimension == 1 and integral.generator == (0,)
    assert integral.cross_checked
    shifted = shifted_cohomology(segment, (Fraction(1, 2),))
    assert shifted.dimension == 0 and shifted.cross_checked
    assert shifted.label == "zero"


def test_shifted_cohomology_on_square():
    square = LatticePolytope([(0, 0), (1, 0), (0, 1), (1, 1)])
    verdict = shifted_cohomology(square, (1, -2))
    assert verdict.cross_checked
    assert verdict.label == "one-dimensional, generator a^[1, -2]"
    generic = shifted_cohomology(square, (Fraction(1, 3), 0))
    assert generic.dimension == 0 and generic.cross_checked


def test_shifted_cohomology_needs_full_dimension():
    with pytest.raises(GeometryError, match="not full-dimensional"):
        shifted_cohomology(LatticePolytope([(0, 0), (1, 1)]), (0, 0))


def test_window_points():
    assert window_points(LatticePolytope([(-1,), (0,)]), (1,)) == [(0,), (1,)]


def _random_window(rng: random.Random) -> tuple[LatticePolytope, tuple[Fraction, ...]]:
    """Отрезок или треугольник со случайным сдвигом; половина сдвигов целые."""
    if rng.random() < 0.5:
        a = rng.randint(-3, 3)
        delta = LatticePolytope([(a,), (a + rng.randint(1, 4),)])
    else:
        while True:
            u = (rng.randint(-3, 3), rng.randint(-3, 3))
            v = (rng.randint(-3, 3), rng.randint(-3, 3))
            if u[0] * v[1] - u[1] * v[0] != 0:
                break
        o = (rng.randint(-2, 2), rng.randint(-2, 2))
        delta = LatticePolytope([o, (o[0] + u[0], o[1] + u[1]), (o[0] + v[0], o[1] + v[1])])
    dim = delta.ambient_dim
    if rng.random() < 0.5:
        return delta, tuple(Fraction(rng.randint(-4, 4)) for _ in range(dim))
    return delta, _random_shift(rng, dim)


@pytest.mark.parametrize("seed", range(40))
def test_shifted_cohomology_verdicts_are_cross_checked(seed):
    delta, lam = _random_window(random.Random(500 + seed))
    verdict = shifted_cohomology(delta, lam)
    assert verdict.cross_checked
    assert verdict.dimension == (1 if all(x.denominator == 1 for x in lam) else 0)


@pytest.mark.slow
def test_shifted_cohomology_on_large_random_batch():
    rng = random.Random(7)
    for _ in range(200):
        assert shifted_cohomology(*_random_window(rng)).cross_checked
