from fractions import Fraction

import pytest
import sympy as sp

from stab_core.degeneration import (
    InertiaData,
    InertiaGroup,
    PeriodicConvexFunction,
    compare_with_stab,
    elliptic_stab_rank1,
    gram_matrix,
    legendre_dual_tessellation,
    legendre_transform,
    model_floors,
    model_function,
    nodal_floors,
    nodal_limit,
    qfun,
    tate_cubic_check,
    tate_cubic_residual,
    theta_report,
)
from stab_core.envelope import compute_stab
from stab_core.errors import DegenerationError, ResonanceError
from stab_core.exact_algebra import LaurentPoly, Torus

RUNNING = [(2, 0), (0, 1), (1, -1)]


# -----------------------------------------------------------------------------
# 𝕢 и преобразование Лежандра
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    "x, value",
    [(0, 0), (Fraction(1, 2), 0), (1, 0), (2, 1), (3, 3), (-1, 1), (Fraction(5, 2), 2)],
)
def test_qfun_values(x, value):
    assert qfun(x) == value


@pytest.mark.parametrize("alpha, value", [(Fraction(1, 2), Fraction(1, 2)), (Fraction(3, 2), 2)])
def test_legendre_transform(alpha, value):
    assert legendre_transform(alpha) == value


def test_legendre_transform_rejects_empty_window():
    with pytest.raises(DegenerationError):
        legendre_transform(1, (2, 1))


# -----------------------------------------------------------------------------
# 𝒬 и Грам
# -----------------------------------------------------------------------------
def test_gram_of_running_example():
    G = gram_matrix(RUNNING)
    assert G == sp.ImmutableMatrix([[5, -1], [-1, 2]])
    assert G.det() == 9


def test_gram_rejects_degenerate_weights():
    with pytest.raises(DegenerationError, match="degenerate"):
        gram_matrix([(1, 0), (2, 0)])


@pytest.mark.parametrize(
    "x, sigma",
    [
        ((Fraction(1, 3), Fraction(1, 5)), (1, -2)),
        ((Fraction(-7, 4), Fraction(2, 3)), (3, 1)),
        ((0, 0), (0, 1)),
    ],
)
def test_difference_identity(x, sigma):
    Q = PeriodicConvexFunction.from_weights(RUNNING)
    assert Q.difference_identity(x, sigma)


def test_subdifferential_at_origin():
    Q = PeriodicConvexFunction.from_weights(RUNNING)
    polytope, segments = Q.subdifferential((0, 0))
    assert len(segments) == 3
    assert polytope.dim == 2
    _, generic = Q.subdifferential((Fraction(1, 7), Fraction(1, 11)))
    assert generic == []


def test_multiplicities_are_collected():
    Q = PeriodicConvexFunction.from_weights([(1,), (1,), (2,)])
    assert Q.weights == ((1,), (2,))
    assert Q.multiplicities == (2, 1)


# -----------------------------------------------------------------------------
# Разбиения
# -----------------------------------------------------------------------------
def test_running_example_tessellation():
    tess = legendre_dual_tessellation(PeriodicConvexFunction.from_weights(RUNNING))
    assert tess.dimension_counts() == {0: 3, 1: 7, 2: 4}
    volumes = sorted(t.volume for t in tess.tiles if t.dim == 2)
    assert volumes == [2, 2, 5]
    assert tess.total_volume() == 9
    assert tess.dual_vertex_count() == 4


def test_rank_one_tessellation():
    tess = legendre_dual_tessellation(PeriodicConvexFunction.from_weights([(1,)]))
    assert tess.dimension_counts() == {0: 1, 1: 1}
    assert tess.total_volume() == 1
    assert tess.strata[tess.index_of((Fraction(1, 2),))].dim == 1


def test_projective_plane_function(p2):
    Q = model_function(p2)
    assert Q.gram().det() == 12
    tess = legendre_dual_tessellation(Q)
    assert tess.dimension_counts() == {0: 1, 1: 3, 2: 2}


def test_projective_plane_single_point_function(p2):
    tess = legendre_dual_tessellation(model_function(p2, "F1"))
    assert tess.dimension_counts() == {0: 1, 1: 2, 2: 1}
    assert tess.total_volume() == 1


# -----------------------------------------------------------------------------
# Этажи узловой K-теории
# -----------------------------------------------------------------------------
def _rank_one_inertia(with_inside: bool = True) -> InertiaData:
    return InertiaData(
        rank=1,
        groups=(
            InertiaGroup("1", ((1,),), ("X",)),
            InertiaGroup("mu2", ((2,),), ("Y1", "Y2"), {"Y1": "X", "Y2": "X"} if with_inside else {}),
            InertiaGroup(
                "T",
                (),
                ("P1", "P2", "P3", "P4", "P5"),
                {"P1": "Y1", "P2": "Y1", "P3": "Y2", "P4": "Y2", "P5": "Y2"},
            ),
        ),
    )


def test_rank_one_inertia_floors():
    plan = nodal_floors(_rank_one_inertia())
    assert plan.counts("T") == {0: 10, 1: 3}
    assert plan.counts("1") == {0: 1}
    assert plan.counts("mu2") == {0: 3}
    on_p1 = {plan.strata[k].component for k in plan.floors["P1"]}
    assert "X" in on_p1 and "Y1" in on_p1
    assert "Y2" not in on_p1
    assert "P2" not in on_p1


def test_missing_inclusion_is_inconsistent():
    with pytest.raises(DegenerationError, match="inconsistent component counts"):
        _rank_one_inertia(with_inside=False)


def test_free_action_has_one_floor():
    plan = nodal_floors(InertiaData(rank=1, groups=(InertiaGroup("1", ((1,),), ("X",)),)))
    assert plan.counts() == {0: 1}
    assert list(plan.floors) == ["X"]


def test_projective_plane_floors(p2):
    plan = model_floors(p2)
    assert plan.counts() == {0: 6, 1: 6, 2: 1}
    vertex = [s for s in plan.strata if s.dimension == 2]
    assert [s.component for s in vertex] == ["F1+F2+F3"]
    pairs = {s.component for s in plan.strata if s.dimension == 1 and "+" in s.component}
    assert pairs == {"F1+F2", "F1+F3", "F2+F3"}
    assert plan.cocycle_ok
    assert set(plan.floors) == {"F1", "F2", "F3"}


# -----------------------------------------------------------------------------
# Тэта-ряды
# -----------------------------------------------------------------------------
def test_theta_report_identities():
    report = theta_report(20)
    assert report.ok
    torus = Torus(("a",), ("a",))
    assert report.theta0.coefficient(0) == torus.parse_poly("1 + a")


def test_tate_cubic():
    assert tate_cubic_check()
    assert tate_cubic_residual() == 0
    assert not tate_cubic_check(perturbed=True)
    assert tate_cubic_residual(True, {"t": 1, "s": 1}) == 4


# -----------------------------------------------------------------------------
# Эллиптическая огибающая ранга 1
# -----------------------------------------------------------------------------
def test_elliptic_quasi_periodicity(tp1):
    s = Fraction(1, 3)
    E0 = elliptic_stab_rank1(tp1, slope=s, order=16)
    E1 = elliptic_stab_rank1(tp1, slope=s, order=16, x_shift=1)
    torus = tp1.torus
    factor = (-E0.z.inverse()).scale_monomial(-E0.variable)
    assert E1.entry("F1", "F2").agrees_with(E0.entry("F1", "F2").shift(-s, factor))
    minus_inverse_x = LaurentPoly.monomial(torus, -E0.variable, -1)
    assert E1.entry("F1", "F1").agrees_with(E0.entry("F1", "F1").shift(0, minus_inverse_x))


@pytest.mark.parametrize("z", ["h", "1"])
def test_elliptic_rejects_resonant_z(tp1, z):
    with pytest.raises(ResonanceError, match="resonant slope"):
        elliptic_stab_rank1(tp1, z=z, slope=Fraction(1, 3))


def test_elliptic_needs_enough_terms(tp1):
    with pytest.raises(DegenerationError, match="at least 8"):
        elliptic_stab_rank1(tp1, order=4)


@pytest.mark.parametrize("slope", [Fraction(1, 3), Fraction(4, 3), Fraction(-2, 5)])
def test_nodal_limit_recovers_stab(tp1, std, slope):
    E = elliptic_stab_rank1(tp1, slope=slope, order=16)
    S = compute_stab(tp1, std, slope=slope)
    assert compare_with_stab(nodal_limit(E), S) == tp1.torus.zero()


def test_nodal_limit_rejects_negative_valuation(tp1):
    E = elliptic_stab_rank1(tp1, slope=Fraction(1, 3), order=16)
    E.entries[("F1", "F2")] = E.entries[("F1", "F2")].shift(-1)
    with pytest.raises(DegenerationError, match="limit does not exist"):
        nodal_limit(E)


def test_nodal_limit_needs_unshifted_matrix(tp1):
    E = elliptic_stab_rank1(tp1, slope=Fraction(1, 3), order=16, x_shift=1)
    with pytest.raises(DegenerationError):
        nodal_limit(E)
