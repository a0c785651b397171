from fractions import Fraction

import pytest

from stab_core.errors import GeometryError
from stab_core.gkm_model import tstar_pn
from stab_core.lattice_geometry import (
    Chamber,
    LatticePolytope,
    ShiftedPolytope,
    all_chambers,
    ample_order,
    chamber_split,
    lattice_basis,
    lattice_points_shifted,
    primitive_vector,
    tangent_cone,
)


# -----------------------------------------------------------------------------
# Сдвинутые многогранники
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    "segment, shift, expected",
    [
        ([(0,), (2,)], 0, [(0,), (1,), (2,)]),
        ([(-1,), (0,)], Fraction(1, 2), [(0,)]),
        ([(-1,), (0,)], 1, [(0,), (1,)]),
    ],
)
def test_lattice_points_shifted_segments(segment, shift, expected):
    dl = ShiftedPolytope(LatticePolytope(segment), (shift,))
    assert lattice_points_shifted(dl) == expected


def test_generic_shift_of_square():
    square = LatticePolytope([(0, 0), (1, 0), (0, 1), (1, 1)])
    generic = ShiftedPolytope(square, (Fraction(1, 3), Fraction(1, 2)))
    assert generic.is_generic()
    assert lattice_points_shifted(generic) == [(1, 1)]
    assert not ShiftedPolytope(square, (1, -2)).is_generic()
    assert len(lattice_points_shifted(ShiftedPolytope(square, (1, -2)))) == 4


def test_polytope_faces_and_containment():
    tri = LatticePolytope([(0, 0), (2, 0), (0, 2), (1, 1)])
    assert tri.vertices == ((0, 0), (0, 2), (2, 0))
    assert tri.contains((Fraction(1, 2), Fraction(1, 2)))
    assert not tri.contains((2, 1))
    assert tri.support((1, 1)) == (0, 2)


def test_lower_dimensional_polytope_keeps_equations():
    seg = LatticePolytope([(0, 0), (2, 2)])
    assert seg.dim == 1
    assert seg.contains((1, 1))
    assert not seg.contains((1, 0))


def test_empty_polytope_raises():
    with pytest.raises(GeometryError, match="empty polytope"):
        LatticePolytope([])


def test_tangent_cone_at_vertex():
    square = LatticePolytope([(0, 0), (1, 0), (0, 1), (1, 1)])
    cone = tangent_cone(square, [(0, 0)])
    assert cone.contains_direction((1, 2))
    assert not cone.contains_direction((-1, 0))
    with pytest.raises(GeometryError):
        tangent_cone(square, [(0, 0), (1, 1)])


def test_primitive_vector_and_basis():
    assert primitive_vector((Fraction(2, 3), Fraction(-4, 3))) == (1, -2)
    basis = lattice_basis([(2, 0), (0, 2), (1, 1)])
    assert len(basis) == 2
    assert abs((basis[0][0] * basis[1][1]) - (basis[0][1] * basis[1][0])) == 2


# -----------------------------------------------------------------------------
# Камеры
# -----------------------------------------------------------------------------
def test_chamber_split_signs(tp1, std):
    torus = tp1.torus
    up, down = torus.parse_weight("a1/a2"), torus.parse_weight("a2/(h*a1)")
    split = chamber_split([up, down, torus.parse_weight("h")], std)
    assert split.attracting == [up]
    assert split.repelling == [down]
    assert split.fixed == [torus.parse_weight("h")]


def test_chamber_split_rejects_wall(tp2):
    torus = tp2.torus
    wall = Chamber(torus, (1, 1, 0))
    with pytest.raises(GeometryError, match="non-generic chamber"):
        chamber_split([torus.parse_weight("a1/a2")], wall)


def test_permutation_chambers(tp2):
    torus = tp2.torus
    assert Chamber.from_permutation(torus, [1, 2, 3]) == Chamber.standard(torus)
    c = Chamber.from_permutation(torus, [2, 3, 1])
    assert c.sigma == (0, 2, 1)
    assert c.opposite().sigma == (0, -2, -1)
    assert c.label == "cochar:0,2,1"
    assert len(all_chambers(torus)) == 6
    with pytest.raises(GeometryError):
        Chamber.from_permutation(torus, [1, 1, 3])


def test_cochar_length_is_checked(tp2):
    with pytest.raises(GeometryError):
        Chamber(tp2.torus, (1, 0))


# -----------------------------------------------------------------------------
# Порядок
# -----------------------------------------------------------------------------
@pytest.mark.parametrize("n", [2, 3, 4])
def test_standard_chamber_orders_points_by_index(n):
    model = tstar_pn(n)
    order = ample_order(model, Chamber.standard(model.torus))
    names = [f"F{k}" for k in range(1, n + 1)]
    assert order.refine("ample") == names
    assert order.refine("index") == names
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            assert order.less(a, b)


def test_opposite_chamber_reverses_order(tp2):
    order = ample_order(tp2, Chamber.standard(tp2.torus).opposite())
    assert order.refine("ample") == ["F3", "F2", "F1"]


def test_explicit_refinement_is_validated(tp2):
    order = ample_order(tp2, Chamber.standard(tp2.torus))
    assert order.refine("F1,F2,F3") == ["F1", "F2", "F3"]
    with pytest.raises(GeometryError, match="contradicts"):
        order.refine(["F2", "F1", "F3"])
    with pytest.raises(GeometryError, match="not a permutation"):
        order.refine(["F1", "F2"])
