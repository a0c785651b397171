from fractions import Fraction

import pytest

from stab_core.errors import AlgebraError, GeometryError, ModelError
from stab_core.exact_algebra import ThetaClass, Torus
from stab_core.gkm_model import (
    Edge,
    FixedPoint,
    GKMModel,
    attracting_decomposition,
    attractive_check,
    builtin,
    degree_polytope,
    limit_polarization,
    limit_polarization_check,
    normalization,
    pn,
    resonant_locus,
    tstar_pn,
)
from stab_core.lattice_geometry import Chamber, all_chambers, ample_order


# -----------------------------------------------------------------------------
# Встроенные модели
# -----------------------------------------------------------------------------
def test_builtin_models(tp2, p2):
    assert tp2.names == ["F1", "F2", "F3"]
    assert len(tp2.edges) == 3
    assert tp2.has_polarization
    assert not p2.has_polarization
    assert builtin("tstar-pn", 3) == tp2
    with pytest.raises(ModelError, match="unknown builtin"):
        builtin("grassmannian", 3)
    with pytest.raises(ModelError):
        tstar_pn(1)


def test_model_rejects_unknown_edge_endpoint():
    torus = Torus(("a1", "a2"), ("a1", "a2"))
    w = torus.parse_weight("a1/a2")
    with pytest.raises(ModelError):
        GKMModel(torus, (FixedPoint("F1", (-w,), -w),), (Edge("F1", "F9", w),))


# -----------------------------------------------------------------------------
# δυ и притягивающие части
# -----------------------------------------------------------------------------
@pytest.mark.parametrize("n", [2, 3, 4])
def test_delta_upsilon_over_all_chambers(n):
    model = tstar_pn(n)
    torus = model.torus
    for chamber in all_chambers(torus):
        data = attracting_decomposition(model, chamber)
        order = ample_order(model, chamber)
        for k in range(1, n + 1):
            name = f"F{k}"
            expected = {}
            for below in order.below(name):
                i = below[1:]
                expected[torus.parse_weight(f"a{k}/(h*a{i})")] = 1
                expected[torus.parse_weight(f"a{k}/a{i}")] = -1
            assert data[name].delta_upsilon == ThetaClass(torus, expected), (chamber.label, name)


def test_polarization_must_split_tangent_space():
    torus = Torus(("a1", "a2", "h"), ("a1", "a2"))
    w = torus.parse_weight("a1/a2")
    dual = torus.parse_weight("a2/(h*a1)")
    bad = torus.parse_weight("a1^2/a2^2")
    with pytest.raises(ModelError, match="does not split the tangent space"):
        GKMModel(
            torus,
            (
                FixedPoint("F1", (-w, -dual), -torus.coordinate("a1"), polarization=(bad,)),
                FixedPoint("F2", (w, dual), -torus.coordinate("a2"), polarization=(w,)),
            ),
            (Edge("F1", "F2", w),),
        )


# -----------------------------------------------------------------------------
# Притягивающее расслоение
# -----------------------------------------------------------------------------
@pytest.mark.parametrize("n", [2, 3, 4])
def test_cotangent_polarization_is_attractive(n):
    model = tstar_pn(n)
    assert attractive_check(model, Chamber.standard(model.torus)).ok


def test_projective_plane_has_obstruction(p2):
    report = attractive_check(p2, Chamber.standard(p2.torus))
    assert not report.ok
    assert report.obstructions
    first = report.obstructions[0]
    assert set(first.pair) <= set(p2.names)
    assert "disagree on the subtorus" in first.describe()


# -----------------------------------------------------------------------------
# Нормировка
# -----------------------------------------------------------------------------
def test_normalization_of_cotangent_line(tp1, std):
    torus = tp1.torus
    assert normalization(tp1, "F1", std) == torus.parse_poly("1 - a1/a2")
    assert normalization(tp1, "F2", std) == torus.parse_poly("h^1/2 - h^-1/2*a2/a1")


def test_normalization_needs_polarization(p2):
    with pytest.raises(ModelError):
        normalization(p2, "F1", Chamber.standard(p2.torus))


def test_non_square_determinant_ratio():
    torus = Torus(("a1", "a2", "h"), ("a1", "a2"))
    w = torus.parse_weight("a1/a2")
    model = GKMModel(
        torus,
        (
            FixedPoint("F1", (-w, torus.parse_weight("a1/(h*a2)")), -torus.coordinate("a1"), polarization=(-w,)),
            FixedPoint("F2", (w, torus.parse_weight("h^-1/2*a2/a1")), -torus.coordinate("a2"), polarization=(w,)),
        ),
        (Edge("F1", "F2", w),),
    )
    with pytest.raises(AlgebraError, match="non-square determinant ratio"):
        normalization(model, "F2", Chamber(torus, (1, 0)))


# -----------------------------------------------------------------------------
# Окно степеней
# -----------------------------------------------------------------------------
def test_degree_window_of_cotangent_line(tp1, std):
    window = degree_polytope(tp1, "F1", "F2", std, Fraction(1, 3))
    assert window.generic
    assert [list(v) for v in window.base.vertices] == [[0, 0], [1, -1]]
    assert window.shift == (Fraction(-1, 3), Fraction(1, 3))


def test_degree_window_rejects_incomparable_pair(tp1, std):
    with pytest.raises(GeometryError, match="incomparable pair"):
        degree_polytope(tp1, "F2", "F1", std)


# -----------------------------------------------------------------------------
# Резонансы
# -----------------------------------------------------------------------------
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_resonant_locus_is_powers_of_h(n):
    model = tstar_pn(n)
    torus = model.torus
    values = [torus.format_weight(w) for w in resonant_locus(model, Chamber.standard(torus))]
    assert values == ["1", "h"] + [f"h^{k}" for k in range(2, n)]


def test_resonant_locus_needs_polarization(p2):
    with pytest.raises(ModelError, match="needs a polarization"):
        resonant_locus(p2, Chamber.standard(p2.torus))


# -----------------------------------------------------------------------------
# Предельная поляризация
# -----------------------------------------------------------------------------
def test_limit_polarization_of_repelling_class(tp2):
    torus = tp2.torus
    V = ThetaClass.from_weights(torus, [torus.parse_weight("a2/a1"), torus.parse_weight("a3/a1")])
    lim = limit_polarization(V, (1, 1, 0))
    assert lim == ThetaClass.from_weights(torus, [torus.parse_weight("a2/a1")])


def test_limit_polarization_flips_attracting_part(tp2):
    torus = tp2.torus
    w = torus.parse_weight("a1/a3")
    lim = limit_polarization(ThetaClass.from_weights(torus, [w]), (1, 1, 0))
    assert lim == ThetaClass(torus, {w: 1, -w: -1})


def test_limit_polarization_check_on_face(tp2):
    checks = limit_polarization_check(tp2, Chamber.standard(tp2.torus), (1, 1, 0))
    assert [c.point for c in checks] == ["F1", "F2", "F3"]
    assert all(c.ok for c in checks)
    torus = tp2.torus
    shifts = {c.point: torus.format_weight(c.parameter_shift) for c in checks}
    assert shifts == {"F1": "1", "F2": "1", "F3": "h^-1"}


def test_limit_polarization_check_rejects_foreign_face(tp2):
    with pytest.raises(GeometryError, match="is not on a face"):
        limit_polarization_check(tp2, Chamber.standard(tp2.torus), (0, 0, 1))
