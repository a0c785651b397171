from fractions import Fraction

import pytest

from conftest import poly
from stab_core.envelope import compute_column, compute_stab, restrict_stab, verify_stab
from stab_core.errors import ModelError
from stab_core.gkm_model import normalization, tstar_pn
from stab_core.lattice_geometry import Chamber


# -----------------------------------------------------------------------------
# T*P¹: явные значения
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    "slope, expected",
    [
        (Fraction(1, 3), "h^1/2 - h^-1/2"),
        (Fraction(4, 3), "h^1/2*a2/a1 - h^-1/2*a2/a1"),
        (Fraction(-2, 5), "h^1/2*a1/a2 - h^-1/2*a1/a2"),
    ],
)
def test_cotangent_line_off_diagonal(tp1, std, slope, expected):
    S = compute_stab(tp1, std, slope=slope)
    assert S.entry("F1", "F2") == poly(tp1.torus, expected)
    assert S.entry("F2", "F1").is_zero()
    assert not S.warnings


def test_cotangent_line_diagonal_is_normalization(tp1, std):
    S = compute_stab(tp1, std, slope=Fraction(1, 3))
    for name in tp1.names:
        assert S.entry(name, name) == normalization(tp1, name, std)


def test_integral_slope_warns(tp1, std):
    S = compute_stab(tp1, std, slope=1)
    assert any("non-generic slope" in w for w in S.warnings)
    assert verify_stab(S).checks["triangular"]


def test_column_matches_matrix(tp1, std):
    S = compute_stab(tp1, std, slope=Fraction(1, 3))
    column, warnings = compute_column(tp1, std, "F2", Fraction(1, 3))
    assert not warnings
    assert column == {"F2": S.entry("F2", "F2"), "F1": S.entry("F1", "F2")}


def test_envelope_needs_polarization(p2):
    with pytest.raises(ModelError, match="polarization"):
        compute_stab(p2, Chamber.standard(p2.torus))


# -----------------------------------------------------------------------------
# Проверка свойств
# -----------------------------------------------------------------------------
@pytest.mark.parametrize("n", [2, 3])
def test_verify_and_refinement_independence(n):
    model = tstar_pn(n)
    chamber = Chamber.standard(model.torus)
    S = compute_stab(model, chamber, refinement="index")
    report = verify_stab(S)
    assert report.ok, report.failures
    assert set(report.checks) == {"triangular", "diagonal", "window", "divisibility"}
    assert S == compute_stab(model, chamber, refinement="reverse-index")


def test_verify_on_permuted_chamber(tp2):
    chamber = Chamber.from_permutation(tp2.torus, [2, 3, 1])
    S = compute_stab(tp2, chamber)
    assert verify_stab(S).ok


@pytest.mark.slow
def test_verify_rank_three():
    model = tstar_pn(4)
    S = compute_stab(model, Chamber.standard(model.torus))
    assert verify_stab(S).ok


def test_verify_detects_broken_entry(tp1, std):
    S = compute_stab(tp1, std, slope=Fraction(1, 3))
    S.entries[("F1", "F2")] = poly(tp1.torus, "h^1/2")
    report = verify_stab(S)
    assert not report.ok
    assert not report.checks["divisibility"]
    assert report.failures


# -----------------------------------------------------------------------------
# Ограничение на грань
# -----------------------------------------------------------------------------
def test_restrict_to_face_keeps_leading_terms(tp1, std):
    S = compute_stab(tp1, std, slope=Fraction(1, 3))
    R = restrict_stab(S, (1, 0))
    assert R.face == (1, 0)
    assert R.entry("F1", "F1") == tp1.torus.one()
    assert R.entry("F2", "F1").is_zero()
    assert S.face is None


def test_restrict_rejects_wrong_length(tp1, std):
    S = compute_stab(tp1, std, slope=Fraction(1, 3))
    with pytest.raises(ModelError, match="entries"):
        restrict_stab(S, (1, 0, 0))
