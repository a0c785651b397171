# APPLICATION/stab_core/envelope.py

"""
K-теоретические стабильные огибающие индукцией по порядку неподвижных точек.

Столбец Stab(F_i) строится сверху вниз: диагональ — нормировка, а в каждой
F_j < F_i ограничение находится интерполяцией: оно совпадает с уже найденными
ограничениями на соседних по рёбрам точках по модулю (1 − x^{−w}), делится на
(1 − x^{−w}) вдоль некомпактных отталкивающих направлений и лежит в окне
Ньютона Δ + λ.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from stab_core.errors import ModelError, SolverError
from stab_core.exact_algebra import LaurentPoly, Rational, as_fraction, koszul_from_weights, newton_polytope
from stab_core.gkm_model import (
    GKMModel,
    attracting_decomposition,
    degree_polytope,
    leading_term,
    normalization,
    rank_one_cocharacters,
)
from stab_core.lattice_geometry import AmpleOrder, Chamber, ample_order
from stab_core.toric_interpolation import Congruence, InterpolationProblem, interpolate

Progress = Callable[[Iterable[str]], Iterable[str]]


@dataclass
class StabMatrix:
    """entries[(j, i)] = Stab(F_i)|_{F_j}; отсутствующая пара означает 0."""

    model: GKMModel
    chamber: Chamber
    slope: Fraction | None
    order: list[str]
    entries: dict[tuple[str, str], LaurentPoly]
    warnings: list[str] = field(default_factory=list)
    face: tuple[int, ...] | None = None

    def entry(self, j: str, i: str) -> LaurentPoly:
        return self.entries.get((j, i), LaurentPoly.zero(self.model.torus))

    def column(self, i: str) -> dict[str, LaurentPoly]:
        return {j: self.entry(j, i) for j in self.order}

    def rows(self) -> list[list[str]]:
        """Строки матрицы в порядке пополнения (строка — точка ограничения)."""
        return [[self.entry(j, i).to_string() for i in self.order] for j in self.order]

    def __eq__(self, other) -> bool:
        if not isinstance(other, StabMatrix):
            return NotImplemented
        names = sorted(self.model.names)
        return (
            self.model == other.model
            and self.chamber == other.chamber
            and all(self.entry(j, i) == other.entry(j, i) for j in names for i in names)
        )


@dataclass
class VerificationReport:
    checks: dict[str, bool]
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


# -----------------------------------------------------------------------------
# Построение
# -----------------------------------------------------------------------------
def compute_column(
    model: GKMModel,
    chamber: Chamber,
    target: str,
    slope: Rational | None = None,
    refined: Sequence[str] | None = None,
    order: AmpleOrder | None = None,
) -> tuple[dict[str, LaurentPoly], list[str]]:
    """Столбец Stab(F_target): ограничения на точки F_j ≤ F_target и предупреждения.

    Raises:
        SolverError: интерполяция невозможна, в сообщении пара (j, i).
    """
    order = order or ample_order(model, chamber)
    refined = list(refined) if refined is not None else order.refine("ample")
    data = attracting_decomposition(model, chamber)
    torus = model.torus
    column: dict[str, LaurentPoly] = {target: normalization(model, target, chamber)}
    warnings: list[str] = []

    for j in reversed(refined):
        if not order.less(j, target):
            continue
        along = {}
        for edge, other, tangent in model.edges_at(j):
            if tangent in along:
                raise ModelError(f"two edges at {j} share the tangent weight {torus.format_weight(tangent)}")
            along[tangent] = other
        congruences = []
        for w in data[j].n_neg:
            residue = LaurentPoly.zero(torus)
            if w in along:
                residue = column.get(along[w], residue)
            congruences.append(Congruence(koszul_from_weights(torus, [w]), residue))

        window = degree_polytope(model, j, target, chamber, slope)
        problem = InterpolationProblem(
            delta=newton_polytope(window.koszul),
            shift=window.koszul_shift,
            P=window.koszul,
            congruences=tuple(congruences),
        )
        try:
            result = interpolate(problem)
        except SolverError as exc:
            raise SolverError(str(exc), pair=(j, target)) from exc
        if not window.generic:
            warnings.append(f"non-generic slope at pair {j} <- {target}")
        warnings.extend(f"{w} at pair {j} <- {target}" for w in result.warnings)
        if not result.f.is_zero():
            column[j] = result.f
    return column, warnings


def compute_stab(
    model: GKMModel,
    chamber: Chamber,
    slope: Rational | None = None,
    refinement: str | Sequence[str] = "ample",
    progress: Progress | None = None,
) -> StabMatrix:
    """Матрица стабильных огибающих для всех неподвижных точек.

    Args:
        model: GKM-модель с поляризацией.
        chamber: камера.
        slope: множитель расслоения наклона; None — ``slope_coeff`` точек.
        refinement: стратегия линейного пополнения порядка (см. AmpleOrder.refine).
        progress: обёртка над итератором столбцов (например, tqdm).

    Returns:
        StabMatrix
    """
    if not model.has_polarization:
        raise ModelError("stable envelopes need a polarization at every fixed point")
    order = ample_order(model, chamber)
    refined = order.refine(refinement)
    targets: Iterable[str] = reversed(refined)
    if progress is not None:
        targets = progress(targets)
    entries: dict[tuple[str, str], LaurentPoly] = {}
    warnings: list[str] = []
    for i in targets:
        column, notes = compute_column(model, chamber, i, slope, refined, order)
        for j, f in column.items():
            entries[(j, i)] = f
        warnings.extend(notes)
    return StabMatrix(
        model=model,
        chamber=chamber,
        slope=as_fraction(slope) if slope is not None else None,
        order=refined,
        entries=entries,
        warnings=warnings,
    )


# -----------------------------------------------------------------------------
# Проверка
# -----------------------------------------------------------------------------
def verify_stab(S: StabMatrix) -> VerificationReport:
    """Треугольность, диагональ, окна Ньютона (с ранг-1 проекциями), GKM-делимость."""
    model, chamber = S.model, S.chamber
    torus = model.torus
    order = ample_order(model, chamber)
    data = attracting_decomposition(model, chamber)
    names = model.names
    failures: list[str] = []
    checks = {"triangular": True, "diagonal": True, "window": True, "divisibility": True}

    for (j, i), f in S.entries.items():
        if not f.is_zero() and not order.leq(j, i):
            checks["triangular"] = False
            failures.append(f"triangular: nonzero entry at {j} <- {i}")

    for i in names:
        if S.entry(i, i) != normalization(model, i, chamber):
            checks["diagonal"] = False
            failures.append(f"diagonal: entry at {i} differs from the normalization")

    cochars = rank_one_cocharacters(model.a_rank)
    for i in names:
        for j in order.below(i):
            f = S.entry(j, i)
            window = degree_polytope(model, j, i, chamber, S.slope)
            if not window.contains(f):
                checks["window"] = False
                failures.append(f"window: newton polytope at {j} <- {i} leaves the window")
            for sigma in window.projection_violations(f, cochars):
                checks["window"] = False
                failures.append(f"window: projection to {list(sigma)} at {j} <- {i}")

    for i in names:
        for edge in model.edges:
            tp, _ = model.edge_tangents(edge)
            diff = S.entry(edge.source, i) - S.entry(edge.target, i)
            if not diff.divisible_by_binomial(tp):
                checks["divisibility"] = False
                failures.append(f"divisibility: column {i} along edge {edge.source}-{edge.target}")
        for j in order.below(i):
            edge_tangents = {t for _, _, t in model.edges_at(j)}
            f = S.entry(j, i)
            for w in data[j].n_neg:
                if w not in edge_tangents and not f.divisible_by_binomial(w):
                    checks["divisibility"] = False
                    failures.append(f"divisibility: {j} <- {i} along {torus.format_weight(w)}")
    return VerificationReport(checks, failures)


def restrict_stab(S: StabMatrix, face: Sequence[int]) -> StabMatrix:
    """Старшие члены всех элементов при a → 0 вдоль кохарактера грани."""
    face = tuple(int(x) for x in face)
    if len(face) != S.model.a_rank:
        raise ModelError(f"face cocharacter must have {S.model.a_rank} entries")
    entries = {k: leading_term(f, face) for k, f in S.entries.items()}
    return replace(S, entries=entries, warnings=list(S.warnings), face=face)
