# APPLICATION/stab_core/gkm_model.py

"""
GKM-модель и вычисления в одной неподвижной точке.

Модель: изолированные неподвижные точки (касательные веса, поляризация,
вес ампл. расслоения, вес расслоения наклона) и рёбра — одномерные орбиты.
Всё остальное — функции от (модель, камера): притягивающие части, δυ,
нормировка, окно степеней, предельная поляризация, резонансы.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping, Sequence

import networkx as nx
import sympy as sp

from stab_core.errors import GeometryError, ModelError, ResonanceError
from stab_core.exact_algebra import (
    LaurentPoly,
    Rational,
    ThetaClass,
    Torus,
    Weight,
    as_fraction,
    koszul_from_weights,
    monomial_sqrt,
    newton_polytope,
    restrict_to_subtorus,
    theta_degree,
)
from stab_core.lattice_geometry import (
    Chamber,
    LatticePolytope,
    ShiftedPolytope,
    ample_order,
    chamber_split,
    dot,
    kernel_basis,
    primitive_vector,
)


# -----------------------------------------------------------------------------
# Модель
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class FixedPoint:
    """Неподвижная точка F и данные в ней.

    ``slope`` — вес целого расслоения, кратным которого задан наклон
    (по умолчанию — ампл. вес); ``slope_coeff`` — рациональный множитель.
    """

    name: str
    tangent: tuple[Weight, ...]
    ample: Weight
    polarization: tuple[Weight, ...] | None = None
    slope: Weight | None = None
    slope_coeff: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tangent", tuple(self.tangent))
        if self.polarization is not None:
            object.__setattr__(self, "polarization", tuple(self.polarization))
        object.__setattr__(self, "slope_coeff", as_fraction(self.slope_coeff))

    @property
    def slope_bundle(self) -> Weight:
        return self.slope if self.slope is not None else self.ample

    def slope_weight(self, slope: Rational | None = None) -> Weight:
        """Вес дробного расслоения наклона: s·L, s = ``slope`` или ``slope_coeff``."""
        s = self.slope_coeff if slope is None else as_fraction(slope)
        return self.slope_bundle.scale(s)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    weight: Weight


@dataclass(frozen=True)
class GKMModel:
    torus: Torus
    fixed_points: tuple[FixedPoint, ...]
    edges: tuple[Edge, ...] = ()
    name: str = "model"

    def __post_init__(self) -> None:
        object.__setattr__(self, "fixed_points", tuple(self.fixed_points))
        object.__setattr__(self, "edges", tuple(self.edges))
        self.validate()

    # --- доступ ---------------------------------------------------------------
    @property
    def names(self) -> list[str]:
        return [p.name for p in self.fixed_points]

    def point(self, name: str) -> FixedPoint:
        for p in self.fixed_points:
            if p.name == name:
                return p
        raise ModelError(f"unknown fixed point {name!r}")

    @property
    def has_polarization(self) -> bool:
        return all(p.polarization is not None for p in self.fixed_points)

    @property
    def a_rank(self) -> int:
        return len(self.torus.a_names)

    def tangent_at(self, name: str, w: Weight) -> Weight:
        """Касательный вес в точке ``name`` вдоль ребра с весом ``w``.

        Сначала ищем ±w точно, затем — единственный вес с A-частью ±w_A.
        """
        p = self.point(name)
        exact = [t for t in p.tangent if t == w or t == -w]
        if exact:
            return exact[0]
        wa = self.torus.project_a(w)
        neg = tuple(-x for x in wa)
        loose = [t for t in p.tangent if self.torus.project_a(t) in (wa, neg)]
        if len(loose) != 1:
            raise ModelError(
                f"edge weight {self.torus.format_weight(w)} does not match a unique tangent weight at {name}"
            )
        return loose[0]

    def edge_tangents(self, edge: Edge) -> tuple[Weight, Weight]:
        return self.tangent_at(edge.source, edge.weight), self.tangent_at(edge.target, edge.weight)

    def edges_at(self, name: str) -> list[tuple[Edge, str, Weight]]:
        """Рёбра из точки: (ребро, другой конец, касательный вес в ``name``)."""
        out = []
        for e in self.edges:
            if e.source == name:
                out.append((e, e.target, self.tangent_at(name, e.weight)))
            elif e.target == name:
                out.append((e, e.source, self.tangent_at(name, e.weight)))
        return out

    # --- проверка -------------------------------------------------------------
    def validate(self) -> None:
        """Raises:
        ModelError: повтор имён, неизолированная точка, поляризация не даёт
            T^{1/2} + (T^{1/2})^∨ = TX на A, ребро без касательного веса.
        """
        if not self.fixed_points:
            raise ModelError("model has no fixed points")
        names = self.names
        dup = [n for n, k in Counter(names).items() if k > 1]
        if dup:
            raise ModelError(f"duplicate fixed point names: {dup}")
        fmt = self.torus.format_weight
        for p in self.fixed_points:
            for w in (*p.tangent, p.ample, p.slope_bundle, *(p.polarization or ())):
                if len(w) != self.torus.rank:
                    raise ModelError(f"weight of wrong length at {p.name}")
            for w in p.tangent:
                if not any(self.torus.project_a(w)):
                    raise ModelError(f"fixed point {p.name} is not isolated: tangent weight {fmt(w)}")
            if p.polarization is not None:
                half = Counter(self.torus.project_a(w) for w in p.polarization)
                doubled = half + Counter(tuple(-x for x in k) for k in half.elements())
                full = Counter(self.torus.project_a(w) for w in p.tangent)
                if doubled != full:
                    raise ModelError(f"polarization at {p.name} does not split the tangent space on A")
        for e in self.edges:
            if e.source not in names or e.target not in names:
                raise ModelError(f"edge {e.source}-{e.target} has an unknown endpoint")
            if e.source == e.target:
                raise ModelError(f"edge {e.source}-{e.target} is a loop")
            if not any(self.torus.project_a(e.weight)):
                raise ModelError(f"edge {e.source}-{e.target} has weight trivial on A")
            self.edge_tangents(e)


# -----------------------------------------------------------------------------
# Притягивающие и отталкивающие части
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class PointAttracting:
    n_pos: tuple[Weight, ...]
    n_neg: tuple[Weight, ...]
    pol_pos: tuple[Weight, ...]
    pol_neg: tuple[Weight, ...]
    delta_upsilon: ThetaClass | None


@dataclass(frozen=True)
class AttractingData:
    chamber: Chamber
    points: dict[str, PointAttracting]

    def __getitem__(self, name: str) -> PointAttracting:
        return self.points[name]


def _split_point(model: GKMModel, p: FixedPoint, chamber: Chamber) -> PointAttracting:
    torus = model.torus
    split = chamber_split(p.tangent, chamber)
    if p.polarization is None:
        return PointAttracting(tuple(split.attracting), tuple(split.repelling), (), (), None)
    pol = chamber_split(p.polarization, chamber)
    n_neg = ThetaClass.from_weights(torus, split.repelling)
    delta = (
        n_neg
        - ThetaClass.from_weights(torus, pol.repelling)
        - ThetaClass.from_weights(torus, pol.attracting).dual()
    )
    if delta.restricted_counts(torus.a_names):
        raise ModelError(f"inconsistent polarization at {p.name}: delta upsilon is not trivial on A")
    return PointAttracting(
        n_pos=tuple(split.attracting),
        n_neg=tuple(split.repelling),
        pol_pos=tuple(pol.attracting),
        pol_neg=tuple(pol.repelling),
        delta_upsilon=delta,
    )


def attracting_decomposition(model: GKMModel, chamber: Chamber) -> AttractingData:
    """N_{>0}, N_{<0}, T^{1/2}_{>0}, T^{1/2}_{<0} и δυ = N_{<0} − T^{1/2}_{<0} − (T^{1/2}_{>0})^∨.

    Raises:
        GeometryError: камера не генерична для касательных весов.
        ModelError: δυ не обнуляется на A ("inconsistent polarization").
    """
    return AttractingData(chamber, {p.name: _split_point(model, p, chamber) for p in model.fixed_points})


# -----------------------------------------------------------------------------
# Притягивающие расслоения и препятствие
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class Obstruction:
    pair: tuple[str, str]
    direction: tuple[int, ...]

    def describe(self) -> str:
        return f"{self.pair[0]} and {self.pair[1]} disagree on the subtorus orthogonal to {list(self.direction)}"


@dataclass
class AttractiveReport:
    chamber: Chamber
    pointwise_failures: list[str] = field(default_factory=list)
    obstructions: list[Obstruction] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.pointwise_failures and not self.obstructions


def subtorus_degree(c: ThetaClass, cocharacters: Sequence[Sequence[int]]) -> sp.ImmutableMatrix:
    """Форма deg_A Θ(c), ограниченная на решётку кохарактеров подтора A′ (столбцы B): BᵀQB."""
    q = theta_degree(c)
    if not cocharacters:
        return sp.ImmutableMatrix(0, 0, [])
    B = sp.Matrix([list(col) for col in cocharacters]).T
    return sp.ImmutableMatrix(B.T * q * B)


def _edge_directions(model: GKMModel) -> dict[tuple[int, ...], list[Edge]]:
    groups: dict[tuple[int, ...], list[Edge]] = {}
    for e in model.edges:
        nu = primitive_vector(model.torus.project_a(e.weight))
        if next(x for x in nu if x) < 0:
            nu = tuple(-x for x in nu)
        groups.setdefault(nu, []).append(e)
    return groups


def _components(names: Iterable[str], edges: Iterable[Edge]) -> list[list[str]]:
    g = nx.Graph()
    for e in edges:
        g.add_edge(e.source, e.target)
    order = {n: i for i, n in enumerate(names)}
    return [sorted(c, key=order.__getitem__) for c in nx.connected_components(g)]


def attractive_check(
    model: GKMModel,
    chamber: Chamber,
    bundle: Mapping[str, ThetaClass] | None = None,
) -> AttractiveReport:
    """Проверить, что 𝒮 притягивающее для камеры.

    В каждой точке deg_A 𝒮 = deg_A Θ(N_{<0}); для каждого направления ребра ν
    и подтора A′ = ker ν формы deg Θ(N_{<0})|_{A′} должны совпадать вдоль
    компонент X^{A′}. По умолчанию 𝒮 = Θ(T^{1/2}); без поляризации
    поточечная часть пропускается (подходящее 𝒮_F всегда есть).
    """
    data = attracting_decomposition(model, chamber)
    torus = model.torus
    report = AttractiveReport(chamber)
    neg = {n: ThetaClass.from_weights(torus, data[n].n_neg) for n in model.names}

    if bundle is None and model.has_polarization:
        bundle = {p.name: ThetaClass.from_weights(torus, p.polarization) for p in model.fixed_points}
    if bundle is not None:
        for n in model.names:
            if n not in bundle:
                raise ModelError(f"bundle has no restriction to {n}")
            if theta_degree(bundle[n]) != theta_degree(neg[n]):
                report.pointwise_failures.append(n)

    for nu, edges in sorted(_edge_directions(model).items()):
        kernel = kernel_basis([nu], model.a_rank)
        for comp in _components(model.names, edges):
            forms = {n: subtorus_degree(neg[n], kernel) for n in comp}
            base = comp[0]
            for other in comp[1:]:
                if forms[other] != forms[base]:
                    report.obstructions.append(Obstruction((base, other), nu))
    return report


# -----------------------------------------------------------------------------
# Нормировка
# -----------------------------------------------------------------------------
def _det(weights: Iterable[Weight], torus: Torus) -> Weight:
    total = torus.zero()
    for w in weights:
        total = total + w
    return total


def normalization(model: GKMModel, name: str, chamber: Chamber) -> LaurentPoly:
    """(−1)^{rk T^{1/2}_{>0}} (det N_{<0} / det T^{1/2})^{1/2} Π_{w ∈ N_{<0}} (1 − x^{−w}).

    Raises:
        ModelError: в точке нет поляризации.
        AlgebraError: отношение определителей не квадрат ("non-square determinant ratio").
    """
    p = model.point(name)
    if p.polarization is None:
        raise ModelError(f"normalization at {name} needs a polarization")
    torus = model.torus
    data = _split_point(model, p, chamber)
    root = monomial_sqrt(torus, _det(data.n_neg, torus) - _det(p.polarization, torus))
    sign = -1 if len(data.pol_pos) % 2 else 1
    return koszul_from_weights(torus, data.n_neg).scale_monomial(root, sign)


# -----------------------------------------------------------------------------
# Окно степеней
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class StabDegreeWindow:
    """deg_A Stab(F_i)|_{F_j} ⊆ Δ + λ, Δ = Newton(Λ•(T^{1/2})^∨|_{F_j})."""

    source: str
    target: str
    base: LatticePolytope
    shift: tuple[Fraction, ...]
    koszul: LaurentPoly
    koszul_shift: tuple[Fraction, ...]

    @property
    def window(self) -> ShiftedPolytope:
        return ShiftedPolytope(self.base, self.shift)

    @property
    def generic(self) -> bool:
        return self.window.is_generic()

    def contains(self, f: LaurentPoly) -> bool:
        """Newton(f) ⊆ Δ + λ; нулевой класс допустим всегда."""
        return all(self.window.contains(e) for e in f.a_support())

    def projection_violations(self, f: LaurentPoly, cocharacters: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
        """Ранг-1 подторы, вдоль которых ограничение f выходит за проекцию окна."""
        torus = f.torus
        bad = []
        for sigma in cocharacters:
            line = Torus(("t",), ("t",))
            row = [0] * torus.rank
            for i, s in zip(torus.a_indices, sigma):
                row[i] = s
            g = restrict_to_subtorus(f, [row], line)
            lo, hi = self.window.as_polytope().support(sigma)
            if any(not lo <= e[0] <= hi for e in g.a_support()):
                bad.append(tuple(sigma))
        return bad


def rank_one_cocharacters(a_rank: int) -> list[tuple[int, ...]]:
    """Координатные кохарактеры e_i и разности e_i − e_j."""
    out = []
    for i in range(a_rank):
        out.append(tuple(1 if k == i else 0 for k in range(a_rank)))
    for i in range(a_rank):
        for j in range(i + 1, a_rank):
            out.append(tuple(1 if k == i else -1 if k == j else 0 for k in range(a_rank)))
    return out


def degree_polytope(
    model: GKMModel,
    source: str,
    target: str,
    chamber: Chamber,
    slope: Rational | None = None,
) -> StabDegreeWindow:
    """Окно Δ + λ для Stab(F_target)|_{F_source}, λ = s·(L_{F_j} − L_{F_i}) на A.

    Для интерполяции удобнее та же область в виде Newton(Λ•N_{<0}^∨) + λ′,
    λ′ = λ − Σ_{w ∈ T^{1/2}_{>0}} w_A: она хранится в ``koszul``/``koszul_shift``.

    Raises:
        GeometryError: F_j ≰ F_i ("incomparable pair").
        ModelError: в F_j нет поляризации.
    """
    order = ample_order(model, chamber)
    if not order.leq(source, target):
        raise GeometryError(f"incomparable pair: {source} is not below {target}")
    p = model.point(source)
    if p.polarization is None:
        raise ModelError(f"degree window at {source} needs a polarization")
    torus = model.torus
    data = _split_point(model, p, chamber)
    base = newton_polytope(koszul_from_weights(torus, p.polarization))
    lam = torus.project_a(p.slope_weight(slope) - model.point(target).slope_weight(slope))
    koszul = koszul_from_weights(torus, data.n_neg)
    pos = torus.project_a(_det(data.pol_pos, torus))
    return StabDegreeWindow(
        source=source,
        target=target,
        base=base,
        shift=lam,
        koszul=koszul,
        koszul_shift=tuple(a - b for a, b in zip(lam, pos)),
    )


# -----------------------------------------------------------------------------
# Предельная поляризация
# -----------------------------------------------------------------------------
def _check_face(model: GKMModel, chamber: Chamber, face: Sequence[int]) -> None:
    torus = model.torus
    for p in model.fixed_points:
        for w in p.tangent:
            s = dot(torus.project_a(w), face)
            if s and (s > 0) != (chamber.pair(w) > 0):
                raise GeometryError(f"cocharacter {list(face)} is not on a face of {chamber.label}")


def limit_polarization(V: ThetaClass, face: Sequence[int]) -> ThetaClass:
    """𝒱_lim = 𝒱_{≥0} − (𝒱^∨)_{<0} при a → 0 вдоль ``face``.

    (𝒱^∨)_{<0} = (𝒱_{>0})^∨, поэтому 𝒱_lim = 𝒱_{=0} + δ𝒱 − δ𝒱^∨ с δ𝒱 = 𝒱_{>0}.
    """
    torus = V.torus
    counts: Counter = Counter()
    for w, n in V.counts.items():
        s = dot(torus.project_a(w), face)
        if s >= 0:
            counts[w] += n
        if s > 0:
            counts[-w] -= n
    return ThetaClass(torus, counts)


def leading_term(p: LaurentPoly, face: Sequence[int]) -> LaurentPoly:
    """Старшая часть при a → 0 вдоль кохарактера: члены с минимальным ⟨w_A, σ′⟩."""
    if p.is_zero():
        return p
    torus = p.torus
    pairs = {w: dot(torus.project_a(w), face) for w in p.terms}
    low = min(pairs.values())
    return LaurentPoly(torus, {w: c for w, c in p.terms.items() if pairs[w] == low})


@dataclass(frozen=True)
class LimitCheck:
    point: str
    leading: LaurentPoly
    from_limit: LaurentPoly
    parameter_shift: Weight | None

    @property
    def ok(self) -> bool:
        return self.parameter_shift is not None


def limit_polarization_check(model: GKMModel, chamber: Chamber, face: Sequence[int]) -> list[LimitCheck]:
    """Сравнить старший член нормировки вдоль грани с нормировкой на X^{A′} для 𝒱_lim.

    Совпадение — с точностью до монома от параметров (знак и A-часть равны).
    """
    _check_face(model, chamber, face)
    torus = model.torus
    out = []
    for p in model.fixed_points:
        if p.polarization is None:
            raise ModelError(f"limit check at {p.name} needs a polarization")
        lead = leading_term(normalization(model, p.name, chamber), face)
        v_lim = limit_polarization(ThetaClass.from_weights(torus, p.polarization), face)
        inner = [w for w in chamber_split(p.tangent, chamber).repelling if dot(torus.project_a(w), face) == 0]
        det_lim = torus.zero()
        rank_pos = 0
        for w, n in v_lim.counts.items():
            det_lim = det_lim + w.scale(n)
            if chamber.pair(w) > 0:
                rank_pos += n
        root = monomial_sqrt(torus, _det(inner, torus) - det_lim)
        limit_norm = koszul_from_weights(torus, inner).scale_monomial(root, -1 if rank_pos % 2 else 1)
        ratio = lead.monomial_ratio(limit_norm)
        shift = None
        if ratio is not None and ratio[0] == 1 and not any(torus.project_a(ratio[1])):
            shift = ratio[1]
        out.append(LimitCheck(p.name, lead, limit_norm, shift))
    return out


# -----------------------------------------------------------------------------
# Резонансы
# -----------------------------------------------------------------------------
def _mixed_block(c: ThetaClass, param: str) -> tuple[Fraction, ...]:
    """Смешанный блок (A, параметр) формы deg Θ(c): Σ n_μ μ_A μ_param."""
    torus = c.torus
    k = torus.index(param)
    total = [Fraction(0)] * len(torus.a_names)
    for w, n in c.counts.items():
        if w.exps[k] == 0:
            continue
        for i, x in enumerate(torus.project_a(w)):
            total[i] += n * x * w.exps[k]
    return tuple(total)


def _proportionality(psi: Sequence[Fraction], chi: Sequence[Fraction]) -> Fraction | None:
    """m с ψ = m·χ, иначе None."""
    m = None
    for a, b in zip(psi, chi):
        if b == 0:
            if a != 0:
                return None
            continue
        r = Fraction(a) / b
        if m is None:
            m = r
        elif r != m:
            return None
    return m if m is not None else Fraction(0)


def resonant_locus(model: GKMModel, chamber: Chamber) -> list[Weight]:
    """Значения z, при которых 𝒮 = Θ(T^{1/2}) ⊗ 𝒰(L, z) тривиально вдоль слоёв 𝓔_A.

    Для каждой пары F_j < F_i: χ — разность A-весов L (смешанный (A, z)-блок
    степени 𝒰), ψ_p — разность смешанных (A, p)-блоков deg Θ(δυ) для каждого
    параметра p. Если ψ_p = m_p·χ при всех p, пара даёт z = Π p^{m_p};
    z = 1 добавляется, как только найдена хотя бы одна такая пара.

    Returns:
        list[Weight]: характеры с нулевой A-частью, по возрастанию.

    Raises:
        ResonanceError: 𝒮 не притягивающее.
    """
    if not model.has_polarization:
        raise ModelError("resonant locus needs a polarization")
    report = attractive_check(model, chamber)
    if not report.ok:
        raise ResonanceError("resonant locus needs an attractive bundle")
    data = attracting_decomposition(model, chamber)
    order = ample_order(model, chamber)
    torus = model.torus
    params = torus.param_names
    found: set[Weight] = set()
    for j, i in order.relations():
        chi = tuple(
            a - b
            for a, b in zip(
                torus.project_a(model.point(j).slope_bundle),
                torus.project_a(model.point(i).slope_bundle),
            )
        )
        z = torus.zero()
        for param in params:
            psi = tuple(
                a - b
                for a, b in zip(
                    _mixed_block(data[j].delta_upsilon, param),
                    _mixed_block(data[i].delta_upsilon, param),
                )
            )
            m = _proportionality(psi, chi)
            if m is None:
                break
            z = z + torus.coordinate(param, m)
        else:
            found.add(z)
    if found:
        found.add(torus.zero())
    return sorted(found, key=lambda w: tuple(w.exps[torus.index(p)] for p in params))


# -----------------------------------------------------------------------------
# Встроенные модели
# -----------------------------------------------------------------------------
def default_slope(n: int) -> Fraction:
    """Генерический наклон 1/(2·n!) для семейств на n точках."""
    return Fraction(1, 2 * factorial(n))


def tstar_pn(n: int) -> GKMModel:
    """T*P^{n−1}: точки F_k, касательные a_i/a_k и a_k/(h·a_i), T^{1/2} = {a_i/a_k}."""
    if n < 2:
        raise ModelError("tstar-pn needs n >= 2")
    a = tuple(f"a{k}" for k in range(1, n + 1))
    torus = Torus(a + ("h",), a)
    h = torus.coordinate("h")
    x = [torus.coordinate(name) for name in a]
    points = []
    for k in range(n):
        base = tuple(x[i] - x[k] for i in range(n) if i != k)
        fibre = tuple(x[k] - x[i] - h for i in range(n) if i != k)
        points.append(
            FixedPoint(f"F{k + 1}", base + fibre, ample=-x[k], polarization=base, slope_coeff=default_slope(n))
        )
    edges = tuple(Edge(f"F{i + 1}", f"F{k + 1}", x[i] - x[k]) for i in range(n) for k in range(i + 1, n))
    return GKMModel(torus, tuple(points), edges, name=f"tstar-p{n - 1}")


def pn(n: int) -> GKMModel:
    """P^{n−1} с максимальным тором PGL(n), без поляризации."""
    if n < 2:
        raise ModelError("pn needs n >= 2")
    a = tuple(f"a{k}" for k in range(1, n + 1))
    torus = Torus(a, a)
    x = [torus.coordinate(name) for name in a]
    points = [
        FixedPoint(f"F{k + 1}", tuple(x[i] - x[k] for i in range(n) if i != k), ample=-x[k])
        for k in range(n)
    ]
    edges = tuple(Edge(f"F{i + 1}", f"F{k + 1}", x[i] - x[k]) for i in range(n) for k in range(i + 1, n))
    return GKMModel(torus, tuple(points), edges, name=f"p{n - 1}")


BUILTINS = {"tstar-pn": tstar_pn, "pn": pn}


def builtin(kind: str, n: int) -> GKMModel:
    try:
        factory = BUILTINS[kind]
    except KeyError:
        raise ModelError(f"unknown builtin model {kind!r}; expected one of {sorted(BUILTINS)}") from None
    return factory(n)
