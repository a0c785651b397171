# APPLICATION/stab_core/degeneration.py

"""
Узловое вырождение: выпуклая функция 𝕢, периодические веера и двойственные
разбиения, этажи узловой K-теории, усечённые тэта-ряды Тейта и эллиптическая
огибающая ранга 1 вместе с её пределом при q → 0.

Страты периодического расположения {μ_i(x) ∈ Z} перечисляются по сетке
(1/K)Z^r в фундаментальной области [0,1)^r: барицентр вершин любой клетки
лежит на такой сетке, если K = lcm(1..r+1)·D, где D — НОК модулей r×r миноров.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Mapping, Sequence

import networkx as nx
import sympy as sp

from stab_core.errors import DegenerationError, ModelError, ResonanceError
from stab_core.exact_algebra import (
    LaurentPoly,
    Rational,
    TruncatedQSeries,
    Torus,
    Weight,
    as_fraction,
    koszul_from_weights,
    lcm_of_denominators,
)
from stab_core.gkm_model import GKMModel, normalization, resonant_locus
from stab_core.lattice_geometry import (
    Chamber,
    LatticePolytope,
    ample_order,
    chamber_split,
    dot,
    lattice_basis,
)
from stab_core.envelope import StabMatrix

Point = tuple[Fraction, ...]

DEFAULT_TRUNCATION = 20


# -----------------------------------------------------------------------------
# 𝕢 и 𝒬
# -----------------------------------------------------------------------------
def qfun(x: Rational) -> Fraction:
    """𝕢(x) = x⌊x⌋ − ½⌊x⌋(⌊x⌋+1): кусочно-линейна, 0 на [0, 1], k(k−1)/2 в целых k."""
    x = as_fraction(x)
    k = math.floor(x)
    return x * k - Fraction(k * (k + 1), 2)


def legendre_transform(alpha: Rational, window: tuple[Rational, Rational] | None = None) -> Fraction:
    """max_{x ∈ window} (αx − 𝕢(x)); максимум достигается в целой точке или на краю окна."""
    alpha = as_fraction(alpha)
    if window is None:
        bound = abs(alpha) + 2
        window = (-bound, bound)
    lo, hi = as_fraction(window[0]), as_fraction(window[1])
    if lo > hi:
        raise DegenerationError("empty window for the Legendre transform")
    candidates = {lo, hi} | {Fraction(k) for k in range(math.ceil(lo), math.floor(hi) + 1)}
    return max(alpha * x - qfun(x) for x in candidates)


def gram_matrix(
    weights: Sequence[Sequence[int]],
    multiplicities: Sequence[int] | None = None,
) -> sp.ImmutableMatrix:
    """Σ m_i μ_i μ_iᵀ — матрица отображения σ ↦ σ^∨.

    Raises:
        DegenerationError: веса не порождают 𝔞* ("degenerate 𝒬").
    """
    if not weights:
        raise DegenerationError("degenerate 𝒬: no weights")
    mults = list(multiplicities) if multiplicities is not None else [1] * len(weights)
    r = len(weights[0])
    G = sp.zeros(r, r)
    for mu, m in zip(weights, mults):
        v = sp.Matrix(list(mu))
        G += m * v * v.T
    if G.det() == 0:
        raise DegenerationError("degenerate 𝒬: weights do not span")
    return sp.ImmutableMatrix(G)


@dataclass(frozen=True)
class PeriodicConvexFunction:
    """𝒬(x) = Σ m_i 𝕢(μ_i(x)) + λ(x) на 𝔞 = R^r."""

    weights: tuple[tuple[int, ...], ...]
    multiplicities: tuple[int, ...]
    shift: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        weights = tuple(tuple(int(c) for c in mu) for mu in self.weights)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "multiplicities", tuple(int(m) for m in self.multiplicities))
        if not weights:
            raise DegenerationError("degenerate 𝒬: no weights")
        r = len(weights[0])
        if any(len(mu) != r for mu in weights):
            raise DegenerationError("weights have different lengths")
        if len(self.multiplicities) != len(weights) or any(m <= 0 for m in self.multiplicities):
            raise DegenerationError("multiplicities must be positive, one per weight")
        shift = tuple(as_fraction(x) for x in self.shift) or (Fraction(0),) * r
        if len(shift) != r:
            raise DegenerationError("shift has wrong dimension")
        object.__setattr__(self, "shift", shift)

    @classmethod
    def from_weights(cls, weights: Iterable[Sequence[int]], shift: Sequence[Rational] = ()) -> "PeriodicConvexFunction":
        counts = Counter(tuple(int(c) for c in mu) for mu in weights)
        items = sorted(counts.items())
        return cls(tuple(mu for mu, _ in items), tuple(m for _, m in items), tuple(shift))

    @property
    def rank(self) -> int:
        return len(self.weights[0])

    def __call__(self, x: Sequence[Rational]) -> Fraction:
        x = [as_fraction(c) for c in x]
        value = dot(self.shift, x)
        for mu, m in zip(self.weights, self.multiplicities):
            value += m * qfun(dot(mu, x))
        return value

    def gram(self) -> sp.ImmutableMatrix:
        return gram_matrix(self.weights, self.multiplicities)

    def dual(self, sigma: Sequence[int]) -> Point:
        """σ^∨ = Gσ."""
        v = self.gram() * sp.Matrix(list(sigma))
        return tuple(as_fraction(c) for c in v)

    def difference_identity(self, x: Sequence[Rational], sigma: Sequence[int]) -> bool:
        """𝒬(x+σ) − 𝒬(x) = σ^∨(x) + 𝒬(σ)."""
        x = [as_fraction(c) for c in x]
        moved = [a + b for a, b in zip(x, sigma)]
        return self(moved) - self(x) == dot(self.dual(sigma), x) + self(sigma)

    def subdifferential(self, x: Sequence[Rational]) -> tuple[LatticePolytope, list[tuple[int, ...]]]:
        """∂𝒬(x): зоноэдр из отрезков m_i μ_i [c−1, c] по μ_i(x) = c ∈ Z; плюс генераторы."""
        base = list(self.shift)
        segments: list[tuple[int, ...]] = []
        for mu, m in zip(self.weights, self.multiplicities):
            v = dot(mu, x)
            k = int(v) - 1 if v.denominator == 1 else math.floor(v)
            base = [b + m * k * c for b, c in zip(base, mu)]
            if v.denominator == 1:
                segments.append(tuple(m * c for c in mu))
        points = set()
        for chosen in itertools.product((0, 1), repeat=len(segments)):
            p = list(base)
            for flag, seg in zip(chosen, segments):
                if flag:
                    p = [a + b for a, b in zip(p, seg)]
            points.add(tuple(p))
        return LatticePolytope(points), segments


# -----------------------------------------------------------------------------
# Разбиения
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class Stratum:
    """Страт периодического расположения по модулю Z^r.

    ``vertices`` — вершины замыкания, сдвинутые так, что лекс. минимальная
    вершина лежит в [0,1)^r; ``sample`` — точка относительной внутренности
    в [0,1)^r; ``equations`` — (номер веса, целое значение) на страте.
    """

    dim: int
    vertices: tuple[Point, ...]
    sample: Point
    equations: tuple[tuple[int, int], ...]

    @property
    def key(self) -> tuple:
        return (self.dim, self.vertices)


@dataclass(frozen=True)
class Tile:
    stratum: int
    polytope: LatticePolytope
    dim: int
    volume: Fraction | None


@dataclass
class Tessellation:
    function: PeriodicConvexFunction
    strata: list[Stratum]
    tiles: list[Tile]
    adjacency: list[tuple[int, int]]
    grid: int
    base_change: int

    def dimension_counts(self) -> dict[int, int]:
        return dict(sorted(Counter(s.dim for s in self.strata).items()))

    def total_volume(self) -> Fraction:
        return sum((t.volume for t in self.tiles if t.volume is not None), Fraction(0))

    def dual_vertex_count(self) -> int:
        """Вершины двойственного разбиения по модулю решётки GZ^r."""
        G = self.function.gram()
        Ginv = G.inv()
        seen = set()
        for t in self.tiles:
            if t.dim != self.function.rank:
                continue
            for v in t.polytope.vertices:
                c = Ginv * sp.Matrix([sp.Rational(x.numerator, x.denominator) for x in v])
                frac = sp.Matrix([e - sp.floor(e) for e in c])
                rep = G * frac
                seen.add(tuple(as_fraction(e) for e in rep))
        return len(seen)

    def index_of(self, sample: Sequence[Rational]) -> int:
        key = _stratum_key(self.function, tuple(as_fraction(c) for c in sample))
        for k, s in enumerate(self.strata):
            if s.key == key:
                return k
        raise DegenerationError(f"no stratum through {list(sample)}")


def _signature(Q: PeriodicConvexFunction, x: Point) -> tuple[tuple[bool, int], ...]:
    sig = []
    for mu in Q.weights:
        v = dot(mu, x)
        sig.append((True, int(v)) if v.denominator == 1 else (False, math.floor(v)))
    return tuple(sig)


def _in_closure(Q: PeriodicConvexFunction, sig, y: Sequence[Fraction]) -> bool:
    for mu, (eq, k) in zip(Q.weights, sig):
        v = dot(mu, y)
        if eq and v != k:
            return False
        if not eq and not k <= v <= k + 1:
            return False
    return True


@lru_cache(maxsize=None)
def _cell(Q: PeriodicConvexFunction, sig) -> tuple[int, tuple[Point, ...]]:
    """Размерность клетки с данной сигнатурой и вершины её замыкания."""
    r = Q.rank
    hyper = []
    eq_rows = []
    for mu, (eq, k) in zip(Q.weights, sig):
        if eq:
            hyper.append((mu, k))
            eq_rows.append(list(mu))
        else:
            hyper.extend([(mu, k), (mu, k + 1)])
    vertices = set()
    for combo in itertools.combinations(hyper, r):
        A = sp.Matrix([list(mu) for mu, _ in combo])
        if A.det() == 0:
            continue
        y = A.LUsolve(sp.Matrix([c for _, c in combo]))
        point = tuple(as_fraction(sp.Rational(v)) for v in y)
        if _in_closure(Q, sig, point):
            vertices.add(point)
    dim = r - (sp.Matrix(eq_rows).rank() if eq_rows else 0)
    return dim, tuple(sorted(vertices))


def _canonical(vertices: Sequence[Point]) -> tuple[Point, ...]:
    low = min(vertices)
    t = [math.floor(c) for c in low]
    return tuple(sorted(tuple(c - s for c, s in zip(v, t)) for v in vertices))


def _stratum_key(Q: PeriodicConvexFunction, x: Point) -> tuple:
    dim, vertices = _cell(Q, _signature(Q, x))
    return (dim, _canonical(vertices))


def _minors_lcm(weights: Sequence[Sequence[int]], r: int) -> int:
    dets = []
    for combo in itertools.combinations(weights, r):
        d = abs(int(sp.Matrix([list(mu) for mu in combo]).det()))
        if d:
            dets.append(d)
    return reduce(math.lcm, dets, 1)


def _zonotope_volume(segments: Sequence[Sequence[int]], r: int) -> Fraction:
    total = 0
    for combo in itertools.combinations(segments, r):
        total += abs(int(sp.Matrix([list(s) for s in combo]).det()))
    return Fraction(total)


def legendre_dual_tessellation(Q: PeriodicConvexFunction) -> Tessellation:
    """Страты {μ_i(x) ∈ Z} в [0,1)^r и двойственные плитки ∂𝒬 с отношением примыкания.

    Примыкание (η, η′) означает, что сдвиг η лежит в замыкании η′.
    """
    Q.gram()
    r = Q.rank
    K = reduce(math.lcm, range(1, r + 2), 1) * _minors_lcm(Q.weights, r)
    found: dict[tuple, Stratum] = {}
    for idx in itertools.product(range(K), repeat=r):
        x = tuple(Fraction(i, K) for i in idx)
        sig = _signature(Q, x)
        dim, vertices = _cell(Q, sig)
        key = (dim, _canonical(vertices))
        if key in found:
            continue
        equations = tuple((i, k) for i, (eq, k) in enumerate(sig) if eq)
        found[key] = Stratum(dim, key[1], x, equations)
    strata = sorted(found.values(), key=lambda s: (s.dim, s.vertices))
    index = {s.key: k for k, s in enumerate(strata)}

    tiles = []
    for k, s in enumerate(strata):
        poly, segments = Q.subdifferential(s.sample)
        volume = _zonotope_volume(segments, r) if poly.dim == r else None
        tiles.append(Tile(k, poly, poly.dim, volume))

    adjacency = set()
    for b, s in enumerate(strata):
        sig = _signature(Q, s.sample)
        _, actual = _cell(Q, sig)
        ranges = []
        for c in range(r):
            lo = min(v[c] for v in actual)
            hi = max(v[c] for v in actual)
            ranges.append(range(math.ceil(lo * K), math.floor(hi * K) + 1))
        for idx in itertools.product(*ranges):
            y = tuple(Fraction(i, K) for i in idx)
            if not _in_closure(Q, sig, y):
                continue
            a = index[_stratum_key(Q, y)]
            if a != b:
                adjacency.add((a, b))

    M = lcm_of_denominators(c for s in strata for v in s.vertices for c in v)
    return Tessellation(Q, strata, tiles, sorted(adjacency), K, M)


def _in_span(chi: Sequence[int], rows: Sequence[Sequence[int]]) -> bool:
    if not rows:
        return not any(chi)
    base = sp.Matrix([list(r) for r in rows])
    return base.rank() == sp.Matrix([list(r) for r in rows] + [list(chi)]).rank()


def constant_on(Q: PeriodicConvexFunction, s: Stratum, chi: Sequence[int]) -> int | None:
    """Значение целого характера χ, если он постоянен и целочислен на страте, иначе None."""
    v = dot(chi, s.sample)
    if v.denominator != 1:
        return None
    if not _in_span(chi, [Q.weights[i] for i, _ in s.equations]):
        return None
    return int(v)


# -----------------------------------------------------------------------------
# Узловая K-теория: этажи
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class InertiaGroup:
    """Подгруппа Γ ⊂ T, заданная образующими Γ^⊥, и компоненты X^Γ.

    ``inside`` сопоставляет компоненте X^Γ компоненту X^{Γ′} для меньшей Γ′ ⊂ Γ.
    """

    name: str
    perp: tuple[tuple[int, ...], ...]
    components: tuple[str, ...]
    inside: Mapping[str, str] = field(default_factory=dict)

    def rank(self, r: int) -> int:
        return r - (sp.Matrix([list(c) for c in self.perp]).rank() if self.perp else 0)


@dataclass(frozen=True)
class InertiaData:
    rank: int
    groups: tuple[InertiaGroup, ...]
    name: str = "inertia"

    def __post_init__(self) -> None:
        object.__setattr__(self, "groups", tuple(self.groups))
        self.validate()

    def group(self, name: str) -> InertiaGroup:
        for g in self.groups:
            if g.name == name:
                return g
        raise DegenerationError(f"unknown inertia group {name!r}")

    def owner(self, component: str) -> InertiaGroup:
        for g in self.groups:
            if component in g.components:
                return g
        raise DegenerationError(f"unknown component {component!r}")

    def subgroup(self, small: InertiaGroup, big: InertiaGroup) -> bool:
        """small ⊆ big ⇔ big^⊥ ⊆ small^⊥ как решётки."""
        if not big.perp:
            return True
        if not small.perp:
            return False
        basis = sp.Matrix([list(c) for c in small.perp]).T
        for chi in big.perp:
            target = sp.Matrix(list(chi))
            try:
                sol, params = basis.gauss_jordan_solve(target)
            except ValueError:
                return False
            if params.shape[0] or any(not sp.Rational(v).is_integer for v in sol):
                return False
        return True

    def validate(self) -> None:
        """Raises:
        DegenerationError: повтор имён, образующие Γ^⊥ зависимы или неверной длины,
            компонента без образа в меньшей группе ("inconsistent component counts").
        """
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise DegenerationError(f"duplicate inertia groups: {names}")
        all_components = [c for g in self.groups for c in g.components]
        if len(set(all_components)) != len(all_components):
            raise DegenerationError("component names must be unique across groups")
        for g in self.groups:
            if not g.components:
                raise DegenerationError(f"inconsistent component counts: X^{g.name} has no components")
            for chi in g.perp:
                if len(chi) != self.rank:
                    raise DegenerationError(f"character {list(chi)} of {g.name} has wrong length")
            if g.perp and sp.Matrix([list(c) for c in g.perp]).rank() != len(g.perp):
                raise DegenerationError(f"generators of {g.name}^perp are dependent")
            smaller = [h for h in self.groups if h is not g and self.subgroup(h, g)]
            for comp in g.components:
                parent = g.inside.get(comp)
                if parent is None:
                    if smaller:
                        raise DegenerationError(
                            f"inconsistent component counts: {comp} of X^{g.name} is not placed inside a smaller group"
                        )
                    continue
                h = self.owner(parent)
                if h not in smaller:
                    raise DegenerationError(f"inconsistent component counts: {comp} refines {parent} of a larger group")
            extra = set(g.inside) - set(g.components)
            if extra:
                raise DegenerationError(f"inconsistent component counts: unknown components {sorted(extra)}")

    def ancestor(self, component: str, group: InertiaGroup) -> str | None:
        """Компонента X^{group}, содержащая данную (по цепочке ``inside``)."""
        current = component
        while True:
            if current in group.components:
                return current
            parent = self.owner(current).inside.get(current)
            if parent is None:
                return None
            current = parent

    def arrangement(self) -> PeriodicConvexFunction:
        chars = [c for g in self.groups for c in g.perp]
        if not chars:
            raise DegenerationError("inertia data define no hyperplanes")
        return PeriodicConvexFunction.from_weights(chars)


@dataclass(frozen=True)
class FloorStratum:
    group: str
    stratum: int
    component: str
    dimension: int


@dataclass
class FloorPlan:
    tessellation: Tessellation
    strata: list[FloorStratum]
    adjacency: list[tuple[int, int]]
    floors: dict[str, list[int]]
    bundles: dict[int, dict[str, Weight]] = field(default_factory=dict)
    cocycle_ok: bool = True

    def counts(self, group: str | None = None) -> dict[int, int]:
        chosen = [s for s in self.strata if group is None or s.group == group]
        return dict(sorted(Counter(s.dimension for s in chosen).items()))


def _check_refines(Q: PeriodicConvexFunction, tess: Tessellation, chars: Iterable[Sequence[int]]) -> None:
    for chi in chars:
        for s in tess.strata:
            v = dot(chi, s.sample)
            if v.denominator == 1 and constant_on(Q, s, chi) is None:
                raise DegenerationError("fan does not refine the inertia arrangement")


def nodal_floors(data: InertiaData, Q: PeriodicConvexFunction | None = None) -> FloorPlan:
    """Страты K_{Γ,η,i}: η ⊆ log Γ, i — компонента X^η, размерность rank Γ − dim η.

    X^η = X^{Γ_η}, где Γ_η — наименьшая группа с η ⊆ log Γ.

    Raises:
        DegenerationError: веер 𝒬 не подразбивает расположение инерции, группы
            не замкнуты относительно пересечений.
    """
    Q = Q or data.arrangement()
    if Q.rank != data.rank:
        raise DegenerationError("𝒬 lives on a lattice of a different rank")
    tess = legendre_dual_tessellation(Q)
    _check_refines(Q, tess, [c for g in data.groups for c in g.perp])

    def contains(g: InertiaGroup, s: Stratum) -> bool:
        return all(constant_on(Q, s, chi) is not None for chi in g.perp)

    strata: list[FloorStratum] = []
    for k, s in enumerate(tess.strata):
        holders = [g for g in data.groups if contains(g, s)]
        if not holders:
            continue
        minimal = [g for g in holders if all(data.subgroup(g, h) for h in holders)]
        if not minimal:
            raise DegenerationError("inertia groups are not closed under intersection")
        fixed = minimal[0]
        for g in holders:
            for comp in fixed.components:
                strata.append(FloorStratum(g.name, k, comp, g.rank(data.rank) - s.dim))

    adjacency = []
    face_of = set(tess.adjacency)
    for a, sa in enumerate(strata):
        for b, sb in enumerate(strata):
            if sa.group != sb.group or (sa.stratum, sb.stratum) not in face_of:
                continue
            if data.ancestor(sb.component, data.owner(sa.component)) == sa.component:
                adjacency.append((a, b))

    top = [g for g in data.groups if not g.perp] or [max(data.groups, key=lambda g: g.rank(data.rank))]
    floors: dict[str, list[int]] = {}
    for g in top:
        for comp in g.components:
            floors[comp] = [
                k for k, s in enumerate(strata) if data.ancestor(comp, data.owner(s.component)) == s.component
            ]
    return FloorPlan(tess, strata, adjacency, floors)


# -----------------------------------------------------------------------------
# Этажи GKM-модели и граничные расслоения
# -----------------------------------------------------------------------------
def _lattice_coordinates(basis: Sequence[Sequence[int]], v: Sequence[Fraction]) -> tuple[int, ...]:
    B = sp.Matrix([list(b) for b in basis]).T
    sol, params = B.gauss_jordan_solve(sp.Matrix([sp.Rational(x.numerator, x.denominator) for x in v]))
    if params.shape[0]:
        raise DegenerationError("lattice basis is not independent")
    if any(not sp.Rational(c).is_integer for c in sol):
        raise DegenerationError(f"weight {list(v)} is not in the weight lattice")
    return tuple(int(c) for c in sol)


def _fan_weights(model: GKMModel) -> dict[str, list[Weight]]:
    return {p.name: list(p.polarization if p.polarization is not None else p.tangent) for p in model.fixed_points}


def model_lattice(model: GKMModel) -> list[tuple[int, ...]]:
    """Базис решётки, порождённой A-частями весов рёбер и 𝒱."""
    torus = model.torus
    vectors = [torus.project_a(w) for ws in _fan_weights(model).values() for w in ws]
    vectors += [torus.project_a(e.weight) for e in model.edges]
    if any(c.denominator != 1 for v in vectors for c in v):
        raise DegenerationError("weights must be integral on A")
    return lattice_basis([tuple(int(c) for c in v) for v in vectors])


def model_function(model: GKMModel, point: str | None = None) -> PeriodicConvexFunction:
    """𝒬 по весам 𝒱 = T^{1/2} (касательные веса без поляризации) во всех точках или в одной."""
    basis = model_lattice(model)
    torus = model.torus
    weights = []
    for name, ws in _fan_weights(model).items():
        if point is not None and name != point:
            continue
        weights.extend(_lattice_coordinates(basis, torus.project_a(w)) for w in ws)
    return PeriodicConvexFunction.from_weights(weights)


def boundary_bundle(model: GKMModel, basis, x: Point) -> dict[str, Weight]:
    """𝛌 в точке x: в каждой F вес −Σ_{w ∈ 𝒱|_F} ⌈w(x)⌉·w (тривиален при x = 0)."""
    torus = model.torus
    out = {}
    for name, ws in _fan_weights(model).items():
        total = torus.zero()
        for w in ws:
            coords = _lattice_coordinates(basis, torus.project_a(w))
            total = total - torus.from_a(torus.project_a(w)).scale(math.ceil(dot(coords, x)))
        out[name] = total
    return out


def _det_delta(model: GKMModel, basis, y: Point, x_cell: Point) -> dict[str, Weight]:
    """det δ_{η,η′}: веса 𝒱, целые на η ∋ y и возрастающие при переходе в η′ ∋ x_cell."""
    torus = model.torus
    out = {}
    for name, ws in _fan_weights(model).items():
        total = torus.zero()
        for w in ws:
            coords = _lattice_coordinates(basis, torus.project_a(w))
            at_face = dot(coords, y)
            if at_face.denominator == 1 and dot(coords, x_cell) > at_face:
                total = total + torus.from_a(torus.project_a(w))
        out[name] = total
    return out


def model_floors(model: GKMModel) -> FloorPlan:
    """Этажи K_{A,η,i} GKM-модели: компоненты X^η — связные компоненты графа рёбер,
    вес которых постоянен и целочислен на η; граничные расслоения 𝛌_η с проверкой коцикла."""
    basis = model_lattice(model)
    Q = model_function(model)
    tess = legendre_dual_tessellation(Q)
    torus = model.torus
    r = Q.rank
    edge_chars = [(e, _lattice_coordinates(basis, torus.project_a(e.weight))) for e in model.edges]

    strata: list[FloorStratum] = []
    for k, s in enumerate(tess.strata):
        g = nx.Graph()
        g.add_nodes_from(model.names)
        for e, chi in edge_chars:
            if constant_on(Q, s, chi) is not None:
                g.add_edge(e.source, e.target)
        order = {n: i for i, n in enumerate(model.names)}
        comps = sorted((sorted(c, key=order.__getitem__) for c in nx.connected_components(g)), key=lambda c: order[c[0]])
        for comp in comps:
            strata.append(FloorStratum("A", k, "+".join(comp), r - s.dim))

    face_of = set(tess.adjacency)
    adjacency = []
    for a, sa in enumerate(strata):
        for b, sb in enumerate(strata):
            if (sa.stratum, sb.stratum) in face_of and set(sb.component.split("+")) <= set(sa.component.split("+")):
                adjacency.append((a, b))
    floors = {
        name: [k for k, s in enumerate(strata) if name in s.component.split("+")] for name in model.names
    }

    bundles = {k: boundary_bundle(model, basis, s.sample) for k, s in enumerate(tess.strata)}
    cocycle_ok = all(not any(w.exps) for w in boundary_bundle(model, basis, (Fraction(0),) * r).values())
    for a, b in tess.adjacency:
        cell = tess.strata[b]
        sig = _signature(Q, cell.sample)
        _, actual = _cell(Q, sig)
        face = tess.strata[a]
        y = _face_point(Q, sig, actual, face.key, tess.grid)
        lam_face = boundary_bundle(model, basis, y)
        lam_cell = bundles[b]
        delta = _det_delta(model, basis, y, cell.sample)
        for name in model.names:
            if lam_face[name] - lam_cell[name] != delta[name]:
                cocycle_ok = False
    return FloorPlan(tess, strata, adjacency, floors, bundles, cocycle_ok)


def _face_point(Q: PeriodicConvexFunction, sig, actual: Sequence[Point], key: tuple, K: int) -> Point:
    """Точка сетки на данном страте-грани внутри замыкания конкретной клетки."""
    r = Q.rank
    ranges = []
    for c in range(r):
        lo = min(v[c] for v in actual)
        hi = max(v[c] for v in actual)
        ranges.append(range(math.ceil(lo * K), math.floor(hi * K) + 1))
    for idx in itertools.product(*ranges):
        y = tuple(Fraction(i, K) for i in idx)
        if _in_closure(Q, sig, y) and _stratum_key(Q, y) == key:
            return y
    raise DegenerationError("face is not in the closure of the cell")


# -----------------------------------------------------------------------------
# Тэта-ряды
# -----------------------------------------------------------------------------
def theta_series(
    torus: Torus,
    w: Weight,
    order: Rational = DEFAULT_TRUNCATION,
    q_shift: Rational = 0,
    coeff: LaurentPoly | None = None,
) -> TruncatedQSeries:
    """θ₀(c·x^w·q^s) = Σ_k c^k x^{kw} q^{𝕢(k) + ks}, c — ±моном."""
    order = as_fraction(order)
    s = as_fraction(q_shift)
    c = coeff if coeff is not None else torus.one()
    if not c.is_monomial():
        raise DegenerationError("theta argument coefficient must be a monomial")

    def exponent(k: int) -> Fraction:
        return qfun(k) + k * s

    centre = math.floor(Fraction(1, 2) - s)
    terms: dict[Fraction, LaurentPoly] = {}
    for direction in (1, -1):
        k = centre if direction == 1 else centre - 1
        while True:
            e = exponent(k)
            if e >= order and k != centre:
                break
            if e < order:
                term = (c ** k).scale_monomial(w.scale(k))
                terms[e] = terms[e] + term if e in terms else term
            k += direction
    return TruncatedQSeries(torus, terms, order)


def euler_phi(torus: Torus, order: Rational = DEFAULT_TRUNCATION) -> TruncatedQSeries:
    """Π_{n≥1}(1 − q^n)."""
    order = as_fraction(order)
    result = TruncatedQSeries(torus, {0: torus.one()}, order)
    n = 1
    while n < order:
        result = result * TruncatedQSeries(torus, {0: torus.one(), n: -torus.one()}, order)
        n += 1
    return result


def theta_odd(torus: Torus, w: Weight, order: Rational = DEFAULT_TRUNCATION, q_shift: int = 0) -> TruncatedQSeries:
    """ϑ(y) = (y^{1/2} − y^{−1/2}) Π_{n≥1}(1 − q^n y)(1 − q^n y^{−1}), y = q^{q_shift}·x^w.

    При ненулевом сдвиге используется тройное произведение:
    ϑ(y) = −y^{−1/2} θ₀(−y) / Π(1 − q^n).
    """
    order = as_fraction(order)
    one = torus.one()
    if q_shift:
        minus = LaurentPoly.constant(torus, -1)
        core = theta_series(torus, w, order, q_shift, minus) * euler_phi(torus, order).inverse()
        return core.shift(Fraction(-q_shift, 2), LaurentPoly.monomial(torus, w.scale(Fraction(-1, 2)), -1))
    half = w.scale(Fraction(1, 2))
    result = TruncatedQSeries.from_poly(
        LaurentPoly.monomial(torus, half) - LaurentPoly.monomial(torus, -half), order
    )
    n = 1
    while n < order:
        up = TruncatedQSeries(torus, {0: one, n: -LaurentPoly.monomial(torus, w)}, order)
        down = TruncatedQSeries(torus, {0: one, n: -LaurentPoly.monomial(torus, -w)}, order)
        result = result * up * down
        n += 1
    return result


def tate_cubic_check(perturbed: bool = False) -> bool:
    """f₁ = t+s, f₂ = ts, f₃ = t²s удовлетворяют f₃² + f₂³ − f₁f₂f₃ = 0."""
    return sp.expand(tate_cubic_residual(perturbed)) == 0


def tate_cubic_residual(perturbed: bool = False, values: Mapping[str, Rational] | None = None) -> sp.Expr:
    t, s = sp.symbols("t s")
    f1, f2, f3 = t + s, t * s, t**2 * s
    sign = 1 if perturbed else -1
    expr = f3**2 + f2**3 + sign * f1 * f2 * f3
    if values:
        expr = expr.subs({t: sp.Rational(str(values["t"])), s: sp.Rational(str(values["s"]))})
    return sp.expand(expr)


@dataclass
class ThetaReport:
    order: Fraction
    theta0: TruncatedQSeries
    functional_residual: TruncatedQSeries
    triple_product_residual: TruncatedQSeries
    odd_residual: TruncatedQSeries
    tate_cubic: bool

    @property
    def ok(self) -> bool:
        return (
            self.functional_residual.is_zero()
            and self.triple_product_residual.is_zero()
            and self.odd_residual.is_zero()
            and self.tate_cubic
        )


def theta_report(order: Rational = DEFAULT_TRUNCATION) -> ThetaReport:
    """θ₀(qa) − a^{−1}θ₀(a), ϑ — произведение против тройного, ϑ(a^{−1}) + ϑ(a), кубика Тейта."""
    order = as_fraction(order)
    torus = Torus(("a",), ("a",))
    a = torus.coordinate("a")
    theta0 = theta_series(torus, a, order)
    shifted = theta_series(torus, a, order, q_shift=1)
    functional = shifted - theta0 * LaurentPoly.monomial(torus, -a)
    minus = LaurentPoly.constant(torus, -1)
    triple = theta_series(torus, a, order, coeff=minus) * euler_phi(torus, order).inverse()
    triple = triple.shift(0, LaurentPoly.monomial(torus, a.scale(Fraction(-1, 2)), -1))
    product = theta_odd(torus, a, order)
    odd = theta_odd(torus, -a, order) + product
    return ThetaReport(
        order=order,
        theta0=theta0,
        functional_residual=functional,
        triple_product_residual=product - triple,
        odd_residual=odd,
        tate_cubic=tate_cubic_check(),
    )


# -----------------------------------------------------------------------------
# Эллиптическая огибающая ранга 1 и узловой предел
# -----------------------------------------------------------------------------
@dataclass
class EllipticStab:
    """Элементы (j, i) — усечённые q-ряды; Kähler-параметр u = z·q^s."""

    model: GKMModel
    chamber: Chamber
    z: LaurentPoly
    slope: Fraction
    order: Fraction
    x_shift: int
    entries: dict[tuple[str, str], TruncatedQSeries]
    lower: str
    upper: str
    variable: Weight

    def entry(self, j: str, i: str) -> TruncatedQSeries:
        return self.entries.get((j, i), TruncatedQSeries(self.model.torus, {}, self.order))


def _rank_one_data(model: GKMModel, chamber: Chamber):
    if len(model.fixed_points) != 2 or len(model.edges) != 1 or not model.has_polarization:
        raise ModelError("elliptic envelopes are implemented for two fixed points joined by one edge")
    if "h" not in model.torus.param_names:
        raise ModelError("elliptic envelopes need the parameter h")
    order = ample_order(model, chamber)
    lower, upper = order.refine("ample")
    edge = model.edges[0]
    tangent = model.tangent_at(lower, edge.weight)
    torus = model.torus
    x = torus.from_a(torus.project_a(-tangent))
    xa = torus.project_a(x)
    i = next(k for k, c in enumerate(xa) if abs(c) == 1)
    xi = tuple(0 if k != i else int(xa[i]) for k in range(len(xa)))
    return lower, upper, x, xi


def _twist(torus: Torus, w: Weight, xi: Sequence[int], c: int) -> Fraction:
    return c * dot(torus.project_a(w), xi)


def elliptic_stab_rank1(
    model: GKMModel,
    z: LaurentPoly | str = "h^2",
    slope: Rational | None = None,
    order: Rational = DEFAULT_TRUNCATION,
    chamber: Chamber | None = None,
    x_shift: int = 0,
) -> EllipticStab:
    """Эллиптическая огибающая T*P¹ с 𝒮 = Θ(T^{1/2})⊗𝒰(O(1), z).

    Диагональ: моном K-нормировки · Π_{w ∈ N_{<0}} x^{−w/2} ϑ(w); элемент
    (нижняя, верхняя) = ϑ(h)·θ₀(−u·x)/θ₀(−u), x — характер ребра с P = 1 − x.
    ``x_shift`` = c строит все ряды после подстановки x → q^c·x.

    Raises:
        ResonanceError: z лежит в резонансном множестве ("resonant slope").
        ModelError: модель не ранга 1.
    """
    torus = model.torus
    chamber = chamber or Chamber.standard(torus)
    order = as_fraction(order)
    if order < 8:
        raise DegenerationError("elliptic envelopes need truncation order at least 8")
    zp = torus.parse_poly(z) if isinstance(z, str) else z
    if not zp.is_unit():
        raise DegenerationError("z must be a unit monomial in the parameters")
    for w in resonant_locus(model, chamber):
        if zp == LaurentPoly.monomial(torus, w):
            raise ResonanceError(f"resonant slope: z = {torus.format_weight(w)}")
    lower, upper, x, xi = _rank_one_data(model, chamber)
    s = as_fraction(slope) if slope is not None else model.point(upper).slope_coeff

    entries: dict[tuple[str, str], TruncatedQSeries] = {}
    for p in model.fixed_points:
        norm = normalization(model, p.name, chamber)
        n_neg = chamber_split(p.tangent, chamber).repelling
        prefactor = _normalization_monomial(norm, n_neg, torus)
        (mono_w, mono_c), = prefactor.terms.items()
        series = TruncatedQSeries.from_poly(prefactor, order, _twist(torus, mono_w, xi, x_shift))
        for w in n_neg:
            d = int(_twist(torus, w, xi, x_shift))
            factor = theta_odd(torus, w, order, q_shift=d)
            half = w.scale(Fraction(-1, 2))
            factor = factor.shift(_twist(torus, half, xi, x_shift), LaurentPoly.monomial(torus, half))
            series = series * factor
        entries[(p.name, p.name)] = series

    h = torus.coordinate("h")
    minus_z = -zp
    numerator = theta_series(torus, x, order, q_shift=s + x_shift, coeff=minus_z)
    denominator = theta_series(torus, torus.zero(), order, q_shift=s, coeff=minus_z)
    entries[(lower, upper)] = theta_odd(torus, h, order) * numerator * denominator.inverse()
    return EllipticStab(model, chamber, zp, s, order, x_shift, entries, lower, upper, x)


def _normalization_monomial(norm: LaurentPoly, n_neg: Sequence[Weight], torus: Torus) -> LaurentPoly:
    """Моном m с norm = m·Π(1 − x^{−w})."""
    ratio = norm.monomial_ratio(koszul_from_weights(torus, n_neg))
    if ratio is None:
        raise DegenerationError("normalization is not a monomial multiple of its Koszul factor")
    c, w = ratio
    return LaurentPoly.monomial(torus, w, c)


@dataclass
class NodalLimit:
    entries: dict[tuple[str, str], LaurentPoly]
    order: list[str]

    def entry(self, j: str, i: str) -> LaurentPoly:
        return self.entries.get((j, i), LaurentPoly.zero(next(iter(self.entries.values())).torus))


def nodal_limit(E: EllipticStab) -> NodalLimit:
    """q⁰-коэффициенты элементов при ν(z) = ν(ℏ) = 0.

    Raises:
        DegenerationError: отрицательная q-валюация ("limit does not exist in this regime").
    """
    if E.x_shift:
        raise DegenerationError("nodal limit is taken for the unshifted matrix")
    entries = {}
    for key, series in E.entries.items():
        if not series.is_zero() and series.valuation < 0:
            raise DegenerationError(f"limit does not exist in this regime: entry {key} has valuation {series.valuation}")
        value = series.coefficient(0)
        if not value.is_zero():
            entries[key] = value
    return NodalLimit(entries, [E.lower, E.upper])


def compare_with_stab(limit: NodalLimit, S: StabMatrix) -> Weight | None:
    """Общий моном x^w с limit = x^w·Stab поэлементно, иначе None."""
    shift: Weight | None = None
    names = S.model.names
    for j in names:
        for i in names:
            a, b = limit.entry(j, i), S.entry(j, i)
            if a.is_zero() and b.is_zero():
                continue
            ratio = a.monomial_ratio(b)
            if ratio is None or ratio[0] != 1:
                return None
            if shift is None:
                shift = ratio[1]
            elif ratio[1] != shift:
                return None
    return shift
