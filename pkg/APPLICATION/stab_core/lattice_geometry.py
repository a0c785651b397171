# APPLICATION/stab_core/lattice_geometry.py

"""
Решёточная геометрия: многогранники с точными вершинами и полупространствами,
касательные конусы, сдвиги Δ + λ, камеры и порядок, заданный ампл. весом.

Размерности маленькие (≤ 5), поэтому грани ищем перебором подмножеств точек,
а целые точки — перебором по ограничивающему брусу.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, NamedTuple, Sequence

import networkx as nx
import sympy as sp
from sympy.matrices.normalforms import hermite_normal_form

from stab_core.errors import GeometryError
from stab_core.exact_algebra import Rational, Torus, Weight, as_fraction

if TYPE_CHECKING:
    from stab_core.gkm_model import GKMModel

Point = tuple[Fraction, ...]


def _sp(vec: Sequence[Fraction]) -> list[sp.Rational]:
    return [sp.Rational(x.numerator, x.denominator) for x in vec]


def _frac(x: sp.Expr) -> Fraction:
    return as_fraction(sp.Rational(x))


def primitive_vector(vec: Sequence[Rational | sp.Rational]) -> tuple[int, ...]:
    """Примитивный целый вектор того же направления."""
    fr = [x if isinstance(x, Fraction) else _frac(x) if isinstance(x, sp.Basic) else as_fraction(x) for x in vec]
    den = math.lcm(*(x.denominator for x in fr)) if fr else 1
    ints = [int(x * den) for x in fr]
    g = math.gcd(*ints)
    if g == 0:
        raise GeometryError("zero vector has no primitive direction")
    return tuple(i // g for i in ints)


def dot(u: Sequence[Rational], v: Sequence[Rational]) -> Fraction:
    return sum((Fraction(a) * Fraction(b) for a, b in zip(u, v, strict=True)), Fraction(0))


def lattice_basis(vectors: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    """Базис подрешётки, порождённой целыми векторами (нормальная форма Эрмита)."""
    cols = [list(v) for v in vectors]
    if not cols:
        return []
    matrix = sp.Matrix(cols).T
    hnf = hermite_normal_form(matrix)
    basis = []
    for j in range(hnf.shape[1]):
        col = tuple(int(x) for x in hnf[:, j])
        if any(col):
            basis.append(col)
    return basis


def kernel_basis(functionals: Sequence[Sequence[Rational]], dim: int) -> list[tuple[int, ...]]:
    """Целые векторы, порождающие рациональное ядро набора функционалов."""
    if not functionals:
        return [tuple(int(i == j) for j in range(dim)) for i in range(dim)]
    matrix = sp.Matrix([_sp([as_fraction(x) for x in row]) for row in functionals])
    return [primitive_vector(list(v)) for v in matrix.nullspace()]


# -----------------------------------------------------------------------------
# Многогранники
# -----------------------------------------------------------------------------
class LatticePolytope:
    """Выпуклая оболочка конечного набора рациональных точек.

    Хранит вершины, уравнения аффинной оболочки (n·x = c) и фасеты
    (n·x ≥ b) с примитивными целыми нормалями, смотрящими внутрь.
    """

    def __init__(self, points: Iterable[Sequence[Rational]]):
        pts = sorted({tuple(as_fraction(x) for x in p) for p in points})
        if not pts:
            raise GeometryError("empty polytope")
        dims = {len(p) for p in pts}
        if len(dims) != 1:
            raise GeometryError("points of different dimensions")
        self.ambient_dim = dims.pop()
        self._points = pts
        self._build()

    def _build(self) -> None:
        pts = self._points
        d = self.ambient_dim
        p0 = pts[0]
        diffs = [[x - y for x, y in zip(p, p0)] for p in pts[1:]]
        if diffs and d:
            D = sp.Matrix([_sp(row) for row in diffs])
            directions = [list(r) for r in D.rowspace()]
            normals = [list(v) for v in D.nullspace()]
        else:
            directions = []
            normals = [[sp.Integer(int(i == j)) for j in range(d)] for i in range(d)]
        self.dim = len(directions)
        eqs = []
        for n in normals:
            n_int = primitive_vector(n)
            eqs.append((n_int, dot(n_int, p0)))
        self.equations: tuple[tuple[tuple[int, ...], Fraction], ...] = tuple(sorted(set(eqs)))

        facets: set[tuple[tuple[int, ...], Fraction]] = set()
        r = self.dim
        if r > 0:
            B = sp.Matrix(directions)
            for subset in itertools.combinations(pts, r):
                q0 = subset[0]
                rows = [list(B * sp.Matrix(_sp([x - y for x, y in zip(q, q0)]))) for q in subset[1:]]
                if rows:
                    kernel = sp.Matrix(rows).nullspace()
                    if len(kernel) != 1:
                        continue
                    coeffs = kernel[0]
                else:
                    coeffs = sp.Matrix([1])
                normal = list(B.T * coeffs)
                values = [sum(n * v for n, v in zip(normal, _sp([x - y for x, y in zip(p, q0)]))) for p in pts]
                if all(v >= 0 for v in values):
                    pass
                elif all(v <= 0 for v in values):
                    normal = [-x for x in normal]
                else:
                    continue
                if all(v == 0 for v in values):
                    continue
                n_int = primitive_vector(normal)
                facets.add((n_int, dot(n_int, q0)))
        self.inequalities: tuple[tuple[tuple[int, ...], Fraction], ...] = tuple(sorted(facets))

        if r == 0:
            self.vertices: tuple[Point, ...] = (p0,)
        else:
            verts = []
            for p in pts:
                tight = [list(n) for n, b in self.inequalities if dot(n, p) == b]
                if tight and sp.Matrix(tight).rank() + len(self.equations) >= d:
                    verts.append(p)
            self.vertices = tuple(verts)

    # --- запросы --------------------------------------------------------------
    def contains(self, x: Sequence[Rational]) -> bool:
        x = [as_fraction(v) for v in x]
        return all(dot(n, x) == c for n, c in self.equations) and all(
            dot(n, x) >= b for n, b in self.inequalities
        )

    def is_full_dimensional(self) -> bool:
        return self.dim == self.ambient_dim

    def is_lattice(self) -> bool:
        return all(x.denominator == 1 for v in self.vertices for x in v)

    def lattice_points(self, shift: Sequence[Rational] | None = None) -> list[tuple[int, ...]]:
        """Целые μ с μ − shift ∈ Δ, в лексикографическом порядке."""
        lam = [as_fraction(x) for x in shift] if shift is not None else [Fraction(0)] * self.ambient_dim
        ranges = []
        for i in range(self.ambient_dim):
            lo = min(v[i] for v in self.vertices) + lam[i]
            hi = max(v[i] for v in self.vertices) + lam[i]
            ranges.append(range(math.ceil(lo), math.floor(hi) + 1))
        out = []
        for mu in itertools.product(*ranges):
            if self.contains([m - l for m, l in zip(mu, lam)]):
                out.append(tuple(mu))
        return out

    def translate(self, v: Sequence[Rational]) -> "LatticePolytope":
        v = [as_fraction(x) for x in v]
        return LatticePolytope(tuple(a + b for a, b in zip(p, v)) for p in self.vertices)

    def minkowski_sum(self, other: "LatticePolytope") -> "LatticePolytope":
        return LatticePolytope(
            tuple(a + b for a, b in zip(p, q)) for p in self.vertices for q in other.vertices
        )

    def contains_polytope(self, other: "LatticePolytope") -> bool:
        return all(self.contains(v) for v in other.vertices)

    def support(self, sigma: Sequence[Rational]) -> tuple[Fraction, Fraction]:
        """Отрезок значений ⟨x, σ⟩ на Δ."""
        values = [dot(v, sigma) for v in self.vertices]
        return min(values), max(values)

    def project(self, matrix: Sequence[Sequence[Rational]]) -> "LatticePolytope":
        return LatticePolytope(tuple(dot(row, v) for row in matrix) for v in self.vertices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatticePolytope):
            return NotImplemented
        return self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def to_list(self) -> list[list[str]]:
        return [[str(x) for x in v] for v in self.vertices]

    def __repr__(self) -> str:
        return f"LatticePolytope(dim={self.dim}, vertices={self.to_list()})"


@dataclass(frozen=True)
class Cone:
    """Конус apex + {v : n·v ≥ 0 для всех нормалей, m·v = 0 для уравнений}."""

    apex: Point
    inequalities: tuple[tuple[int, ...], ...]
    equations: tuple[tuple[int, ...], ...] = ()

    def contains_direction(self, v: Sequence[Rational]) -> bool:
        return all(dot(m, v) == 0 for m in self.equations) and all(dot(n, v) >= 0 for n in self.inequalities)

    def contains(self, x: Sequence[Rational]) -> bool:
        return self.contains_direction([as_fraction(a) - b for a, b in zip(x, self.apex)])

    def is_full_space(self) -> bool:
        return not self.inequalities and not self.equations


def tangent_cone(delta: LatticePolytope, face: Iterable[Sequence[Rational]]) -> Cone:
    """Конус направлений внутрь Δ вдоль грани ``face`` (набора её вершин).

    Raises:
        GeometryError: набор точек не является гранью Δ.
    """
    face_pts = sorted({tuple(as_fraction(x) for x in p) for p in face})
    if not face_pts:
        raise GeometryError("empty face")
    if any(p not in delta.vertices for p in face_pts):
        raise GeometryError("face points must be vertices of the polytope")
    tight = [(n, b) for n, b in delta.inequalities if all(dot(n, p) == b for p in face_pts)]
    closure = sorted(v for v in delta.vertices if all(dot(n, v) == b for n, b in tight))
    if closure != face_pts:
        raise GeometryError(f"{[[str(x) for x in p] for p in face_pts]} is not a face")
    return Cone(
        apex=face_pts[0],
        inequalities=tuple(n for n, _ in tight),
        equations=tuple(n for n, _ in delta.equations),
    )


@dataclass(frozen=True)
class ShiftedPolytope:
    """Δ_λ = Δ + λ с рациональным сдвигом λ."""

    base: LatticePolytope
    shift: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "shift", tuple(as_fraction(x) for x in self.shift))
        if len(self.shift) != self.base.ambient_dim:
            raise GeometryError("shift has wrong dimension")

    def is_generic(self) -> bool:
        """λ вне решётки характеров: тогда интерполяция единственна."""
        return any(x.denominator != 1 for x in self.shift)

    def lattice_points(self) -> list[tuple[int, ...]]:
        return self.base.lattice_points(self.shift)

    def contains(self, x: Sequence[Rational]) -> bool:
        return self.base.contains([as_fraction(a) - b for a, b in zip(x, self.shift)])

    def as_polytope(self) -> LatticePolytope:
        return self.base.translate(self.shift)


def lattice_points_shifted(dl: ShiftedPolytope) -> list[tuple[int, ...]]:
    """Все целые μ с μ − λ ∈ Δ (базис H⁰(O(Δ_λ)))."""
    return dl.lattice_points()


# -----------------------------------------------------------------------------
# Камеры
# -----------------------------------------------------------------------------
class WeightSplit(NamedTuple):
    attracting: list[Weight]
    repelling: list[Weight]
    fixed: list[Weight]


@dataclass(frozen=True)
class Chamber:
    """Камера, заданная целым генерическим кохарактером σ подтора A."""

    torus: Torus
    sigma: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", tuple(int(s) for s in self.sigma))
        if len(self.sigma) != len(self.torus.a_names):
            raise GeometryError(
                f"cocharacter has {len(self.sigma)} entries, A has {len(self.torus.a_names)} coordinates"
            )

    @classmethod
    def standard(cls, torus: Torus) -> "Chamber":
        n = len(torus.a_names)
        return cls(torus, tuple(range(n - 1, -1, -1)))

    @classmethod
    def from_permutation(cls, torus: Torus, perm: Sequence[int]) -> "Chamber":
        """perm = (p_1, …, p_n), 1-based: a_{p_1} ≪ a_{p_2} ≪ … при a → 0."""
        n = len(torus.a_names)
        if sorted(perm) != list(range(1, n + 1)):
            raise GeometryError(f"{list(perm)} is not a permutation of 1..{n}")
        sigma = [0] * n
        for k, p in enumerate(perm):
            sigma[p - 1] = n - 1 - k
        return cls(torus, tuple(sigma))

    def opposite(self) -> "Chamber":
        return Chamber(self.torus, tuple(-s for s in self.sigma))

    def pair(self, w: Weight) -> Fraction:
        return dot(self.torus.project_a(w), self.sigma)

    @property
    def label(self) -> str:
        return "cochar:" + ",".join(str(s) for s in self.sigma)


def all_chambers(torus: Torus) -> list[Chamber]:
    n = len(torus.a_names)
    return [Chamber.from_permutation(torus, p) for p in itertools.permutations(range(1, n + 1))]


def chamber_split(weights: Iterable[Weight], chamber: Chamber) -> WeightSplit:
    """Разбить веса по знаку ⟨w, σ⟩; тривиальные на A — в ``fixed``.

    Raises:
        GeometryError: ⟨w, σ⟩ = 0 при w ≠ 0 на A ("non-generic chamber").
    """
    torus = chamber.torus
    split = WeightSplit([], [], [])
    for w in weights:
        if not any(torus.project_a(w)):
            split.fixed.append(w)
            continue
        s = chamber.pair(w)
        if s == 0:
            raise GeometryError(f"non-generic chamber: {chamber.label} is orthogonal to {torus.format_weight(w)}")
        (split.attracting if s > 0 else split.repelling).append(w)
    return split


# -----------------------------------------------------------------------------
# Порядок на неподвижных точках
# -----------------------------------------------------------------------------
class AmpleOrder:
    """Частичный порядок F_j < F_i (цепочки притягивающих рёбер) и его пополнения."""

    def __init__(self, names: Sequence[str], cover: nx.DiGraph, keys: dict[str, Fraction]):
        self.names = list(names)
        self.cover = cover
        self.closure = nx.transitive_closure_dag(cover)
        self.keys = keys

    def less(self, a: str, b: str) -> bool:
        return self.closure.has_edge(a, b)

    def leq(self, a: str, b: str) -> bool:
        return a == b or self.less(a, b)

    def comparable(self, a: str, b: str) -> bool:
        return self.leq(a, b) or self.leq(b, a)

    def below(self, b: str) -> list[str]:
        return [a for a in self.names if self.less(a, b)]

    def relations(self) -> list[tuple[str, str]]:
        return sorted(self.closure.edges(), key=lambda e: (self.names.index(e[0]), self.names.index(e[1])))

    def refine(self, strategy: str | Sequence[str] = "ample") -> list[str]:
        """Линейное пополнение (по возрастанию).

        ``ample`` — по ⟨вес L, σ⟩, затем по номеру точки; ``index`` и
        ``reverse-index`` — топологическая сортировка с соответствующим ключом;
        явный список имён проверяется на согласованность.
        """
        index = {n: i for i, n in enumerate(self.names)}
        if isinstance(strategy, str):
            if strategy == "ample":
                return sorted(self.names, key=lambda n: (self.keys[n], index[n]))
            if strategy == "index":
                return list(nx.lexicographical_topological_sort(self.cover, key=lambda n: index[n]))
            if strategy == "reverse-index":
                return list(nx.lexicographical_topological_sort(self.cover, key=lambda n: -index[n]))
            strategy = [s.strip() for s in strategy.split(",") if s.strip()]
        order = list(strategy)
        if sorted(order) != sorted(self.names):
            raise GeometryError(f"order {order} is not a permutation of the fixed points")
        position = {n: i for i, n in enumerate(order)}
        for a, b in self.closure.edges():
            if position[a] > position[b]:
                raise GeometryError(f"order {order} contradicts {a} < {b}")
        return order


def ample_order(model: "GKMModel", chamber: Chamber) -> AmpleOrder:
    """Порядок по цепочкам притягивающих рёбер с проверкой ампл. веса на каждом ребре.

    Raises:
        GeometryError: "non-ample linearization", негенерическая камера или цикл.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(model.names)
    for edge in model.edges:
        tp, tq = model.edge_tangents(edge)
        sp_, sq = chamber.pair(tp), chamber.pair(tq)
        if sp_ == 0 or sq == 0:
            raise GeometryError(f"non-generic chamber: edge {edge.source}-{edge.target} is fixed by {chamber.label}")
        if (sp_ > 0) == (sq > 0):
            raise GeometryError(f"edge {edge.source}-{edge.target} has non-opposite tangent weights")
        lower, upper = (edge.source, edge.target) if sq > 0 else (edge.target, edge.source)
        gap = chamber.pair(model.point(upper).ample) - chamber.pair(model.point(lower).ample)
        if gap <= 0:
            raise GeometryError(f"non-ample linearization on edge {lower}-{upper}")
        graph.add_edge(lower, upper)
    if not nx.is_directed_acyclic_graph(graph):
        raise GeometryError("attracting edges form a cycle")
    keys = {p.name: chamber.pair(p.ample) for p in model.fixed_points}
    return AmpleOrder(model.names, graph, keys)
