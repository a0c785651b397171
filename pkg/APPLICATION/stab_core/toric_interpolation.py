# APPLICATION/stab_core/toric_interpolation.py

"""
Торическая интерполяция: найти f с заданным классом по модулю невырожденного P
и многогранником Ньютона внутри Δ + λ.

Неизвестные — коэффициенты f в целых точках Δ + λ, коэффициенты лежат в поле
Q(h^{1/2}, …) (по одному символу на координату-параметр). Линейная система
решается точно через ``DomainMatrix.rref``.

Два способа записать условие делимости:

* ``direction`` — P раскладывается на множители P_ν(a^ν) по неделимым
  направлениям; для каждого смежного класса по Zν остаток от деления на
  P_ν(y) должен обнулиться;
* ``multiplier`` — f − target = P·g, где g пробегает точки разности Минковского.
  Работает для любого P и служит независимой проверкой.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy as sp
from sympy.polys.matrices import DomainMatrix

from stab_core.errors import AlgebraError, GeometryError, SolverError
from stab_core.exact_algebra import (
    LaurentPoly,
    Rational,
    Torus,
    Weight,
    as_fraction,
    newton_polytope,
)
from stab_core.lattice_geometry import LatticePolytope, ShiftedPolytope, primitive_vector

APoint = tuple[int, ...]


# -----------------------------------------------------------------------------
# Типы
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class Congruence:
    """f ≡ residue (mod modulus); modulus зависит от A только через a^ν."""

    modulus: LaurentPoly
    residue: LaurentPoly


@dataclass(frozen=True)
class InterpolationProblem:
    """Данные задачи: Δ, сдвиг λ, многочлен P и класс по модулю P.

    Класс задаётся либо ``target``, либо списком ``congruences`` по
    взаимно простым множителям P. ``factors`` — известное разложение P.
    """

    delta: LatticePolytope
    shift: tuple[Fraction, ...]
    P: LaurentPoly
    target: LaurentPoly | None = None
    congruences: tuple[Congruence, ...] = ()
    factors: tuple[LaurentPoly, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "shift", tuple(as_fraction(x) for x in self.shift))
        if self.target is None and not self.congruences:
            object.__setattr__(self, "target", LaurentPoly.zero(self.P.torus))
        if len(self.shift) != self.delta.ambient_dim:
            raise GeometryError("shift has wrong dimension")
        if not self.delta.contains_polytope(newton_polytope(self.P)):
            raise GeometryError("newton polytope of P is not contained in the window polytope")

    @property
    def torus(self) -> Torus:
        return self.P.torus

    @property
    def window(self) -> ShiftedPolytope:
        return ShiftedPolytope(self.delta, self.shift)

    def shift_is_integral(self) -> bool:
        return all(x.denominator == 1 for x in self.shift)


@dataclass
class InterpolationResult:
    f: LaurentPoly
    kernel: LaurentPoly | None
    free_parameters: int
    method: str
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class CohomologyVerdict:
    """H⁰ твистованного пучка на торе: 0 или одномерно с образующей a^λ."""

    dimension: int
    generator: APoint | None
    kernel_dimension: int

    @property
    def cross_checked(self) -> bool:
        return self.kernel_dimension == self.dimension

    @property
    def label(self) -> str:
        if self.dimension == 0:
            return "zero"
        return f"one-dimensional, generator a^{list(self.generator)}"


# -----------------------------------------------------------------------------
# Поле коэффициентов
# -----------------------------------------------------------------------------
class CoefficientField:
    """Q(t_c) с t_c = c^{1/2} для координат-параметров тора."""

    def __init__(self, torus: Torus):
        self.torus = torus
        self.params = torus.param_names
        self.symbols = [sp.Symbol(f"{name}_sqrt") for name in self.params]
        self.K = sp.QQ.frac_field(*self.symbols) if self.symbols else sp.QQ

    def _param_monomial(self, w: Weight) -> sp.Expr:
        expr = sp.Integer(1)
        for name, sym in zip(self.params, self.symbols):
            e = 2 * w.exps[self.torus.index(name)]
            if e.denominator != 1:
                raise AlgebraError(f"exponent of {name} must be half-integral, got {e / 2}")
            expr *= sym ** int(e)
        return expr

    def split(self, p: LaurentPoly) -> dict[APoint, object]:
        """A-показатель → коэффициент из K."""
        out: dict[APoint, object] = {}
        for w, c in p.terms.items():
            a = self.torus.project_a(w)
            if any(x.denominator != 1 for x in a):
                raise AlgebraError(f"fractional A-exponent in {p}")
            key = tuple(int(x) for x in a)
            value = self.K.from_sympy(c * self._param_monomial(w))
            out[key] = out[key] + value if key in out else value
        return {k: v for k, v in out.items() if v != self.K.zero}

    def join(self, coeffs: dict[APoint, object]) -> LaurentPoly:
        """Обратно в LaurentPoly; коэффициенты обязаны лежать в Z[t^{±1}]."""
        terms: dict[Weight, int] = {}
        for key, value in coeffs.items():
            if value == self.K.zero:
                continue
            base = self.torus.from_a(key)
            if not self.symbols:
                q = as_fraction(self.K.to_sympy(value))
                if q.denominator != 1:
                    raise AlgebraError(f"non-integral coefficient {q} at a^{list(key)}")
                terms[base] = terms.get(base, 0) + int(q)
                continue
            num, den = sp.fraction(sp.cancel(self.K.to_sympy(value)))
            den_poly = sp.Poly(den, *self.symbols)
            if len(den_poly.terms()) != 1:
                raise AlgebraError(f"coefficient {value} at a^{list(key)} is not a Laurent polynomial")
            (den_mon, den_c), = den_poly.terms()
            for mon, c in sp.Poly(num, *self.symbols).terms():
                q = as_fraction(sp.Rational(c)) / as_fraction(sp.Rational(den_c))
                if q.denominator != 1:
                    raise AlgebraError(f"non-integral coefficient {q} at a^{list(key)}")
                w = base
                for name, e_num, e_den in zip(self.params, mon, den_mon):
                    w = w + self.torus.coordinate(name, Fraction(e_num - e_den, 2))
                terms[w] = terms.get(w, 0) + int(q)
        return LaurentPoly(self.torus, terms)


# -----------------------------------------------------------------------------
# Вспомогательная линейная алгебра
# -----------------------------------------------------------------------------
def _solve(rows: list[list], rhs: list, ncols: int, K, column_order: Sequence[int] | None = None):
    """Частное решение (свободные переменные = 0) и базис ядра."""
    perm = list(column_order) if column_order is not None else list(range(ncols))
    if sorted(perm) != list(range(ncols)):
        raise SolverError("column_order must be a permutation of the unknowns")
    if not rows:
        null = [[K.one if i == j else K.zero for i in range(ncols)] for j in range(ncols)]
        return [K.zero] * ncols, null
    augmented = [[row[perm[j]] for j in range(ncols)] + [b] for row, b in zip(rows, rhs)]
    R, pivots = DomainMatrix(augmented, (len(augmented), ncols + 1), K).rref()
    R = R.to_list()
    if ncols in pivots:
        raise SolverError("interpolation infeasible: congruences and window are incompatible")
    sol_perm = [K.zero] * ncols
    for r, pc in enumerate(pivots):
        sol_perm[pc] = R[r][ncols]
    null_perm = []
    for fc in (j for j in range(ncols) if j not in pivots):
        v = [K.zero] * ncols
        v[fc] = K.one
        for r, pc in enumerate(pivots):
            v[pc] = -R[r][fc]
        null_perm.append(v)
    solution = [K.zero] * ncols
    for j, value in enumerate(sol_perm):
        solution[perm[j]] = value
    null = []
    for v in null_perm:
        u = [K.zero] * ncols
        for j, value in enumerate(v):
            u[perm[j]] = value
        null.append(u)
    return solution, null


def _coset(point: APoint, nu: APoint) -> tuple[APoint, int]:
    """Каноничный представитель класса point + Zν и номер m: point = rep + m·ν."""
    p = next(i for i, x in enumerate(nu) if x)
    m = point[p] // nu[p]
    return tuple(x - m * y for x, y in zip(point, nu)), m


def univariate_form(modulus: LaurentPoly, field: CoefficientField) -> tuple[APoint, list] | None:
    """Записать modulus как моном · P(y), y = a^ν; вернуть (ν, коэффициенты P).

    None — если modulus моном (единица). AlgebraError — если показатели не на одной прямой.
    """
    coeffs = field.split(modulus)
    if not coeffs:
        raise AlgebraError("zero modulus")
    points = sorted(coeffs)
    base = points[0]
    diffs = [tuple(x - y for x, y in zip(q, base)) for q in points[1:]]
    if not diffs:
        return None
    nu = primitive_vector(diffs[0])
    p = next(i for i, x in enumerate(nu) if x)
    if nu[p] < 0:
        nu = tuple(-x for x in nu)
    steps = {}
    for q, d in zip(points[1:], diffs):
        k = d[p] // nu[p]
        if tuple(k * x for x in nu) != d:
            raise AlgebraError(f"{modulus} is not univariate in a single character")
        steps[q] = k
    steps[base] = 0
    low = min(steps.values())
    degree = max(steps.values()) - low
    poly = [field.K.zero] * (degree + 1)
    for q, k in steps.items():
        poly[k - low] = coeffs[q]
    return nu, poly


def _remainders(poly: list, top: int, K) -> list[list]:
    """Остатки y^m mod poly(y) для m = 0..top, векторами длины deg poly."""
    D = len(poly) - 1
    lead = poly[D]
    rems = []
    for m in range(top + 1):
        if m < D:
            rems.append([K.one if d == m else K.zero for d in range(D)])
            continue
        prev = rems[m - 1]
        carry = prev[D - 1]
        cur = [K.zero] + prev[: D - 1]
        if carry != K.zero:
            cur = [c - carry * poly[d] / lead for d, c in enumerate(cur)]
        rems.append(cur)
    return rems


def _direction_system(points: list[APoint], congruences: Sequence[Congruence], field: CoefficientField):
    K = field.K
    index = {mu: k for k, mu in enumerate(points)}
    rows, rhs = [], []
    for cong in congruences:
        form = univariate_form(cong.modulus, field)
        if form is None:
            continue
        nu, poly = form
        D = len(poly) - 1
        if D == 0:
            continue
        residue = field.split(cong.residue)
        groups: dict[APoint, list[tuple[int, APoint | None, object]]] = defaultdict(list)
        for mu in points:
            rep, m = _coset(mu, nu)
            groups[rep].append((m, mu, None))
        for e, value in residue.items():
            rep, m = _coset(e, nu)
            groups[rep].append((m, None, value))
        for rep in sorted(groups):
            entries = groups[rep]
            low = min(m for m, _, _ in entries)
            rems = _remainders(poly, max(m for m, _, _ in entries) - low, K)
            for d in range(D):
                row = [K.zero] * len(points)
                const = K.zero
                for m, mu, value in entries:
                    r = rems[m - low][d]
                    if mu is not None:
                        row[index[mu]] = row[index[mu]] + r
                    else:
                        const = const + value * r
                rows.append(row)
                rhs.append(const)
    return rows, rhs


def _multiplier_support(hull: LatticePolytope, p_vertices: Sequence[tuple[Fraction, ...]]) -> list[APoint]:
    v0 = p_vertices[0]
    candidates = hull.lattice_points([-x for x in v0])
    return [x for x in candidates if all(hull.contains([a + b for a, b in zip(x, v)]) for v in p_vertices[1:])]


def _multiplier_system(points: list[APoint], P: LaurentPoly, target: LaurentPoly, hull_points, field):
    """Неизвестные: f на ``points`` и g на разности Минковского; уравнения f − P·g = target."""
    K = field.K
    p_coeffs = field.split(P)
    r_coeffs = field.split(target)
    hull = LatticePolytope(list(hull_points) + list(r_coeffs) + list(points))
    g_points = _multiplier_support(hull, newton_polytope(P).vertices)
    nf, ng = len(points), len(g_points)
    equations: dict[APoint, list] = {}

    def row_for(e: APoint) -> list:
        if e not in equations:
            equations[e] = [K.zero] * (nf + ng)
        return equations[e]

    for k, mu in enumerate(points):
        row_for(mu)[k] = K.one
    for k, x in enumerate(g_points):
        for p, c in p_coeffs.items():
            e = tuple(a + b for a, b in zip(x, p))
            row = row_for(e)
            row[nf + k] = row[nf + k] - c
    for e in r_coeffs:
        row_for(e)
    keys = sorted(equations)
    rows = [equations[e] for e in keys]
    rhs = [r_coeffs.get(e, K.zero) for e in keys]
    return rows, rhs, g_points


# -----------------------------------------------------------------------------
# Операции модуля
# -----------------------------------------------------------------------------
def is_nondegenerate(P: LaurentPoly, delta: LatticePolytope) -> bool:
    """В каждой вершине Δ коэффициент P — единица ±h^{k/2}."""
    torus = P.torus
    for v in delta.vertices:
        if any(x.denominator != 1 for x in v):
            return False
        shift = torus.from_a(v)
        coeff = LaurentPoly(torus, {w - shift: c for w, c in P.terms.items() if torus.project_a(w) == v})
        if not coeff.is_unit():
            return False
    return True


def factor_by_direction(P: LaurentPoly, factors: Sequence[LaurentPoly] = ()) -> dict[APoint, LaurentPoly] | None:
    """Сгруппировать множители P по неделимым направлениям ν.

    Без явных ``factors`` раскладываем через ``sympy.factor_list``. None — если
    какой-то множитель не зависит от A через одну переменную a^ν.
    """
    field = CoefficientField(P.torus)
    if not factors:
        factors = _sympy_factors(P, field)
    groups: dict[APoint, LaurentPoly] = {}
    for f in factors:
        try:
            form = univariate_form(f, field)
        except AlgebraError:
            return None
        if form is None:
            continue
        nu = form[0]
        groups[nu] = groups[nu] * f if nu in groups else f
    return groups


def _sympy_factors(P: LaurentPoly, field: CoefficientField) -> list[LaurentPoly]:
    torus = P.torus
    a_syms = [sp.Symbol(f"{name}_var") for name in torus.a_names]
    coeffs = field.split(P)
    if not coeffs:
        raise AlgebraError("cannot factor the zero polynomial")
    low = [min(k[i] for k in coeffs) for i in range(len(a_syms))]
    expr = sp.Integer(0)
    for key, value in coeffs.items():
        mono = sp.Integer(1)
        for sym, e, l in zip(a_syms, key, low):
            mono *= sym ** (e - l)
        expr += field.K.to_sympy(value) * mono
    expr = sp.together(expr)
    num, den = sp.fraction(expr)
    _, parts = sp.factor_list(num, *a_syms, *field.symbols)
    out = []
    for factor, mult in parts:
        if not factor.free_symbols & set(a_syms):
            continue
        poly = sp.Poly(factor, *a_syms)
        fc: dict[APoint, object] = {}
        for mon, c in poly.terms():
            fc[tuple(mon)] = field.K.from_sympy(c)
        lp = field.join(fc)
        out.extend([lp] * mult)
    return out


def _kernel_polynomial(prob: InterpolationProblem) -> LaurentPoly:
    lam = prob.torus.from_a([int(x) for x in prob.shift])
    return prob.P.scale_monomial(lam)


def _finish(prob, field, points, solution, null_f, method) -> InterpolationResult:
    K = field.K
    f = field.join({mu: solution[k] for k, mu in enumerate(points)})
    free = len(null_f)
    kernel = None
    warnings: list[str] = []
    if free:
        if prob.shift_is_integral() and prob.delta == newton_polytope(prob.P):
            kernel = _kernel_polynomial(prob)
            expected = field.split(kernel)
            vec = [expected.get(mu, K.zero) for mu in points]
            if free != 1 or not _proportional(vec, null_f[0], K):
                raise SolverError("solution space is not spanned by a^lambda * P")
            warnings.append("non-generic slope: integral shift, solution is not unique")
        else:
            warnings.append(f"solution space has {free} free parameters")
    return InterpolationResult(f=f, kernel=kernel, free_parameters=free, method=method, warnings=warnings)


def _proportional(u: list, v: list, K) -> bool:
    ratio = None
    for a, b in zip(u, v):
        if (a == K.zero) != (b == K.zero):
            return False
        if a == K.zero:
            continue
        r = a / b
        if ratio is None:
            ratio = r
        elif r != ratio:
            return False
    return ratio is not None


def interpolate(
    prob: InterpolationProblem,
    column_order: Sequence[int] | None = None,
    method: str = "auto",
) -> InterpolationResult:
    """Найти f ≡ target (mod P) с Newton(f) ⊆ Δ + λ.

    Args:
        prob: задача интерполяции.
        column_order: перестановка неизвестных (влияет на выбор опорных столбцов).
        method: ``auto``, ``direction`` или ``multiplier``.

    Returns:
        InterpolationResult: f, ядро a^λ·P при целом λ, число свободных параметров.

    Raises:
        AlgebraError: P вырожден.
        SolverError: система несовместна.
    """
    if not is_nondegenerate(prob.P, newton_polytope(prob.P)):
        raise AlgebraError(f"degenerate polynomial: vertex coefficients of {prob.P} are not units")
    field = CoefficientField(prob.torus)
    points = prob.window.lattice_points()

    congruences: Sequence[Congruence] | None = prob.congruences or None
    if congruences is None and method in ("auto", "direction"):
        groups = factor_by_direction(prob.P, prob.factors)
        if groups is not None:
            congruences = [Congruence(mod, prob.target) for _, mod in sorted(groups.items())]
        elif method == "direction":
            raise SolverError("P does not factor over single characters")
    if method == "multiplier" or congruences is None:
        if prob.congruences:
            raise SolverError("multiplier method needs an explicit target")
        return solve_by_multiplier(prob, column_order)

    rows, rhs = _direction_system(points, congruences, field)
    solution, null = _solve(rows, rhs, len(points), field.K, column_order)
    return _finish(prob, field, points, solution, null, "direction")


def solve_by_multiplier(prob: InterpolationProblem, column_order: Sequence[int] | None = None) -> InterpolationResult:
    """Независимый решатель: f − target = P·g, g на разности Минковского."""
    if prob.target is None or prob.congruences:
        raise SolverError("multiplier method needs an explicit target")
    field = CoefficientField(prob.torus)
    points = prob.window.lattice_points()
    hull_points = prob.window.as_polytope().vertices
    rows, rhs, g_points = _multiplier_system(points, prob.P, prob.target, hull_points, field)
    ncols = len(points) + len(g_points)
    order = None
    if column_order is not None:
        order = list(column_order) + list(range(len(points), ncols))
    solution, null = _solve(rows, rhs, ncols, field.K, order)
    null_f = [v[: len(points)] for v in null]
    null_f = [v for v in null_f if any(x != field.K.zero for x in v)]
    return _finish(prob, field, points, solution[: len(points)], null_f, "multiplier")


def is_multiple(g: LaurentPoly, P: LaurentPoly) -> bool:
    """Делится ли g на P в кольце Лорана (точная проверка линейной системой)."""
    if g.is_zero():
        return True
    field = CoefficientField(P.torus)
    g_coeffs = field.split(g)
    hull = LatticePolytope(list(g_coeffs))
    q_points = _multiplier_support(hull, newton_polytope(P).vertices)
    p_coeffs = field.split(P)
    K = field.K
    equations: dict[APoint, list] = {}
    for k, x in enumerate(q_points):
        for p, c in p_coeffs.items():
            e = tuple(a + b for a, b in zip(x, p))
            row = equations.setdefault(e, [K.zero] * len(q_points))
            row[k] = row[k] + c
    for e in g_coeffs:
        equations.setdefault(e, [K.zero] * len(q_points))
    keys = sorted(equations)
    if not q_points:
        return False
    try:
        _solve([equations[e] for e in keys], [g_coeffs.get(e, K.zero) for e in keys], len(q_points), K)
    except SolverError:
        return False
    return True


def shifted_cohomology(delta: LatticePolytope, lam: Sequence[Rational]) -> CohomologyVerdict:
    """H⁰(A, O(Δ_λ)) ⊗ ker: одномерно (образующая a^λ) iff λ целый, иначе 0.

    Вердикт сверяется с размерностью ядра отображения «по модулю P» для
    невырожденного P = Σ_{v ∈ vert Δ} a^v.

    Raises:
        GeometryError: Δ не полной размерности или не решёточный.
    """
    if not delta.is_full_dimensional():
        raise GeometryError("degenerate polytope: not full-dimensional")
    if not delta.is_lattice():
        raise GeometryError("polytope vertices must be integral")
    lam = tuple(as_fraction(x) for x in lam)
    d = delta.ambient_dim
    torus = Torus(tuple(f"x{i + 1}" for i in range(d)), tuple(f"x{i + 1}" for i in range(d)))
    P = LaurentPoly(torus, {torus.from_a(v): 1 for v in delta.vertices})
    prob = InterpolationProblem(delta, lam, P, target=LaurentPoly.zero(torus))
    result = solve_by_multiplier(prob)
    integral = all(x.denominator == 1 for x in lam)
    return CohomologyVerdict(
        dimension=1 if integral else 0,
        generator=tuple(int(x) for x in lam) if integral else None,
        kernel_dimension=result.free_parameters,
    )


def window_points(delta: LatticePolytope, lam: Sequence[Rational]) -> list[APoint]:
    return ShiftedPolytope(delta, tuple(as_fraction(x) for x in lam)).lattice_points()


__all__ = [
    "CoefficientField",
    "CohomologyVerdict",
    "Congruence",
    "InterpolationProblem",
    "InterpolationResult",
    "factor_by_direction",
    "interpolate",
    "is_multiple",
    "is_nondegenerate",
    "shifted_cohomology",
    "solve_by_multiplier",
    "univariate_form",
    "window_points",
]
