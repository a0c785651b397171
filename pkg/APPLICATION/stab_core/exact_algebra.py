# APPLICATION/stab_core/exact_algebra.py

"""
Точная арифметика stabforge.

* :class:`Torus` — именованные координаты тора T и выделенный подтор A;
* :class:`Weight` — характер тора с рациональными показателями;
* :class:`LaurentPoly` — многочлен Лорана над Z[h^{±1/2}] (h — обычная координата);
* :class:`TruncatedQSeries` — q-ряд с рациональными показателями, точный ниже порядка N;
* :class:`ThetaClass` — формальная сумма Θ(Σ n_μ a^μ) и её квадратичная форма степени.

Никакой плавающей точки: все показатели — ``Fraction``, коэффициенты — ``int``.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence, Union

import sympy as sp

from stab_core.errors import AlgebraError

if TYPE_CHECKING:
    from stab_core.lattice_geometry import LatticePolytope

Rational = Union[int, Fraction, str]

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def as_fraction(value: Rational | sp.Rational) -> Fraction:
    """Привести int / str ("2/5") / sympy.Rational к ``Fraction``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, sp.Rational):
        return Fraction(int(value.p), int(value.q))
    raise AlgebraError(f"not an exact rational: {value!r}")


def lcm_of_denominators(values: Iterable[Fraction]) -> int:
    return reduce(math.lcm, (Fraction(v).denominator for v in values), 1)


# -----------------------------------------------------------------------------
# Характеры
# -----------------------------------------------------------------------------
@dataclass(frozen=True, order=True)
class Weight:
    """Вектор показателей характера в координатах тора (порядок задаёт Torus)."""

    exps: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "exps", tuple(as_fraction(e) for e in self.exps))

    def __len__(self) -> int:
        return len(self.exps)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.exps)

    def __getitem__(self, i: int) -> Fraction:
        return self.exps[i]

    def __add__(self, other: "Weight") -> "Weight":
        return Weight(tuple(x + y for x, y in zip(self.exps, other.exps, strict=True)))

    def __sub__(self, other: "Weight") -> "Weight":
        return Weight(tuple(x - y for x, y in zip(self.exps, other.exps, strict=True)))

    def __neg__(self) -> "Weight":
        return Weight(tuple(-x for x in self.exps))

    def scale(self, c: Rational) -> "Weight":
        c = as_fraction(c)
        return Weight(tuple(c * x for x in self.exps))

    def is_zero(self) -> bool:
        return not any(self.exps)

    def is_integral(self) -> bool:
        return all(e.denominator == 1 for e in self.exps)

    @property
    def denominator(self) -> int:
        return lcm_of_denominators(self.exps)


# -----------------------------------------------------------------------------
# Тор с именованными координатами
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class Torus:
    """Координаты тора T (``names``) и подтор A (``a_names`` ⊆ ``names``).

    Координаты вне A (обычно ``h`` и ``z``) играют роль параметров кольца
    коэффициентов: их показатели могут быть полуцелыми.
    """

    names: tuple[str, ...]
    a_names: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "a_names", tuple(self.a_names))
        if len(set(self.names)) != len(self.names):
            raise AlgebraError(f"duplicate torus coordinates: {self.names}")
        for name in self.names:
            if not _NAME_RE.match(name):
                raise AlgebraError(f"bad coordinate name: {name!r}")
        missing = [a for a in self.a_names if a not in self.names]
        if missing:
            raise AlgebraError(f"A-coordinates {missing} are not torus coordinates")

    @property
    def rank(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise AlgebraError(f"unknown coordinate {name!r}") from None

    @property
    def a_indices(self) -> tuple[int, ...]:
        return tuple(self.index(a) for a in self.a_names)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.names if n not in self.a_names)

    def zero(self) -> Weight:
        return Weight((Fraction(0),) * self.rank)

    def coordinate(self, name: str, power: Rational = 1) -> Weight:
        exps = [Fraction(0)] * self.rank
        exps[self.index(name)] = as_fraction(power)
        return Weight(tuple(exps))

    def from_a(self, vector: Sequence[Rational]) -> Weight:
        """Характер с заданной A-частью и нулевыми параметрами."""
        if len(vector) != len(self.a_names):
            raise AlgebraError("A-vector has wrong length")
        exps = [Fraction(0)] * self.rank
        for i, v in zip(self.a_indices, vector):
            exps[i] = as_fraction(v)
        return Weight(tuple(exps))

    def project_a(self, w: Weight) -> tuple[Fraction, ...]:
        return tuple(w.exps[i] for i in self.a_indices)

    def project(self, w: Weight, coords: Sequence[str]) -> tuple[Fraction, ...]:
        return tuple(w.exps[self.index(c)] for c in coords)

    def weight(self, spec: "Weight | str | Mapping[str, Rational] | Sequence[Rational]") -> Weight:
        if isinstance(spec, Weight):
            if len(spec) != self.rank:
                raise AlgebraError("weight has wrong length for this torus")
            return spec
        if isinstance(spec, str):
            return self.parse_weight(spec)
        if isinstance(spec, Mapping):
            w = self.zero()
            for name, e in spec.items():
                w = w + self.coordinate(name, e)
            return w
        if len(spec) != self.rank:
            raise AlgebraError("weight has wrong length for this torus")
        return Weight(tuple(spec))

    def format_weight(self, w: Weight) -> str:
        parts = []
        for name, e in zip(self.names, w.exps):
            if e == 0:
                continue
            parts.append(name if e == 1 else f"{name}^{e}")
        return "*".join(parts) if parts else "1"

    def parse_weight(self, text: str) -> Weight:
        p = self.parse_poly(text)
        terms = p.terms
        if len(terms) != 1 or next(iter(terms.values())) != 1:
            raise AlgebraError(f"{text!r} is not a monomial character")
        return next(iter(terms))

    def parse_poly(self, text: str) -> "LaurentPoly":
        return _PolyParser(self, text).parse()

    def one(self) -> "LaurentPoly":
        return LaurentPoly.constant(self, 1)

    def monomial(self, w: "Weight | str", coeff: int = 1) -> "LaurentPoly":
        return LaurentPoly.monomial(self, self.weight(w), coeff)


# -----------------------------------------------------------------------------
# Многочлены Лорана
# -----------------------------------------------------------------------------
def _grlex_key(w: Weight) -> tuple:
    return (sum(w.exps), w.exps)


class LaurentPoly:
    """Конечная сумма Σ c_w x^w с целыми c_w ≠ 0 и рациональными показателями.

    Значение неизменяемо; порядок членов — градуированный лексикографический.
    """

    __slots__ = ("torus", "_terms", "_hash")

    def __init__(self, torus: Torus, terms: Mapping[Weight, int] | None = None):
        clean: dict[Weight, int] = {}
        for w, c in (terms or {}).items():
            if len(w) != torus.rank:
                raise AlgebraError("term exponent has wrong length")
            if int(c) != c:
                raise AlgebraError(f"non-integral coefficient {c}")
            clean[w] = clean.get(w, 0) + int(c)
        self.torus = torus
        self._terms = {w: c for w, c in clean.items() if c}
        self._hash: int | None = None

    # --- конструкторы --------------------------------------------------------
    @classmethod
    def monomial(cls, torus: Torus, w: Weight, coeff: int = 1) -> "LaurentPoly":
        return cls(torus, {w: coeff})

    @classmethod
    def constant(cls, torus: Torus, c: int) -> "LaurentPoly":
        return cls(torus, {torus.zero(): c})

    @classmethod
    def zero(cls, torus: Torus) -> "LaurentPoly":
        return cls(torus, {})

    # --- доступ ---------------------------------------------------------------
    @property
    def terms(self) -> dict[Weight, int]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[Weight, int]]:
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]))

    def coefficient(self, w: Weight) -> int:
        return self._terms.get(w, 0)

    def support(self) -> list[Weight]:
        return sorted(self._terms, key=_grlex_key)

    def a_support(self) -> list[tuple[Fraction, ...]]:
        return sorted({self.torus.project_a(w) for w in self._terms})

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def is_unit(self) -> bool:
        """±(моном от параметров): обратимые элементы Z[h^{±1/2}]."""
        if len(self._terms) != 1:
            return False
        (w, c), = self._terms.items()
        return abs(c) == 1 and not any(self.torus.project_a(w))

    # --- арифметика ------------------------------------------------------------
    def _coerce(self, other: "LaurentPoly | int") -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            if other.torus != self.torus:
                raise AlgebraError("polynomials live on different tori")
            return other
        if isinstance(other, int):
            return LaurentPoly.constant(self.torus, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for w, c in other._terms.items():
            terms[w] = terms.get(w, 0) + c
        return LaurentPoly(self.torus, terms)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly(self.torus, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[Weight, int] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                w = w1 + w2
                terms[w] = terms.get(w, 0) + c1 * c2
        return LaurentPoly(self.torus, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentPoly":
        if k < 0:
            return self.inverse() ** (-k)
        result = LaurentPoly.constant(self.torus, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse(self) -> "LaurentPoly":
        if not self.is_monomial() or abs(next(iter(self._terms.values()))) != 1:
            raise AlgebraError(f"{self} is not invertible")
        (w, c), = self._terms.items()
        return LaurentPoly(self.torus, {-w: c})

    def scale_monomial(self, w: Weight, coeff: int = 1) -> "LaurentPoly":
        return LaurentPoly(self.torus, {v + w: c * coeff for v, c in self._terms.items()})

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = LaurentPoly.constant(self.torus, other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.torus == other.torus and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.torus, frozenset(self._terms.items())))
        return self._hash

    # --- преобразования --------------------------------------------------------
    def substitute(self, images: Mapping[str, Weight], target: Torus | None = None) -> "LaurentPoly":
        """Подстановка координата ↦ моном (в торе ``target``, по умолчанию в том же)."""
        target = target or self.torus
        terms: dict[Weight, int] = {}
        for w, c in self._terms.items():
            new = target.zero()
            for name, e in zip(self.torus.names, w.exps):
                if e == 0:
                    continue
                if name in images:
                    new = new + images[name].scale(e)
                else:
                    new = new + target.coordinate(name, e)
            terms[new] = terms.get(new, 0) + c
        return LaurentPoly(target, terms)

    def monomial_ratio(self, other: "LaurentPoly") -> tuple[int, Weight] | None:
        """Найти (c, w) с self = c·x^w·other, иначе None."""
        if self.is_zero() or other.is_zero() or len(self) != len(other):
            return None
        (w1, c1), (w2, c2) = self.sorted_terms()[0], other.sorted_terms()[0]
        if c1 % c2:
            return None
        c, shift = c1 // c2, w1 - w2
        if other.scale_monomial(shift, c) == self:
            return c, shift
        return None

    def divisible_by_binomial(self, v: Weight, c: int = 1) -> bool:
        """Делится ли многочлен на 1 − c·x^v, c = ±1 (проверка по смежным классам Zv)."""
        if v.is_zero():
            raise AlgebraError("binomial with zero exponent")
        if c not in (1, -1):
            raise AlgebraError("binomial coefficient must be a unit")
        p = next(i for i, e in enumerate(v.exps) if e != 0)
        sums: dict[Weight, int] = {}
        for w, coeff in self._terms.items():
            m = math.floor(w.exps[p] / v.exps[p])
            rep = w - v.scale(m)
            # x^w = x^{rep}·(x^v)^m ≡ c^m·x^{rep}
            sign = -1 if c == -1 and m % 2 else 1
            sums[rep] = sums.get(rep, 0) + sign * coeff
        return not any(sums.values())

    def to_string(self) -> str:
        if not self._terms:
            return "0"
        chunks: list[str] = []
        for w, c in self.sorted_terms():
            mono = self.torus.format_weight(w)
            if mono == "1":
                body = str(abs(c))
            elif abs(c) == 1:
                body = mono
            else:
                body = f"{abs(c)}*{mono}"
            if not chunks:
                chunks.append(body if c > 0 else f"-{body}")
            else:
                chunks.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(chunks)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"LaurentPoly({self.to_string()!r})"


class _PolyParser:
    """Разбор строк вида ``-h^-1/2*a2/a1 + h^1/2`` или ``a1/(h*a2)``."""

    _TOKEN = re.compile(
        r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
        r"|\^(?P<exp>-?\d+(?:/\d+)?)|(?P<op>[-+*/()]))"
    )

    def __init__(self, torus: Torus, text: str):
        self.torus = torus
        self.text = text
        self.tokens: list[tuple[str, str]] = []
        pos = 0
        stripped = text.strip()
        while pos < len(stripped):
            m = self._TOKEN.match(stripped, pos)
            if not m or m.end() == pos:
                raise AlgebraError(f"cannot parse {text!r} at position {pos}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind)))
            pos = m.end()
        self.i = 0

    def _peek(self) -> tuple[str, str] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _take(self) -> tuple[str, str]:
        tok = self._peek()
        if tok is None:
            raise AlgebraError(f"unexpected end of {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> LaurentPoly:
        if not self.tokens:
            raise AlgebraError("empty expression")
        result = self._sum()
        if self._peek() is not None:
            raise AlgebraError(f"trailing input in {self.text!r}")
        return result

    def _sum(self) -> LaurentPoly:
        sign = 1
        if self._peek() in (("op", "-"), ("op", "+")):
            sign = -1 if self._take()[1] == "-" else 1
        total = self._product() * sign
        while self._peek() in (("op", "-"), ("op", "+")):
            op = self._take()[1]
            term = self._product()
            total = total + term if op == "+" else total - term
        return total

    def _product(self) -> LaurentPoly:
        value = self._power()
        while self._peek() in (("op", "*"), ("op", "/")):
            op = self._take()[1]
            rhs = self._power()
            value = value * rhs if op == "*" else value * rhs.inverse()
        return value

    def _power(self) -> LaurentPoly:
        base = self._atom()
        tok = self._peek()
        if tok and tok[0] == "exp":
            self._take()
            e = Fraction(tok[1])
            if e.denominator == 1 and e >= 0:
                return base ** int(e)
            if not base.is_monomial():
                raise AlgebraError(f"fractional or negative power of a non-monomial in {self.text!r}")
            (w, c), = base.terms.items()
            if c != 1:
                raise AlgebraError(f"fractional power of a coefficient in {self.text!r}")
            return LaurentPoly.monomial(self.torus, w.scale(e))
        return base

    def _atom(self) -> LaurentPoly:
        kind, value = self._take()
        if kind == "int":
            return LaurentPoly.constant(self.torus, int(value))
        if kind == "name":
            return LaurentPoly.monomial(self.torus, self.torus.coordinate(value))
        if (kind, value) == ("op", "("):
            inner = self._sum()
            if self._take() != ("op", ")"):
                raise AlgebraError(f"unbalanced parentheses in {self.text!r}")
            return inner
        raise AlgebraError(f"unexpected token {value!r} in {self.text!r}")


# -----------------------------------------------------------------------------
# Операции модуля
# -----------------------------------------------------------------------------
def koszul_from_weights(torus: Torus, weights: Iterable[Weight]) -> LaurentPoly:
    """Π_w (1 − x^{−w}) = Σ_k (−1)^k Λ^k N^∨.

    Raises:
        AlgebraError: вес тривиален на A ("fixed direction in normal bundle").
    """
    result = torus.one()
    for w in weights:
        if not any(torus.project_a(w)):
            raise AlgebraError(f"fixed direction in normal bundle: {torus.format_weight(w)}")
        result = result * (torus.one() - LaurentPoly.monomial(torus, -w))
    return result


def newton_polytope(p: LaurentPoly, subtorus: Sequence[str] | None = None) -> "LatticePolytope":
    """Выпуклая оболочка показателей, спроектированных на координаты подтора."""
    from stab_core.lattice_geometry import LatticePolytope

    if p.is_zero():
        raise AlgebraError("empty polytope")
    coords = tuple(subtorus) if subtorus is not None else p.torus.a_names
    return LatticePolytope({p.torus.project(w, coords) for w in p.terms})


def restrict_to_subtorus(
    p: LaurentPoly,
    projection: Sequence[Sequence[Rational]],
    target: Torus,
) -> LaurentPoly:
    """Протолкнуть показатели через линейное отображение решёток.

    ``projection`` — матрица (строки = координаты ``target``, столбцы = координаты ``p.torus``).
    """
    if len(projection) != target.rank or any(len(row) != p.torus.rank for row in projection):
        raise AlgebraError("projection matrix has wrong shape")
    matrix = [[as_fraction(x) for x in row] for row in projection]
    terms: dict[Weight, int] = {}
    for w, c in p.terms.items():
        image = Weight(tuple(sum((r * e for r, e in zip(row, w.exps)), Fraction(0)) for row in matrix))
        terms[image] = terms.get(image, 0) + c
    return LaurentPoly(target, terms)


def restrict_weight(w: Weight, projection: Sequence[Sequence[Rational]]) -> Weight:
    return Weight(tuple(sum((as_fraction(r) * e for r, e in zip(row, w.exps)), Fraction(0)) for row in projection))


def monomial_sqrt(torus: Torus, w: Weight) -> Weight:
    """Квадратный корень монома: A-часть обязана остаться целой, параметры — полуцелые."""
    half = w.scale(Fraction(1, 2))
    if any(e.denominator != 1 for e in torus.project_a(half)):
        raise AlgebraError(f"non-square determinant ratio: {torus.format_weight(w)}")
    for name in torus.param_names:
        if half.exps[torus.index(name)].denominator > 2:
            raise AlgebraError(f"non-square determinant ratio: {torus.format_weight(w)}")
    return half


# -----------------------------------------------------------------------------
# Усечённые q-ряды
# -----------------------------------------------------------------------------
class TruncatedQSeries:
    """Σ_e c_e q^e, e ∈ Q, известный точно для e < order."""

    __slots__ = ("torus", "order", "_coeffs")

    def __init__(self, torus: Torus, coeffs: Mapping[Rational, LaurentPoly], order: Rational):
        self.torus = torus
        self.order = as_fraction(order)
        clean: dict[Fraction, LaurentPoly] = {}
        for e, c in coeffs.items():
            e = as_fraction(e)
            if e >= self.order or c.is_zero():
                continue
            clean[e] = clean[e] + c if e in clean else c
        self._coeffs = {e: c for e, c in clean.items() if not c.is_zero()}

    @classmethod
    def from_poly(cls, poly: LaurentPoly, order: Rational, q_exp: Rational = 0) -> "TruncatedQSeries":
        return cls(poly.torus, {as_fraction(q_exp): poly}, order)

    @property
    def coefficients(self) -> dict[Fraction, LaurentPoly]:
        return dict(sorted(self._coeffs.items()))

    def coefficient(self, e: Rational) -> LaurentPoly:
        e = as_fraction(e)
        if e >= self.order:
            raise AlgebraError(f"coefficient of q^{e} is beyond truncation order {self.order}")
        return self._coeffs.get(e, LaurentPoly.zero(self.torus))

    @property
    def valuation(self) -> Fraction:
        return min(self._coeffs) if self._coeffs else self.order

    def is_zero(self) -> bool:
        return not self._coeffs

    def truncate(self, order: Rational) -> "TruncatedQSeries":
        order = as_fraction(order)
        if order > self.order:
            raise AlgebraError(f"cannot raise precision from {self.order} to {order}")
        return TruncatedQSeries(self.torus, self._coeffs, order)

    def shift(self, q_exp: Rational = 0, monomial: LaurentPoly | None = None) -> "TruncatedQSeries":
        """Умножить на q^e·m, где m — ±моном (порядок сдвигается на e)."""
        q_exp = as_fraction(q_exp)
        m = monomial if monomial is not None else self.torus.one()
        if not m.is_monomial():
            raise AlgebraError("shift requires a monomial")
        return TruncatedQSeries(
            self.torus, {e + q_exp: c * m for e, c in self._coeffs.items()}, self.order + q_exp
        )

    def _coerce(self, other) -> "TruncatedQSeries":
        if isinstance(other, TruncatedQSeries):
            if other.torus != self.torus:
                raise AlgebraError("series live on different tori")
            return other
        if isinstance(other, int):
            other = LaurentPoly.constant(self.torus, other)
        if isinstance(other, LaurentPoly):
            return TruncatedQSeries(self.torus, {0: other}, self.order)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        order = min(self.order, other.order)
        coeffs = dict(self._coeffs)
        for e, c in other._coeffs.items():
            coeffs[e] = coeffs[e] + c if e in coeffs else c
        return TruncatedQSeries(self.torus, coeffs, order)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedQSeries":
        return TruncatedQSeries(self.torus, {e: -c for e, c in self._coeffs.items()}, self.order)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (LaurentPoly, int)):
            factor = other if isinstance(other, LaurentPoly) else LaurentPoly.constant(self.torus, other)
            return TruncatedQSeries(self.torus, {e: c * factor for e, c in self._coeffs.items()}, self.order)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        order = min(self.order, other.order, self.order + other.valuation, other.order + self.valuation)
        coeffs: dict[Fraction, LaurentPoly] = {}
        for e1, c1 in self._coeffs.items():
            for e2, c2 in other._coeffs.items():
                e = e1 + e2
                if e >= order:
                    continue
                coeffs[e] = coeffs[e] + c1 * c2 if e in coeffs else c1 * c2
        return TruncatedQSeries(self.torus, coeffs, order)

    __rmul__ = __mul__

    def inverse(self) -> "TruncatedQSeries":
        """Обращение ряда со старшим коэффициентом ±моном; точность N − 2v."""
        if self.is_zero():
            raise AlgebraError("cannot invert a series that vanishes to its truncation order")
        v = self.valuation
        lead = self._coeffs[v]
        if not lead.is_monomial() or abs(next(iter(lead.terms.values()))) != 1:
            raise AlgebraError(f"leading coefficient {lead} is not a unit monomial")
        lead_inv = lead.inverse()
        order = self.order - 2 * v
        # self = lead·q^v·(1 + r), r имеет положительные показатели
        r = TruncatedQSeries(
            self.torus, {e - v: c * lead_inv for e, c in self._coeffs.items() if e != v}, self.order - v
        )
        if r.is_zero():
            series = TruncatedQSeries(self.torus, {0: self.torus.one()}, self.order - v)
        else:
            step = r.valuation
            series = TruncatedQSeries(self.torus, {0: self.torus.one()}, self.order - v)
            power = series
            for _ in range(int(math.ceil((self.order - v) / step)) + 1):
                power = power * (-r)
                if power.is_zero():
                    break
                series = series + power
        return series.shift(-v, lead_inv).truncate(order)

    def agrees_with(self, other: "TruncatedQSeries", order: Rational | None = None) -> bool:
        n = min(self.order, other.order) if order is None else as_fraction(order)
        if n > min(self.order, other.order):
            return False
        return self.truncate(n)._coeffs == other.truncate(n)._coeffs

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedQSeries):
            return NotImplemented
        return self.torus == other.torus and self.order == other.order and self._coeffs == other._coeffs

    __hash__ = None  # type: ignore[assignment]

    def to_dict(self) -> dict[str, str]:
        return {str(e): c.to_string() for e, c in sorted(self._coeffs.items())}

    def __str__(self) -> str:
        parts = []
        for e, c in sorted(self._coeffs.items()):
            parts.append(f"({c})" if e == 0 else f"({c})*q^{e}")
        parts.append(f"O(q^{self.order})")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"TruncatedQSeries({self})"


# -----------------------------------------------------------------------------
# Θ-классы и их степени
# -----------------------------------------------------------------------------
class ThetaClass:
    """Формальная Z-комбинация характеров, Θ(Σ n_μ a^μ)."""

    __slots__ = ("torus", "counts")

    def __init__(self, torus: Torus, counts: Mapping[Weight, int] | None = None):
        self.torus = torus
        self.counts = Counter({w: n for w, n in (counts or {}).items() if n})

    @classmethod
    def from_weights(cls, torus: Torus, weights: Iterable[Weight], mult: int = 1) -> "ThetaClass":
        counts: Counter = Counter()
        for w in weights:
            counts[w] += mult
        return cls(torus, counts)

    def __add__(self, other: "ThetaClass") -> "ThetaClass":
        counts = Counter(self.counts)
        for w, n in other.counts.items():
            counts[w] += n
        return ThetaClass(self.torus, counts)

    def __neg__(self) -> "ThetaClass":
        return ThetaClass(self.torus, {w: -n for w, n in self.counts.items()})

    def __sub__(self, other: "ThetaClass") -> "ThetaClass":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThetaClass):
            return NotImplemented
        mine = {w: n for w, n in self.counts.items() if n}
        theirs = {w: n for w, n in other.counts.items() if n}
        return self.torus == other.torus and mine == theirs

    __hash__ = None  # type: ignore[assignment]

    def dual(self) -> "ThetaClass":
        return ThetaClass(self.torus, {-w: n for w, n in self.counts.items()})

    @property
    def rank(self) -> int:
        return sum(self.counts.values())

    def restricted_counts(self, coords: Sequence[str]) -> Counter:
        """Кратности после ограничения характеров на координаты ``coords``."""
        out: Counter = Counter()
        for w, n in self.counts.items():
            out[self.torus.project(w, coords)] += n
        return Counter({k: v for k, v in out.items() if v})

    def degree(self, subtorus: Sequence[str] | None = None) -> sp.ImmutableMatrix:
        return theta_degree(self, subtorus)

    def to_strings(self) -> dict[str, int]:
        return {self.torus.format_weight(w): n for w, n in sorted(self.counts.items())}


def theta_degree(c: ThetaClass, subtorus: Sequence[str] | None = None) -> sp.ImmutableMatrix:
    """deg Θ(Σ n_μ a^μ) = Σ n_μ μ⊗μ, ограниченная на кохарактеры подтора."""
    coords = tuple(subtorus) if subtorus is not None else c.torus.a_names
    d = len(coords)
    entries = [[sp.Integer(0)] * d for _ in range(d)]
    for w, n in c.counts.items():
        mu = [sp.Rational(e.numerator, e.denominator) for e in c.torus.project(w, coords)]
        for i in range(d):
            if mu[i] == 0:
                continue
            for j in range(d):
                entries[i][j] += n * mu[i] * mu[j]
    return sp.ImmutableMatrix(d, d, lambda i, j: entries[i][j])


def kahler_class(V: ThetaClass, z: Weight) -> ThetaClass:
    """𝒰(V, z) = Θ((z − 1)(V − C^{rk V}))."""
    torus = V.torus
    counts: Counter = Counter()
    for v, n in V.counts.items():
        counts[v + z] += n
        counts[v] -= n
    counts[z] -= V.rank
    counts[torus.zero()] += V.rank
    return ThetaClass(torus, counts)
