# APPLICATION/app/models.py

"""
Загрузка и выгрузка моделей: встроенные семейства, файлы JSON/YAML
(GKM-модели и данные инерции), разбор камер и линейных форм.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from tokenize import TokenError
from typing import Any

import sympy as sp
import yaml
from pydantic import ValidationError
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication,
    parse_expr,
    standard_transformations,
)

from app.config import DATA_DIR
from app.schemas import (
    EdgeSpec,
    FixedPointSpec,
    InertiaSpec,
    ModelSpec,
    RunConfig,
    SchemaError,
    schema_error_from,
)
from stab_core.degeneration import InertiaData, InertiaGroup
from stab_core.errors import StabforgeError
from stab_core.exact_algebra import Torus, Weight
from stab_core.gkm_model import Edge, FixedPoint, GKMModel, builtin
from stab_core.lattice_geometry import Chamber

LINEAR_FORM_TRANSFORMATIONS = standard_transformations + (implicit_multiplication, convert_xor)


# -----------------------------------------------------------------------------
# Чтение файлов
# -----------------------------------------------------------------------------
def read_document(path: Path) -> Any:
    """JSON или YAML по расширению файла."""
    text = Path(path).read_text(encoding="utf-8")
    if Path(path).suffix.lower() in (".yaml", ".yml"):
        return yaml.safe_load(text)
    return json.loads(text)


def _weight(torus: Torus, text: str, pointer: str) -> Weight:
    try:
        return torus.parse_weight(text)
    except StabforgeError as exc:
        raise SchemaError(pointer, str(exc)) from None


def model_from_spec(spec: ModelSpec) -> GKMModel:
    """
    Собрать GKMModel из провалидированной схемы.

    Raises:
        SchemaError: нераспознанный вес или несогласованная модель (указатель на место).
    """
    try:
        torus = Torus(tuple(spec.coordinates), tuple(spec.a_coordinates))
    except StabforgeError as exc:
        raise SchemaError("/coordinates", str(exc)) from None

    points = []
    for k, fp in enumerate(spec.fixed_points):
        base = f"/fixed_points/{k}"
        tangent = tuple(_weight(torus, w, f"{base}/tangent/{i}") for i, w in enumerate(fp.tangent))
        polarization = None
        if fp.polarization is not None:
            polarization = tuple(
                _weight(torus, w, f"{base}/polarization/{i}") for i, w in enumerate(fp.polarization)
            )
        try:
            coeff = Fraction(fp.slope_coeff)
        except (ValueError, ZeroDivisionError):
            raise SchemaError(f"{base}/slope_coeff", f"{fp.slope_coeff!r} is not rational") from None
        points.append(
            FixedPoint(
                name=fp.name,
                tangent=tangent,
                ample=_weight(torus, fp.ample, f"{base}/ample"),
                polarization=polarization,
                slope=_weight(torus, fp.slope, f"{base}/slope") if fp.slope is not None else None,
                slope_coeff=coeff,
            )
        )
    edges = tuple(
        Edge(e.source, e.target, _weight(torus, e.weight, f"/edges/{k}/weight"))
        for k, e in enumerate(spec.edges)
    )
    try:
        return GKMModel(torus, tuple(points), edges, name=spec.name)
    except StabforgeError as exc:
        raise SchemaError("/fixed_points", str(exc)) from None


def model_to_spec(model: GKMModel) -> ModelSpec:
    torus = model.torus
    fmt = torus.format_weight
    return ModelSpec(
        name=model.name,
        coordinates=list(torus.names),
        a_coordinates=list(torus.a_names),
        fixed_points=[
            FixedPointSpec(
                name=p.name,
                tangent=[fmt(w) for w in p.tangent],
                ample=fmt(p.ample),
                polarization=[fmt(w) for w in p.polarization] if p.polarization is not None else None,
                slope=fmt(p.slope) if p.slope is not None else None,
                slope_coeff=str(p.slope_coeff),
            )
            for p in model.fixed_points
        ],
        edges=[EdgeSpec(source=e.source, target=e.target, weight=fmt(e.weight)) for e in model.edges],
    )


def inertia_from_spec(spec: InertiaSpec) -> InertiaData:
    groups = tuple(
        InertiaGroup(
            name=g.name,
            perp=tuple(tuple(c) for c in g.perp),
            components=tuple(g.components),
            inside=dict(g.inside),
        )
        for g in spec.groups
    )
    return InertiaData(spec.rank, groups, name=spec.name)


def load_document(path: Path) -> GKMModel | InertiaData:
    """
    Прочитать файл модели (``kind: gkm`` по умолчанию или ``kind: inertia``).

    Raises:
        SchemaError: ошибка схемы с JSON-указателем.
    """
    raw = read_document(path)
    if not isinstance(raw, dict):
        raise SchemaError("", "model file must contain an object")
    try:
        if raw.get("kind") == "inertia":
            return inertia_from_spec(InertiaSpec.model_validate(raw))
        return model_from_spec(ModelSpec.model_validate(raw))
    except ValidationError as exc:
        raise schema_error_from(exc) from None


def load_model(path: Path) -> GKMModel:
    doc = load_document(path)
    if not isinstance(doc, GKMModel):
        raise SchemaError("/kind", "expected a GKM model")
    return doc


def resolve_source(config: RunConfig) -> GKMModel | InertiaData:
    if config.builtin is not None:
        return builtin(config.builtin, config.n)
    return load_document(config.model)


def stored_example(name: str) -> Path:
    """Путь к примеру из app/data (например, ``p2.yaml``)."""
    return DATA_DIR / name


# -----------------------------------------------------------------------------
# Камеры и линейные формы
# -----------------------------------------------------------------------------
def parse_chamber(text: str | None, torus: Torus) -> Chamber:
    """``perm:2,1,3`` (1-based), ``cochar:2,1,0`` или None — стандартная камера."""
    if text is None:
        return Chamber.standard(torus)
    kind, _, body = text.partition(":")
    try:
        values = [int(x) for x in body.split(",") if x.strip()]
    except ValueError:
        raise SchemaError("/chamber", f"cannot parse {text!r}") from None
    if kind not in ("perm", "cochar"):
        raise SchemaError("/chamber", f"unknown chamber kind {kind!r}; use perm: or cochar:")
    try:
        if kind == "perm":
            return Chamber.from_permutation(torus, values)
        return Chamber(torus, tuple(values))
    except StabforgeError as exc:
        raise SchemaError("/chamber", str(exc)) from None


def parse_face(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise SchemaError("/face", f"cannot parse {text!r}") from None


def parse_linear_forms(text: str) -> tuple[list[str], list[tuple[int, ...]]]:
    """
    Разобрать ``"2x,y,x-y"`` в целые векторы по переменным в алфавитном порядке.

    Raises:
        SchemaError: форма не линейна или коэффициенты не целые.
    """
    pieces = [p.strip() for p in text.split(",") if p.strip()]
    if not pieces:
        raise SchemaError("/weights", "no linear forms given")
    exprs = []
    for k, piece in enumerate(pieces):
        try:
            exprs.append(parse_expr(piece, transformations=LINEAR_FORM_TRANSFORMATIONS))
        except (sp.SympifyError, SyntaxError, TokenError, TypeError):
            raise SchemaError(f"/weights/{k}", f"cannot parse {piece!r}") from None
    symbols = sorted({s for e in exprs for s in e.free_symbols}, key=lambda s: s.name)
    if not symbols:
        raise SchemaError("/weights", "linear forms have no variables")
    vectors = []
    for k, e in enumerate(exprs):
        poly = sp.Poly(e, *symbols)
        if poly.total_degree() != 1 or poly.coeff_monomial(1) != 0:
            raise SchemaError(f"/weights/{k}", f"{pieces[k]!r} is not a linear form")
        coeffs = [poly.coeff_monomial(s) for s in symbols]
        if any(not sp.sympify(c).is_integer for c in coeffs):
            raise SchemaError(f"/weights/{k}", f"{pieces[k]!r} has non-integral coefficients")
        vectors.append(tuple(int(c) for c in coeffs))
    return [s.name for s in symbols], vectors
