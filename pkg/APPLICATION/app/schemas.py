# APPLICATION/app/schemas.py

"""Pydantic-схемы входных файлов моделей, конфигурации запуска и всех JSON-артефактов."""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Literal

from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

SCHEMA_VERSION = 1
MAX_SLOPE_DENOMINATOR = 10**6

COMMANDS = ("stab", "verify", "resonance", "tessellate", "floors", "theta-check", "nodal-limit", "attractive")
MODEL_COMMANDS = {"stab", "verify", "resonance", "nodal-limit", "attractive"}


class SchemaError(ValueError):
    """Ошибка входного файла с JSON-указателем на место."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"schema error at {pointer or '/'}: {message}")
        self.pointer = pointer


def json_pointer(loc: tuple) -> str:
    return "".join(f"/{part}" for part in loc)


def schema_error_from(exc: ValidationError) -> SchemaError:
    first = exc.errors()[0]
    return SchemaError(json_pointer(tuple(first["loc"])), first["msg"])


class Versioned(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    schema_version: int = Field(SCHEMA_VERSION, alias="schema")

    @field_validator("schema_version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v}")
        return v


# -----------------------------------------------------------------------------
# Входные файлы
# -----------------------------------------------------------------------------
class FixedPointSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    tangent: list[str]
    ample: str
    polarization: list[str] | None = None
    slope: str | None = None
    slope_coeff: str = "1"


class EdgeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: str
    target: str
    weight: str


class ModelSpec(Versioned):
    kind: Literal["gkm"] = "gkm"
    name: str = "model"
    coordinates: list[str] = Field(validation_alias=AliasChoices("torus", "coordinates"))
    a_coordinates: list[str] = Field(validation_alias=AliasChoices("A", "a_coordinates"))
    fixed_points: list[FixedPointSpec] = Field(min_length=1)
    edges: list[EdgeSpec] = []

    @field_validator("edges", mode="before")
    @classmethod
    def _edge_triples(cls, v: object) -> object:
        """Ребро можно записать тройкой ``["F1", "F2", "a1/a2"]``."""
        if not isinstance(v, list):
            return v
        return [
            {"source": e[0], "target": e[1], "weight": e[2]} if isinstance(e, (list, tuple)) and len(e) == 3 else e
            for e in v
        ]


class InertiaGroupSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    perp: list[list[int]] = []
    components: list[str] = Field(min_length=1)
    inside: dict[str, str] = {}


class InertiaSpec(Versioned):
    kind: Literal["inertia"]
    name: str = "inertia"
    rank: int = Field(ge=1)
    groups: list[InertiaGroupSpec] = Field(min_length=1)


# -----------------------------------------------------------------------------
# Конфигурация запуска
# -----------------------------------------------------------------------------
class RunConfig(BaseModel):
    """Одна команда CLI со всеми параметрами."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["stab", "verify", "resonance", "tessellate", "floors", "theta-check", "nodal-limit", "attractive"]
    model: Path | None = None
    builtin: Literal["tstar-pn", "pn"] | None = None
    n: int | None = Field(None, ge=2)
    matrix: Path | None = None
    weights: str | None = None
    chamber: str | None = None
    slope: str | None = None
    z: str = "h^2"
    refinement: str = "ample"
    trunc: int | None = Field(None, ge=1)
    face: str | None = None
    format: Literal["json", "text", "csv", "svg"] = "json"
    out: Path | None = None

    @field_validator("slope")
    @classmethod
    def _bounded_slope(cls, v: str | None) -> str | None:
        if v is None:
            return v
        try:
            s = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"slope {v!r} is not a rational number") from None
        if s.denominator > MAX_SLOPE_DENOMINATOR:
            raise ValueError(f"slope denominator exceeds {MAX_SLOPE_DENOMINATOR}")
        return str(s)

    @model_validator(mode="after")
    def _one_source(self) -> "RunConfig":
        sources = [s for s in (self.model, self.builtin, self.matrix) if s is not None]
        if self.command == "verify" and len(sources) != 1:
            raise ValueError("verify needs exactly one of --model, --builtin, --matrix")
        if self.command in MODEL_COMMANDS - {"verify"} and (self.matrix is not None or len(sources) != 1):
            raise ValueError(f"{self.command} needs exactly one of --model, --builtin")
        if self.command == "tessellate" and (self.weights is None) == (self.model is None and self.builtin is None):
            raise ValueError("tessellate needs exactly one of --weights, --model, --builtin")
        if self.command == "floors" and len(sources) != 1:
            raise ValueError("floors needs exactly one of --model, --builtin")
        if self.builtin is not None and self.n is None:
            raise ValueError("--builtin needs --n")
        if self.format == "svg" and self.command != "tessellate":
            raise ValueError("svg output is available for tessellate only")
        if self.format == "csv" and self.command != "stab":
            raise ValueError("csv output is available for stab only")
        return self


# -----------------------------------------------------------------------------
# Артефакты
# -----------------------------------------------------------------------------
class EntryOut(BaseModel):
    row: str
    column: str
    value: str


class StabArtifact(Versioned):
    command: Literal["stab"] = "stab"
    model: ModelSpec
    chamber: list[int]
    slope: str | None
    refinement: str
    order: list[str]
    entries: list[EntryOut]
    warnings: list[str] = []
    face: list[int] | None = None


class VerifyArtifact(Versioned):
    command: Literal["verify"] = "verify"
    model: str
    chamber: list[int]
    ok: bool
    checks: dict[str, bool]
    failures: list[str]


class ResonanceArtifact(Versioned):
    command: Literal["resonance"] = "resonance"
    model: str
    chamber: list[int]
    values: list[str]


class ObstructionOut(BaseModel):
    pair: list[str]
    direction: list[int]


class AttractiveArtifact(Versioned):
    command: Literal["attractive"] = "attractive"
    model: str
    chamber: list[int]
    ok: bool
    pointwise_failures: list[str]
    obstructions: list[ObstructionOut]


class StratumOut(BaseModel):
    dim: int
    vertices: list[list[str]]
    sample: list[str]


class TileOut(BaseModel):
    stratum: int
    dim: int
    vertices: list[list[str]]
    volume: str | None


class TessellationArtifact(Versioned):
    command: Literal["tessellate"] = "tessellate"
    weights: list[list[int]]
    multiplicities: list[int]
    gram: list[list[str]]
    gram_det: str
    grid: int
    base_change: int
    counts: dict[str, int]
    dual_vertex_count: int
    total_volume: str
    strata: list[StratumOut]
    tiles: list[TileOut]
    adjacency: list[list[int]]


class FloorStratumOut(BaseModel):
    group: str
    stratum: int
    component: str
    dimension: int


class FloorsArtifact(Versioned):
    command: Literal["floors"] = "floors"
    source: str
    counts: dict[str, dict[str, int]]
    strata: list[FloorStratumOut]
    adjacency: list[list[int]]
    floors: dict[str, list[int]]
    bundles: dict[str, dict[str, str]] = {}
    cocycle_ok: bool = True


class ThetaArtifact(Versioned):
    command: Literal["theta-check"] = "theta-check"
    order: str
    theta0: dict[str, str]
    residuals: dict[str, dict[str, str]]
    tate_cubic: bool
    ok: bool


class NodalArtifact(Versioned):
    command: Literal["nodal-limit"] = "nodal-limit"
    model: str
    chamber: list[int]
    slope: str
    z: str
    order: str
    elliptic: dict[str, dict[str, str]]
    limit: list[EntryOut]
    global_monomial: str | None
    matches: bool
