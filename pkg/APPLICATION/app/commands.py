# APPLICATION/app/commands.py

"""
Команды CLI: из RunConfig — вычисление, артефакт и код выхода.

Коды выхода: 0 — успех, 1 — проверка не прошла, 2 — ошибка входных данных,
3 — математическая ошибка (интерполяция невозможна, резонанс, вырождение).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import yaml
from pydantic import BaseModel, ValidationError
from tqdm import tqdm

from app.config import ConfigError, Settings, get_settings
from app.models import (
    model_from_spec,
    model_to_spec,
    parse_chamber,
    parse_face,
    parse_linear_forms,
    read_document,
    resolve_source,
)
from app.schemas import (
    AttractiveArtifact,
    EntryOut,
    FloorsArtifact,
    FloorStratumOut,
    NodalArtifact,
    ObstructionOut,
    ResonanceArtifact,
    RunConfig,
    SchemaError,
    StabArtifact,
    StratumOut,
    TessellationArtifact,
    ThetaArtifact,
    TileOut,
    VerifyArtifact,
    schema_error_from,
)
from app.telemetry import add_event, span
from app.utils import stab_csv, stab_table, tessellation_svg, to_json, write_artifact
from stab_core.degeneration import (
    InertiaData,
    PeriodicConvexFunction,
    compare_with_stab,
    elliptic_stab_rank1,
    legendre_dual_tessellation,
    model_floors,
    model_function,
    nodal_floors,
    nodal_limit,
    theta_report,
)
from stab_core.envelope import StabMatrix, compute_stab, restrict_stab, verify_stab
from stab_core.errors import ModelError, StabforgeError
from stab_core.gkm_model import GKMModel, attractive_check, resonant_locus
from stab_core.lattice_geometry import Chamber

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_MATH = 3


@dataclass
class Outcome:
    artifact: BaseModel
    text: str
    ok: bool = True
    csv: str | None = None
    svg: str | None = None


# -----------------------------------------------------------------------------
# Вспомогательное
# -----------------------------------------------------------------------------
def _gkm(config: RunConfig) -> GKMModel:
    source = resolve_source(config)
    if not isinstance(source, GKMModel):
        raise SchemaError("/kind", f"{config.command} needs a GKM model")
    return source


def _progress(label: str) -> Callable:
    return lambda items: tqdm(list(items), desc=label, leave=False, file=sys.stderr)


def _entries(S: StabMatrix) -> list[EntryOut]:
    return [
        EntryOut(row=j, column=i, value=S.entry(j, i).to_string())
        for i in S.order
        for j in S.order
        if not S.entry(j, i).is_zero()
    ]


def _stab_artifact(S: StabMatrix, refinement: str) -> StabArtifact:
    return StabArtifact(
        model=model_to_spec(S.model),
        chamber=list(S.chamber.sigma),
        slope=str(S.slope) if S.slope is not None else None,
        refinement=refinement,
        order=list(S.order),
        entries=_entries(S),
        warnings=list(S.warnings),
        face=list(S.face) if S.face is not None else None,
    )


def load_stab_artifact(path) -> StabMatrix:
    """Прочитать StabMatrix из JSON-артефакта команды ``stab``."""
    try:
        art = StabArtifact.model_validate(read_document(path))
    except ValidationError as exc:
        raise schema_error_from(exc) from None
    model = model_from_spec(art.model)
    torus = model.torus
    entries = {}
    for k, e in enumerate(art.entries):
        try:
            entries[(e.row, e.column)] = torus.parse_poly(e.value)
        except StabforgeError as exc:
            raise SchemaError(f"/entries/{k}/value", str(exc)) from None
    return StabMatrix(
        model=model,
        chamber=Chamber(torus, tuple(art.chamber)),
        slope=Fraction(art.slope) if art.slope is not None else None,
        order=list(art.order),
        entries=entries,
        warnings=list(art.warnings),
        face=tuple(art.face) if art.face is not None else None,
    )


# -----------------------------------------------------------------------------
# Команды
# -----------------------------------------------------------------------------
def cmd_stab(config: RunConfig, settings: Settings) -> Outcome:
    model = _gkm(config)
    chamber = parse_chamber(config.chamber, model.torus)
    with span("compute_stab", model=model.name, chamber=chamber.label, slope=config.slope) as current:
        S = compute_stab(model, chamber, config.slope, config.refinement, progress=_progress("columns"))
        for note in S.warnings:
            add_event(current, "warning", message=note)
    face = parse_face(config.face)
    if face is not None:
        S = restrict_stab(S, face)
    return Outcome(_stab_artifact(S, config.refinement), stab_table(S), csv=stab_csv(S))


def cmd_verify(config: RunConfig, settings: Settings) -> Outcome:
    if config.matrix is not None:
        S = load_stab_artifact(config.matrix)
    else:
        model = _gkm(config)
        chamber = parse_chamber(config.chamber, model.torus)
        S = compute_stab(model, chamber, config.slope, config.refinement, progress=_progress("columns"))
    with span("verify_stab", model=S.model.name, chamber=S.chamber.label):
        report = verify_stab(S)
    art = VerifyArtifact(
        model=S.model.name,
        chamber=list(S.chamber.sigma),
        ok=report.ok,
        checks=report.checks,
        failures=report.failures,
    )
    lines = [f"{'✅' if passed else '❌'} {name}" for name, passed in sorted(report.checks.items())]
    lines += [f"   {f}" for f in report.failures]
    return Outcome(art, "\n".join(lines) + "\n", ok=report.ok)


def cmd_resonance(config: RunConfig, settings: Settings) -> Outcome:
    model = _gkm(config)
    chamber = parse_chamber(config.chamber, model.torus)
    with span("resonant_locus", model=model.name, chamber=chamber.label):
        values = [model.torus.format_weight(w) for w in resonant_locus(model, chamber)]
    art = ResonanceArtifact(model=model.name, chamber=list(chamber.sigma), values=values)
    return Outcome(art, ", ".join(values) + "\n")


def cmd_attractive(config: RunConfig, settings: Settings) -> Outcome:
    model = _gkm(config)
    chamber = parse_chamber(config.chamber, model.torus)
    report = attractive_check(model, chamber)
    art = AttractiveArtifact(
        model=model.name,
        chamber=list(chamber.sigma),
        ok=report.ok,
        pointwise_failures=list(report.pointwise_failures),
        obstructions=[ObstructionOut(pair=list(o.pair), direction=list(o.direction)) for o in report.obstructions],
    )
    lines = [f"pointwise failure at {n}" for n in report.pointwise_failures]
    lines += [o.describe() for o in report.obstructions]
    text = "\n".join(lines) if lines else "attractive"
    return Outcome(art, text + "\n", ok=report.ok)


def _function_for(config: RunConfig) -> PeriodicConvexFunction:
    if config.weights is not None:
        _, vectors = parse_linear_forms(config.weights)
        return PeriodicConvexFunction.from_weights(vectors)
    return model_function(_gkm(config))


def cmd_tessellate(config: RunConfig, settings: Settings) -> Outcome:
    Q = _function_for(config)
    with span("legendre_dual_tessellation", rank=Q.rank, weights=len(Q.weights)):
        tess = legendre_dual_tessellation(Q)
    G = Q.gram()
    art = TessellationArtifact(
        weights=[list(mu) for mu in Q.weights],
        multiplicities=list(Q.multiplicities),
        gram=[[str(G[i, j]) for j in range(G.cols)] for i in range(G.rows)],
        gram_det=str(G.det()),
        grid=tess.grid,
        base_change=tess.base_change,
        counts={str(k): v for k, v in tess.dimension_counts().items()},
        dual_vertex_count=tess.dual_vertex_count(),
        total_volume=str(tess.total_volume()),
        strata=[
            StratumOut(
                dim=s.dim,
                vertices=[[str(c) for c in v] for v in s.vertices],
                sample=[str(c) for c in s.sample],
            )
            for s in tess.strata
        ],
        tiles=[
            TileOut(
                stratum=t.stratum,
                dim=t.dim,
                vertices=t.polytope.to_list(),
                volume=str(t.volume) if t.volume is not None else None,
            )
            for t in tess.tiles
        ],
        adjacency=[list(pair) for pair in tess.adjacency],
    )
    text = (
        f"Gram matrix: {art.gram}\n"
        f"strata by dimension: {art.counts}\n"
        f"dual vertices mod G: {art.dual_vertex_count}, total volume: {art.total_volume}\n"
    )
    svg = tessellation_svg(tess) if config.format == "svg" else None
    return Outcome(art, text, svg=svg)


def cmd_floors(config: RunConfig, settings: Settings) -> Outcome:
    source = resolve_source(config)
    with span("nodal_floors", source=getattr(source, "name", "model")):
        plan = nodal_floors(source) if isinstance(source, InertiaData) else model_floors(source)
    groups = sorted({s.group for s in plan.strata})
    torus = source.torus if isinstance(source, GKMModel) else None
    bundles = {}
    if torus is not None:
        bundles = {
            str(k): {name: torus.format_weight(w) for name, w in per_point.items()}
            for k, per_point in plan.bundles.items()
        }
    art = FloorsArtifact(
        source=source.name,
        counts={g: {str(d): c for d, c in plan.counts(g).items()} for g in groups},
        strata=[
            FloorStratumOut(group=s.group, stratum=s.stratum, component=s.component, dimension=s.dimension)
            for s in plan.strata
        ],
        adjacency=[list(pair) for pair in plan.adjacency],
        floors=plan.floors,
        bundles=bundles,
        cocycle_ok=plan.cocycle_ok,
    )
    text = "\n".join(f"{g}: {art.counts[g]}" for g in groups) + "\n"
    return Outcome(art, text, ok=plan.cocycle_ok)


def cmd_theta_check(config: RunConfig, settings: Settings) -> Outcome:
    order = config.trunc or settings.truncation
    with span("theta_check", order=order):
        report = theta_report(order)
    art = ThetaArtifact(
        order=str(report.order),
        theta0=report.theta0.to_dict(),
        residuals={
            "functional_equation": report.functional_residual.to_dict(),
            "triple_product": report.triple_product_residual.to_dict(),
            "odd": report.odd_residual.to_dict(),
        },
        tate_cubic=report.tate_cubic,
        ok=report.ok,
    )
    text = (
        f"theta0(a) = {report.theta0}\n"
        f"theta0(q a) - a^-1 theta0(a) = {report.functional_residual}\n"
        f"product - triple product = {report.triple_product_residual}\n"
        f"theta(a^-1) + theta(a) = {report.odd_residual}\n"
        f"Tate cubic: {'0' if report.tate_cubic else 'nonzero'}\n"
    )
    return Outcome(art, text, ok=report.ok)


def cmd_nodal_limit(config: RunConfig, settings: Settings) -> Outcome:
    model = _gkm(config)
    chamber = parse_chamber(config.chamber, model.torus)
    order = config.trunc or settings.truncation
    with span("elliptic_stab_rank1", model=model.name, slope=config.slope, z=config.z, order=order):
        E = elliptic_stab_rank1(model, config.z, config.slope, order, chamber)
        limit = nodal_limit(E)
    S = compute_stab(model, chamber, E.slope)
    monomial = compare_with_stab(limit, S)
    torus = model.torus
    art = NodalArtifact(
        model=model.name,
        chamber=list(chamber.sigma),
        slope=str(E.slope),
        z=E.z.to_string(),
        order=str(E.order),
        elliptic={f"{j},{i}": s.to_dict() for (j, i), s in sorted(E.entries.items())},
        limit=[
            EntryOut(row=j, column=i, value=limit.entry(j, i).to_string())
            for i in limit.order
            for j in limit.order
            if not limit.entry(j, i).is_zero()
        ],
        global_monomial=torus.format_weight(monomial) if monomial is not None else None,
        matches=monomial is not None,
    )
    text = stab_table(S)
    text += f"global monomial: {art.global_monomial}\n" if monomial is not None else "limit differs from Stab\n"
    return Outcome(art, text, ok=monomial is not None)


HANDLERS: dict[str, Callable[[RunConfig, Settings], Outcome]] = {
    "stab": cmd_stab,
    "verify": cmd_verify,
    "resonance": cmd_resonance,
    "attractive": cmd_attractive,
    "tessellate": cmd_tessellate,
    "floors": cmd_floors,
    "theta-check": cmd_theta_check,
    "nodal-limit": cmd_nodal_limit,
}


def render(outcome: Outcome, fmt: str) -> str:
    if fmt == "text":
        return outcome.text
    if fmt == "csv":
        return outcome.csv or ""
    if fmt == "svg":
        return outcome.svg or ""
    return to_json(outcome.artifact)


def execute(config: RunConfig, settings: Settings | None = None) -> Outcome:
    """Выполнить команду без обработки ошибок (для тестов и встраивания)."""
    settings = settings or get_settings()
    with span(f"stabforge.{config.command}", command=config.command):
        return HANDLERS[config.command](config, settings)


def run(config: RunConfig, settings: Settings | None = None) -> int:
    """
    Выполнить команду, записать артефакт и вернуть код выхода.

    Args:
        config (RunConfig): провалидированная конфигурация.
        settings (Settings | None): настройки окружения; по умолчанию get_settings().

    Returns:
        int: 0, 1, 2 или 3 (см. описание модуля).
    """
    try:
        outcome = execute(config, settings)
    except (SchemaError, ConfigError, ModelError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print(f"❌ {schema_error_from(exc)}", file=sys.stderr)
        return EXIT_INPUT
    except StabforgeError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        # json.JSONDecodeError
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_INPUT

    write_artifact(render(outcome, config.format), config.out)
    if config.out is not None:
        print(f"📄 {config.command}: артефакт записан в {config.out}")
    if not outcome.ok:
        print(f"⚠️  {config.command}: проверка не прошла", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK
