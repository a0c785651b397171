# APPLICATION/app/utils.py

"""Сериализация артефактов: JSON, текстовые таблицы, CSV (pandas), SVG (matplotlib)."""
from __future__ import annotations

import io
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import sympy as sp  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402
from pydantic import BaseModel  # noqa: E402

from stab_core.degeneration import PeriodicConvexFunction, Tessellation  # noqa: E402
from stab_core.envelope import StabMatrix  # noqa: E402

SVG_HASHSALT = "stabforge"
DIM_COLORS = {0: "#d62728", 1: "#1f77b4", 2: "#2ca02c", 3: "#9467bd"}


def to_json(artifact: BaseModel) -> str:
    """Детерминированный JSON: ключи отсортированы, отступ 2, перевод строки в конце."""
    data = artifact.model_dump(mode="json", by_alias=True)
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_artifact(text: str, out: Path | None) -> None:
    if out is None:
        print(text, end="" if text.endswith("\n") else "\n")
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")


def _frame(S: StabMatrix) -> pd.DataFrame:
    """Строки — точки ограничения, столбцы — Stab(F_i), в порядке пополнения."""
    return pd.DataFrame(
        [[S.entry(j, i).to_string() for i in S.order] for j in S.order],
        index=pd.Index(S.order, name="restriction"),
        columns=list(S.order),
    )


def stab_table(S: StabMatrix) -> str:
    frame = _frame(S)
    header = ["F_j \\ Stab(F_i)"] + list(frame.columns)
    rows = [[name] + list(frame.loc[name]) for name in frame.index]
    widths = [max(len(str(r[k])) for r in [header] + rows) for k in range(len(header))]
    lines = []
    for r in [header] + rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    lines.insert(1, "  ".join("-" * w for w in widths))
    for note in S.warnings:
        lines.append(f"warning: {note}")
    return "\n".join(lines) + "\n"


def stab_csv(S: StabMatrix) -> str:
    buffer = io.StringIO()
    _frame(S).to_csv(buffer, lineterminator="\n")
    return buffer.getvalue()


def _ordered_polygon(points: np.ndarray) -> np.ndarray:
    centre = points.mean(axis=0)
    angles = np.arctan2(points[:, 1] - centre[1], points[:, 0] - centre[0])
    return points[np.argsort(angles, kind="stable")]


def gram_text(G: sp.MatrixBase) -> str:
    """Матрица Грама строкой вида ``[[5,-1],[-1,2]]``."""
    return "[" + ",".join("[" + ",".join(str(G[i, j]) for j in range(G.cols)) + "]" for i in range(G.rows)) + "]"


def _domain_limits(Q: PeriodicConvexFunction, copies: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """Пределы осей: образ куба [−copies, copies+1]^r при σ ↦ Gσ, независимо от плиток."""
    lo, hi = -copies, copies + 1
    r = Q.rank
    corners = [(a,) for a in (lo, hi)] if r == 1 else [(a, b) for a in (lo, hi) for b in (lo, hi)]
    images = np.array([[float(x) for x in Q.dual(c)] for c in corners])
    xlim = (float(images[:, 0].min()), float(images[:, 0].max()))
    ylim = (float(images[:, 1].min()), float(images[:, 1].max())) if r == 2 else (-1.0, 1.0)
    return xlim, ylim


def tessellation_svg(tess: Tessellation, copies: int = 1) -> str:
    """
    Нарисовать двойственные плитки ранга 2 (окрестность фундаментальной области).

    Сдвиги плиток на σ^∨ = Gσ для |σ_i| ≤ ``copies``; цвет — размерность страта
    в 𝔞. Ранг 1 рисуется отрезками на прямой.
    """
    plt.rcParams["svg.hashsalt"] = SVG_HASHSALT
    fig, ax = plt.subplots(figsize=(6, 6))
    Q = tess.function
    r = Q.rank
    shifts = []
    rng = range(-copies, copies + 1)
    if r == 1:
        shifts = [(k,) for k in rng]
    elif r == 2:
        shifts = [(a, b) for a in rng for b in rng]
    else:
        plt.close(fig)
        raise ValueError("SVG output is available for rank 1 and 2 only")

    for sigma in shifts:
        offset = np.array([float(x) for x in Q.dual(sigma)])
        for tile in tess.tiles:
            dim_a = tess.strata[tile.stratum].dim
            color = DIM_COLORS.get(r - dim_a, "#7f7f7f")
            pts = np.array([[float(x) for x in v] for v in tile.polytope.vertices]) + offset
            if r == 1:
                ys = np.zeros(len(pts))
                ax.plot(pts[:, 0], ys, color=color, marker="o", linewidth=2)
            elif tile.dim == 2:
                ax.add_patch(Polygon(_ordered_polygon(pts), closed=True, facecolor=color, alpha=0.25, edgecolor="black"))
            elif tile.dim == 1:
                ax.plot(pts[:, 0], pts[:, 1], color=color, linewidth=1.5)
            else:
                ax.plot(pts[:, 0], pts[:, 1], color=color, marker="o", markersize=3)
    ax.set_aspect("equal")
    xlim, ylim = _domain_limits(Q, copies)
    ax.set_xlim(*xlim)
    ax.set_ylim(*ylim)
    G = Q.gram()
    gram = gram_text(G)
    ax.set_title(f"G = {gram}, det G = {G.det()}")
    metadata = {
        "Date": None,
        "Creator": "stabforge",
        "Title": f"Legendre dual tessellation, rank {r}",
        "Description": f"gram={gram}; det={G.det()}",
    }
    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", metadata=metadata)
    plt.close(fig)
    return buffer.getvalue()
