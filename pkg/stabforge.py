"""
stabforge.py — командная строка для стабильных огибающих и узловых вырождений.

Примеры запуска:
    python stabforge.py stab --builtin tstar-pn --n 3 --slope 1/7 --format text
    python stabforge.py verify --matrix results/stab_tp2.json
    python stabforge.py resonance --builtin tstar-pn --n 4
    python stabforge.py attractive --model APPLICATION/app/data/p2.yaml
    python stabforge.py tessellate --weights "2x,y,x-y" --format svg --out results/cQex.svg
    python stabforge.py floors --model APPLICATION/app/data/rank1_inertia.yaml
    python stabforge.py theta-check --trunc 20
    python stabforge.py nodal-limit --builtin tstar-pn --n 2 --slope 4/3 --z h^2

Переменные окружения (.env): STABFORGE_TRUNC, STABFORGE_TRACING, OTEL_EXPORTER_OTLP_ENDPOINT.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "APPLICATION"))

from pydantic import ValidationError  # noqa: E402

from app.commands import EXIT_INPUT, run  # noqa: E402
from app.config import ConfigError, get_settings  # noqa: E402
from app.schemas import COMMANDS, RunConfig, schema_error_from  # noqa: E402
from app.telemetry import configure_tracing  # noqa: E402


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    ap = argparse.ArgumentParser(description="Exact K-theoretic stable envelopes")
    ap.add_argument("command", choices=COMMANDS,
                    help="Что вычислить")
    ap.add_argument("--model", type=Path,
                    help="Файл модели (JSON или YAML)")
    ap.add_argument("--builtin", choices=["tstar-pn", "pn"],
                    help="Встроенное семейство вместо файла")
    ap.add_argument("--n", type=int,
                    help="Число неподвижных точек встроенного семейства")
    ap.add_argument("--matrix", type=Path,
                    help="JSON-артефакт команды stab (для verify)")
    ap.add_argument("--weights",
                    help="Линейные формы для tessellate, например \"2x,y,x-y\"")
    ap.add_argument("--chamber",
                    help="Камера: perm:2,1,3 или cochar:2,1,0 (по умолчанию стандартная)")
    ap.add_argument("--slope",
                    help="Наклон, рациональное число (по умолчанию генерический наклон модели)")
    ap.add_argument("--z", default="h^2",
                    help="Мономиальная часть параметра Кэлера для nodal-limit")
    ap.add_argument("--order", default="ample",
                    help="Пополнение порядка: ample, index, reverse-index или список точек")
    ap.add_argument("--face",
                    help="Кохарактер грани для ограничения матрицы stab, например 1,1,0")
    ap.add_argument("--trunc", type=int,
                    help="Порядок усечения q-рядов (иначе STABFORGE_TRUNC или 20)")
    ap.add_argument("--format", choices=["json", "text", "csv", "svg"], default="json",
                    help="Формат артефакта")
    ap.add_argument("--out", type=Path,
                    help="Куда записать артефакт (по умолчанию stdout)")
    return ap.parse_args(argv)


def build_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        model=args.model,
        builtin=args.builtin,
        n=args.n,
        matrix=args.matrix,
        weights=args.weights,
        chamber=args.chamber,
        slope=args.slope,
        z=args.z,
        refinement=args.order,
        trunc=args.trunc,
        face=args.face,
        format=args.format,
        out=args.out,
    )


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    try:
        settings = get_settings()
        config = build_config(args)
    except ConfigError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print(f"❌ {schema_error_from(exc)}", file=sys.stderr)
        return EXIT_INPUT

    configure_tracing(settings)
    return run(config, settings)


if __name__ == "__main__":
    sys.exit(main())
