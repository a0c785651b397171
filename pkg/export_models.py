"""
export_models.py — выгрузить встроенные модели в файлы JSON/YAML.

Пример запуска:
    python export_models.py --kind tstar-pn --n 3 --out APPLICATION/app/data/tstar_p2.yaml
    python export_models.py --kind pn --n 3 --out p2.json
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "APPLICATION"))

import yaml  # noqa: E402

from app.models import model_to_spec  # noqa: E402
from stab_core.errors import ModelError  # noqa: E402
from stab_core.gkm_model import BUILTINS, builtin  # noqa: E402


def parse_args() -> argparse.Namespace:
    ap = argparse.ArgumentParser(description="Export builtin GKM models")
    ap.add_argument("--kind", choices=sorted(BUILTINS), default="tstar-pn",
                    help="Встроенное семейство")
    ap.add_argument("--n", type=int, default=3,
                    help="Число неподвижных точек")
    ap.add_argument("--out", type=Path, required=True,
                    help="Файл .json, .yaml или .yml")
    return ap.parse_args()


def main() -> None:
    args = parse_args()
    try:
        model = builtin(args.kind, args.n)
    except ModelError as exc:
        print(f"❌ {exc}")
        sys.exit(2)

    data = model_to_spec(model).model_dump(mode="json", by_alias=True, exclude_none=True)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    if args.out.suffix.lower() in (".yaml", ".yml"):
        text = yaml.safe_dump(data, sort_keys=True, allow_unicode=True)
    else:
        text = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    args.out.write_text(text, encoding="utf-8")
    print(f"✅ {model.name}: {len(model.fixed_points)} точек, {len(model.edges)} рёбер → {args.out}")


if __name__ == "__main__":
    main()
