"""Shared bits for the sweep scripts."""

import argparse
import json
from pathlib import Path

from bgpolymer.models import ModelSpec

REFERENCE = {
    "ig": ModelSpec("ig", 2.0, 1.0, 1.0),
    "g": ModelSpec("g", 1.0, 0.5, 1.0),
    "b": ModelSpec("b", 1.0, 0.5, 1.0),
    "ib": ModelSpec("ib", 2.0, 0.5, 1.0),
}


def base_parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--models", default="ig,g,b,ib", help="comma-separated subset of ig,g,b,ib")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    return p


def models(arg: str):
    return [(k, REFERENCE[k]) for k in arg.split(",") if k]


def save(result, out_dir: Path, stem: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{stem}.json").write_text(result.to_json() + "\n")
    (out_dir / f"{stem}.csv").write_text(result.to_csv())
    print(f"wrote {out_dir / stem}.{{json,csv}}")


def dump(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")
