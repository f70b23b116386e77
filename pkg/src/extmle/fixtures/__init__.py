"""Bundled example tables (positive cells filled with 1)."""

import json
from pathlib import Path

from ..tables import ContingencyTable, parse_table

HERE = Path(__file__).resolve().parent


def names() -> list[str]:
    return sorted(p.stem for p in HERE.glob("*.json"))


def path(name: str) -> Path:
    p = HERE / f"{name}.json"
    if not p.exists():
        raise FileNotFoundError(f"no fixture named {name!r}; available: {names()}")
    return p


def load(name: str) -> tuple[ContingencyTable, str]:
    """Return ``(table, model_string)`` for a bundled fixture."""
    doc = json.loads(path(name).read_text())
    return parse_table(doc), doc["model"]
