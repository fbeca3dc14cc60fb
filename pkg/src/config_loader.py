from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

DEFAULTS_PATH = Path(__file__).resolve().parent.parent / "data" / "config" / "defaults.yaml"


def load_document(path: Path) -> Dict[str, Any]:
    """Run configs are JSON or YAML; yaml.safe_load reads both."""
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: top level must be a mapping, got {type(doc).__name__}")
    return doc


def load_defaults(path: Optional[Path] = None) -> Dict[str, Any]:
    path = Path(path) if path is not None else DEFAULTS_PATH
    if not path.is_file():
        return {}
    return load_document(path)


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Values from override win; nested mappings merge key by key."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_run_config(
    path: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None,
    defaults_path: Optional[Path] = None,
) -> Dict[str, Any]:
    """defaults < config file < overrides (CLI flags). Returns the raw merged mapping."""
    raw = load_defaults(defaults_path)
    if path is not None:
        raw = deep_merge(raw, load_document(path))
    if overrides:
        raw = deep_merge(raw, overrides)
    return raw
