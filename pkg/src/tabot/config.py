"""Runtime configuration shared by ingestion, generation, matching and dialogue.

All knobs have documented defaults and can be overridden from a JSON config
file and/or ``TABOT_*`` environment variables (environment wins).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields as dataclass_fields, replace
from pathlib import Path
from typing import Any, Mapping


@dataclass(frozen=True)
class TabotConfig:
    # ingestion
    categorical_threshold: int = 10
    type_consensus_ratio: float = 0.97
    missing_markers: tuple[str, ...] = ("", "na", "n/a", "null")
    decimal_comma: bool = False
    language: str = "en"
    # generation
    max_expanded_intents: int = 500
    # matching (surfaced in every generated bundle)
    accept_threshold: float = 0.55
    lexical_weight: float = 0.6
    slot_weight: float = 0.4
    # dialogue
    page_size: int = 10
    max_reprompts: int = 2
    session_timeout_s: float = 1800.0
    # fallback
    fallback_url: str | None = None
    fallback_timeout_s: float = 10.0
    # service
    host: str = "127.0.0.1"
    port: int = 8080

    def with_overrides(self, **kwargs: Any) -> "TabotConfig":
        return replace(self, **kwargs)

    @classmethod
    def load(cls, path: str | Path | None = None,
             env: Mapping[str, str] | None = None) -> "TabotConfig":
        """Build a config from defaults, an optional JSON file and TABOT_* vars."""
        values: dict[str, Any] = {}
        if path is not None:
            values.update(json.loads(Path(path).read_text(encoding="utf-8")))
        env = os.environ if env is None else env
        for f in dataclass_fields(cls):
            raw = env.get(f"TABOT_{f.name.upper()}")
            if raw is not None:
                values[f.name] = _coerce(raw, f.type)
        known = {f.name for f in dataclass_fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "missing_markers" in values:
            values["missing_markers"] = tuple(values["missing_markers"])
        return cls(**values)


def _coerce(raw: str, type_hint: Any) -> Any:
    hint = str(type_hint)
    if "int" in hint:
        return int(raw)
    if "float" in hint:
        return float(raw)
    if "bool" in hint:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if "tuple" in hint:
        return tuple(part.strip() for part in raw.split(","))
    return raw


DEFAULT_CONFIG = TabotConfig()
