"""Config file schema, canonicalisation, and hashing.

Configs are JSON documents.  Hashing always goes through the canonical
form (sorted keys, compact separators), so field order in the file never
changes the hash.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import ConfigError
from .estimation import ExperimentPlan, curve_from_dict
from .market import (
    Coalition,
    College,
    EconomyConfig,
    preferences_from_dict,
    values_from_dict,
)
from .noise import noise_from_dict


def config_to_dict(config: EconomyConfig, plan: ExperimentPlan) -> dict:
    return {
        "n_students": config.n_students,
        "master_seed": config.master_seed,
        "capacity_alpha": config.capacity_alpha,
        "coalitions": [
            {
                "id": k.id,
                "values": k.values.to_dict(),
                "noise": None if k.noise is None else k.noise.to_dict(),
            }
            for k in config.coalitions
        ],
        "colleges": [
            {"id": c.id, "capacity": c.capacity, "coalition": c.coalition}
            for c in config.colleges
        ],
        "preferences": config.preferences.to_dict(),
        "plan": {
            "replications": plan.replications,
            "bin_edges": list(plan.bin_edges),
            "curves": [c.to_dict() for c in plan.curves],
            "record_cutoffs": plan.record_cutoffs,
        },
    }


def dict_to_config(doc: dict) -> tuple[EconomyConfig, ExperimentPlan]:
    try:
        coalitions = tuple(
            Coalition(
                id=k["id"],
                values=values_from_dict(k["values"]),
                noise=None if k.get("noise") is None else noise_from_dict(k["noise"]),
            )
            for k in doc["coalitions"]
        )
        colleges = tuple(
            College(id=c["id"], capacity=int(c["capacity"]), coalition=c["coalition"])
            for c in doc["colleges"]
        )
        config = EconomyConfig(
            n_students=int(doc["n_students"]),
            colleges=colleges,
            coalitions=coalitions,
            preferences=preferences_from_dict(doc["preferences"]),
            master_seed=int(doc["master_seed"]),
            capacity_alpha=float(doc.get("capacity_alpha", 1.0)),
        )
        p = doc["plan"]
        plan = ExperimentPlan(
            replications=int(p["replications"]),
            bin_edges=tuple(p["bin_edges"]),
            curves=tuple(curve_from_dict(c) for c in p.get("curves", [])),
            record_cutoffs=bool(p.get("record_cutoffs", True)),
        )
    except KeyError as e:
        raise ConfigError(f"config: missing required field {e.args[0]!r}") from e
    return config, plan


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def load_config_file(path: str | Path) -> dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path}: top level must be an object")
    return doc


def save_config_file(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply key=value pairs with dotted paths; values parse as JSON literals."""
    out = json.loads(json.dumps(doc))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return out
