"""Experiment manifests: a JSON record that fully determines re-execution.

A manifest echoes every parameter (including seeds and truncation), carries
the tool version and timestamps, and lists results as (name, estimate, CI,
theory target, verdict) entries.  Serialization is canonical (sorted keys,
two-space indent) so that save(load(path)) reproduces the file byte-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

SCHEMA_VERSION = 1
VERDICTS = ("pass", "fail", "diagnostic")


class ManifestSchemaError(ValueError):
    """Unknown field or unsupported schema version in a manifest file."""


def result_entry(name, estimate, ci, target, verdict) -> dict:
    if verdict not in VERDICTS:
        raise ValueError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
    return {
        "name": str(name),
        "estimate": estimate,
        "ci": ci,
        "target": target,
        "verdict": verdict,
    }


@dataclass
class ExperimentManifest:
    experiment_id: str
    tool_version: str
    started: str
    finished: str
    config: dict
    results: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(
            {f.name: getattr(self, f.name) for f in fields(self)},
            indent=2,
            sort_keys=True,
        ) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @property
    def verdicts(self) -> list[str]:
        return [r["verdict"] for r in self.results]


def load_manifest(path) -> ExperimentManifest:
    with open(path) as fh:
        raw = json.load(fh)
    known = {f.name for f in fields(ExperimentManifest)}
    unknown = set(raw) - known
    if unknown:
        raise ManifestSchemaError(f"unknown manifest field(s): {sorted(unknown)}")
    missing = known - set(raw)
    if missing:
        raise ManifestSchemaError(f"missing manifest field(s): {sorted(missing)}")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ManifestSchemaError(
            f"unsupported schema version {raw['schema_version']} (supported: {SCHEMA_VERSION})"
        )
    for r in raw["results"]:
        if r.get("verdict") not in VERDICTS:
            raise ManifestSchemaError(f"bad verdict in result entry: {r!r}")
    return ExperimentManifest(**raw)
