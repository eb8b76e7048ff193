"""Service configuration loaded from a JSON file."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import FormatError
from ..rdf import validate_base

__all__ = ["ServiceConfig", "load_config", "parse_config"]

DEFAULT_BASE_IRI = "http://mathkb.local"


@dataclass(frozen=True)
class ServiceConfig:
    corpus_dir: Path
    ontology_path: Path
    base_iri: str = DEFAULT_BASE_IRI
    host: str = "127.0.0.1"
    port: int = 8000
    profiles_path: Path | None = None
    patterns_path: Path | None = None

    def __post_init__(self):
        if not self.corpus_dir.is_dir():
            raise FormatError(
                f"corpus directory does not exist: {self.corpus_dir}",
                field="corpus_dir",
            )
        if not self.ontology_path.is_file():
            raise FormatError(
                f"ontology file does not exist: {self.ontology_path}",
                field="ontology_path",
            )
        for name in ("profiles_path", "patterns_path"):
            value = getattr(self, name)
            if value is not None and not value.is_file():
                raise FormatError(f"file does not exist: {value}", field=name)
        if not (1 <= self.port <= 65535):
            raise FormatError(
                f"port must lie in [1, 65535], got {self.port}", field="port"
            )
        validate_base(self.base_iri)


def parse_config(text: str, relative_to: Path | None = None) -> ServiceConfig:
    """Build a ServiceConfig from JSON; relative paths resolve against
    ``relative_to`` (the config file's directory, typically)."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError("config must be a JSON object")

    def path_of(key, required=False):
        value = raw.get(key)
        if value is None:
            if required:
                raise FormatError(f"config is missing {key}", field=key)
            return None
        p = Path(value)
        if relative_to is not None and not p.is_absolute():
            p = relative_to / p
        return p

    known = {
        "corpus_dir",
        "ontology_path",
        "base_iri",
        "host",
        "port",
        "profiles_path",
        "patterns_path",
    }
    unknown = set(raw) - known
    if unknown:
        raise FormatError(f"unknown config keys: {sorted(unknown)}")

    port = raw.get("port", 8000)
    if not isinstance(port, int) or isinstance(port, bool):
        raise FormatError("port must be an integer", field="port")
    return ServiceConfig(
        corpus_dir=path_of("corpus_dir", required=True),
        ontology_path=path_of("ontology_path", required=True),
        base_iri=raw.get("base_iri", DEFAULT_BASE_IRI),
        host=raw.get("host", "127.0.0.1"),
        port=port,
        profiles_path=path_of("profiles_path"),
        patterns_path=path_of("patterns_path"),
    )


def load_config(path) -> ServiceConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), relative_to=path.parent)
