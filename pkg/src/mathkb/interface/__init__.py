"""Service layer: configuration, ingestion pipeline, HTTP API, and CLI."""

from .config import ServiceConfig, load_config, parse_config
from .ingest import IngestReport, ingest_corpus, load_index, save_index

__all__ = [
    "IngestReport",
    "ServiceConfig",
    "ingest_corpus",
    "load_config",
    "load_index",
    "parse_config",
    "save_index",
]
