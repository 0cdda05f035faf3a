"""Intelligence case-graph engine.

Documents go in; cascading analysis modules enrich them into a typed
knowledge graph with hash-chained provenance and 6x6 confidence grading;
search, neighborhood exploration, layout, and report export come out
through an HTTP/JSON API.
"""

from casegraph.engine import CaseEngine, EngineConfig
from casegraph.errors import (
    CaseGraphError,
    ChainBrokenError,
    PermissionError_,
    SchemaError,
    StorageError,
    UnknownItemError,
    ValidationError,
)
from casegraph.schema import Actor, ConfidenceGrade, SchemaRegistry
from casegraph.store import GraphStore, ViewFilter

__version__ = "0.1.0"

__all__ = [
    "Actor",
    "CaseEngine",
    "CaseGraphError",
    "ChainBrokenError",
    "ConfidenceGrade",
    "EngineConfig",
    "GraphStore",
    "PermissionError_",
    "SchemaError",
    "SchemaRegistry",
    "StorageError",
    "UnknownItemError",
    "ValidationError",
    "ViewFilter",
    "__version__",
]
