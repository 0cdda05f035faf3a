"""Engine facade wiring every subsystem behind one object.

The CaseEngine owns the provenance log, graph store, object store,
orchestrator, ontology, and search engine, and is what the HTTP service
and the CLI talk to. On startup it verifies the hash chain and refuses to
open a tampered log.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from casegraph import layout as layout_mod
from casegraph import modules as builtin_modules
from casegraph import ner
from casegraph.errors import ChainBrokenError, UnknownItemError, ValidationError
from casegraph.objectstore import ObjectStore
from casegraph.orchestration import IngestJob, Orchestrator
from casegraph.provenance import ProvenanceLog
from casegraph.schema import Actor, ConfidenceGrade, SchemaRegistry
from casegraph.search import OntologyGraph, SearchConfig, SearchEngine, SearchQuery, sample_ontology
from casegraph.store import GraphStore, ViewFilter

DEFAULT_CAPABILITIES = ("read", "ingest", "annotate", "review", "admin")


@dataclass
class EngineConfig:
    data_dir: str = "casegraph-data"
    port: int = 8400
    tokens: dict = field(default_factory=dict)  # token -> {"actor": id, "capabilities": [...]}
    enabled_modules: list[str] | None = None  # None = all built-ins
    max_cascade_depth: int = 8
    fixed_timestamp: float | None = None  # test mode: constant clock for byte-stable output
    layout_defaults: dict = field(default_factory=dict)
    gazetteer_path: str | None = None
    ontology_path: str | None = None
    search: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str) -> "EngineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    def clock(self):
        if self.fixed_timestamp is not None:
            fixed = float(self.fixed_timestamp)
            return lambda: fixed
        return time.time

    def layout_params(self, overrides: dict | None = None) -> layout_mod.LayoutParams:
        merged = dict(self.layout_defaults)
        merged.update(overrides or {})
        return layout_mod.LayoutParams(**merged)


class CaseEngine:
    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        os.makedirs(self.config.data_dir, exist_ok=True)
        log_path = os.path.join(self.config.data_dir, "provenance.ndjson")
        if os.path.exists(log_path):
            # refuse to serve over a tampered log
            from casegraph.provenance import verify_log_file

            broken = verify_log_file(log_path)
            if broken is not None:
                raise ChainBrokenError(broken, f"provenance chain broken at seq {broken}")
        self.log = ProvenanceLog(log_path, clock=self.config.clock())
        self.schema = SchemaRegistry.default()
        self.store = GraphStore(self.schema, self.log)
        self.objects = ObjectStore(os.path.join(self.config.data_dir, "objects"))
        if self.config.gazetteer_path:
            self.gazetteer = ner.Gazetteer.from_file(self.config.gazetteer_path)
        else:
            self.gazetteer = ner.default_gazetteer()
        if self.config.ontology_path:
            self.ontology = OntologyGraph.from_file(self.config.ontology_path)
        else:
            self.ontology = sample_ontology()
        # rebuild state from any pre-existing log
        for entry in self.log.entries:
            self.store._apply(entry.mutation, entry.payload)
            if entry.mutation == "ontology_edit":
                self.ontology.apply_edit(entry.payload["edit"])
        self.orchestrator = Orchestrator(
            self.store, self.objects, self.log, max_cascade_depth=self.config.max_cascade_depth
        )
        for module in builtin_modules.default_modules(self.gazetteer):
            module_id = module.descriptor.module_id
            if self.config.enabled_modules is None or module_id in self.config.enabled_modules:
                self.orchestrator.register_module(module)
        self.search_engine = SearchEngine(
            self.store, self.ontology, provenance=self.log, config=SearchConfig(**self.config.search)
        )

    def close(self) -> None:
        self.log.close()

    # -- ingest and enrichment ----------------------------------------------

    def ingest(
        self,
        data: bytes,
        media_type: str,
        actor: Actor,
        title: str | None = None,
        timestamp: float | None = None,
    ) -> IngestJob:
        return self.orchestrator.ingest(data, media_type, actor, title=title, timestamp=timestamp)

    def job(self, job_id: str) -> IngestJob:
        if job_id not in self.orchestrator.jobs:
            raise UnknownItemError(f"unknown job {job_id!r}")
        return self.orchestrator.jobs[job_id]

    def item_actions(self, item_id: str, include_hidden: bool = False) -> list[dict]:
        return self.orchestrator.list_context_actions(item_id, include_hidden=include_hidden)

    def run_action(self, module_id: str, item_id: str, params: dict, actor: Actor):
        return self.orchestrator.rerun_with_parameters(item_id, module_id, params, actor=actor)

    # -- views and search ----------------------------------------------------

    def view(self, view_filter: ViewFilter | None = None):
        return self.store.apply_filter(view_filter)

    def neighborhood(self, center: str, k: int, view_filter: ViewFilter | None = None):
        return self.store.neighborhood(center, k, view_filter)

    def search(self, query: SearchQuery, view_filter: ViewFilter | None = None, actor: Actor | None = None):
        return self.search_engine.search(query, view_filter, actor=actor)

    # -- ontology ------------------------------------------------------------

    def edit_ontology(self, edits: list[dict], actor: Actor) -> int:
        """Apply edits in order; each edit is logged after it validates."""
        version = self.ontology.version
        for edit in edits:
            version = self.ontology.apply_edit(edit)
            self.log.append(actor, "ontology_edit", {"edit": edit, "version": version})
        return version

    # -- layout --------------------------------------------------------------

    def layout(self, view_filter: ViewFilter | None = None, overrides: dict | None = None) -> list[dict]:
        view = self.store.apply_filter(view_filter)
        if not view.nodes:
            raise ValidationError("no visible nodes to lay out")
        params = self.config.layout_params(overrides)
        edges = [
            (self.store.edges[e].from_id, self.store.edges[e].to_id) for e in sorted(view.edges)
        ]
        state = layout_mod.run(sorted(view.nodes), edges, params)
        return state.positions()

    # -- provenance ----------------------------------------------------------

    def trace(self, item_id: str):
        return self.store.trace(item_id)

    def verify(self) -> int | None:
        return self.log.verify()

    def head_hash(self) -> str:
        return self.log.head_hash

    def item_or_raise(self, item_id: str):
        if not self.store.has_item(item_id):
            raise UnknownItemError(f"unknown item {item_id!r}")
        return self.store.get_item(item_id)


def actor_for_token(config: EngineConfig, token: str | None) -> tuple[Actor, set[str]] | None:
    """Resolve a bearer token to (user actor, capability set); None if unknown."""
    if not config.tokens:
        # no token table configured: open instance, full capabilities
        return Actor("user", "anonymous"), set(DEFAULT_CAPABILITIES)
    if token is None or token not in config.tokens:
        return None
    record = config.tokens[token]
    return Actor("user", record["actor"]), set(record.get("capabilities", ["read"]))


def parse_view_filter(params: dict) -> ViewFilter:
    """Build a ViewFilter from loosely-typed query/body parameters."""
    time_range = None
    if params.get("t0") is not None or params.get("t1") is not None:
        if params.get("t0") is None or params.get("t1") is None:
            raise ValidationError("time range needs both t0 and t1")
        time_range = (float(params["t0"]), float(params["t1"]))
    min_grade = None
    if params.get("min_grade"):
        min_grade = ConfidenceGrade.parse(params["min_grade"])
    types = params.get("types")
    if isinstance(types, str):
        types = [t for t in types.split(",") if t]
    return ViewFilter(
        time_range=time_range,
        min_grade=min_grade,
        cross_match_only=bool(params.get("cross_match_only", False)),
        include_hidden=bool(params.get("include_hidden", False)),
        type_selection=types,
    )
