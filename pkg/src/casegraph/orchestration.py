"""Module registry and enrichment conductor.

Modules are in-process plugins: they declare what they ingest and which
graph changes they listen to, and their runs return candidate nodes/edges
that the orchestrator commits atomically with full attribution. Cascades
are depth-limited and idempotent per (module, item, content digest, params).
"""

from __future__ import annotations

import fnmatch
import hashlib
import logging
from dataclasses import dataclass, field

from casegraph.errors import UnknownItemError, ValidationError
from casegraph.objectstore import ObjectRef, ObjectStore
from casegraph.provenance import ProvenanceLog, canonical_json
from casegraph.schema import Actor, ConfidenceGrade, GRADE_UNKNOWN, path_is_descendant
from casegraph.store import GraphStore

log = logging.getLogger(__name__)

DEFAULT_MAX_CASCADE_DEPTH = 8

MEDIA_TYPE_TO_DOC_TYPE = [
    ("text/*", "Thing/Document/Text"),
    ("audio/*", "Thing/Document/Audio"),
    ("image/*", "Thing/Document/Image"),
    ("video/*", "Thing/Document/Video"),
    ("application/pdf", "Thing/Document/Pdf"),
]


@dataclass
class ModuleDescriptor:
    module_id: str
    ingest_types: list[str] = field(default_factory=list)  # media-type patterns
    listeners: list[dict] = field(default_factory=list)  # {"type": path, "mutation": kind}
    context_actions: list[dict] = field(default_factory=list)  # {"action", "label", "target_type"}
    preview_handlers: dict[str, str] = field(default_factory=dict)  # target type -> renderer id

    def __post_init__(self):
        if not self.ingest_types and not self.listeners:
            raise ValidationError(f"module {self.module_id!r} declares neither ingest types nor listeners")


@dataclass
class CandidateNode:
    key: str  # run-local reference
    type: str
    label: str
    attributes: dict = field(default_factory=dict)


@dataclass
class CandidateEdge:
    kind: str
    from_ref: str  # run-local key or existing node id
    to_ref: str
    grade: ConfidenceGrade = GRADE_UNKNOWN
    attributes: dict = field(default_factory=dict)


@dataclass
class RunResult:
    nodes: list[CandidateNode] = field(default_factory=list)
    edges: list[CandidateEdge] = field(default_factory=list)


@dataclass
class ModuleContext:
    """Everything a module run may look at."""

    store: GraphStore
    objects: ObjectStore
    trigger_item_id: str
    source_doc_id: str
    params: dict

    def trigger_node(self):
        return self.store.get_item(self.trigger_item_id)

    def read_object(self, digest: str) -> bytes:
        return self.objects.get(digest)

    def read_source_bytes(self) -> bytes:
        doc = self.store.get_item(self.source_doc_id)
        return self.objects.get(doc.attributes["object_digest"])


@dataclass
class IngestJob:
    job_id: str
    object_ref: ObjectRef
    media_type: str
    actor: Actor
    status: str = "queued"  # queued | running | done | failed
    document_id: str | None = None
    produced_ids: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None


@dataclass
class RunRecord:
    run_id: str
    module_id: str
    trigger_item_id: str
    source_doc_id: str
    params: dict
    depth: int
    job_id: str | None
    produced_ids: list[str] = field(default_factory=list)
    status: str = "done"


def content_digest(item) -> str:
    """Digest of an item's analysable content, for dispatch idempotence."""
    from casegraph.store import NodeRecord

    if isinstance(item, NodeRecord):
        body = {"type": item.type, "label": item.label, "attributes": item.attributes}
    else:
        body = {"kind": item.kind, "from": item.from_id, "to": item.to_id, "attributes": item.attributes}
    return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()


def _params_digest(params: dict) -> str:
    return hashlib.sha256(canonical_json(params).encode("utf-8")).hexdigest()


class Orchestrator:
    """Routes ingests and graph-change events to registered modules.

    Runs execute on a FIFO queue in arrival order; with the (default)
    single worker the whole cascade is deterministic and replayable.
    """

    def __init__(
        self,
        store: GraphStore,
        objects: ObjectStore,
        provenance: ProvenanceLog,
        max_cascade_depth: int = DEFAULT_MAX_CASCADE_DEPTH,
    ):
        self.store = store
        self.objects = objects
        self.provenance = provenance
        self.max_cascade_depth = max_cascade_depth
        self.modules: dict[str, object] = {}
        self.descriptors: dict[str, ModuleDescriptor] = {}
        self.jobs: dict[str, IngestJob] = {}
        self.runs: dict[str, RunRecord] = {}
        self._dispatched: set[tuple] = set()
        self._queue: list[tuple] = []
        self._draining = False
        self._counter = 0

    def _next(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter:06d}"

    # -- registry ------------------------------------------------------------

    def register_module(self, module) -> ModuleDescriptor:
        descriptor = module.descriptor
        if descriptor.module_id in self.modules:
            raise ValidationError(f"duplicate module id {descriptor.module_id!r}")
        self.modules[descriptor.module_id] = module
        self.descriptors[descriptor.module_id] = descriptor
        return descriptor

    def list_context_actions(self, item_id: str, include_hidden: bool = False) -> list[dict]:
        item = self.store.get_item(item_id)
        if item.hidden and not include_hidden:
            return []
        item_type = item.type if hasattr(item, "type") else None
        actions = []
        for descriptor in self.descriptors.values():
            for action in descriptor.context_actions:
                if item_type and path_is_descendant(item_type, action["target_type"]):
                    actions.append({**action, "module": descriptor.module_id})
        return sorted(actions, key=lambda a: (a["module"], a["action"]))

    def preview_handler(self, item_id: str) -> dict | None:
        item = self.store.get_item(item_id)
        for descriptor in self.descriptors.values():
            for target, renderer in descriptor.preview_handlers.items():
                if path_is_descendant(item.type, target):
                    return {"module": descriptor.module_id, "renderer": renderer}
        return None

    # -- ingest ----------------------------------------------------------------

    def ingest(self, data: bytes, media_type: str, actor: Actor, title: str | None = None, timestamp: float | None = None) -> IngestJob:
        ref = self.objects.put(data, media_type)
        job = IngestJob(self._next("job"), ref, media_type, actor)
        self.jobs[job.job_id] = job
        doc_type = "Thing/Document"
        for pattern, type_path in MEDIA_TYPE_TO_DOC_TYPE:
            if fnmatch.fnmatch(media_type, pattern):
                doc_type = type_path
                break
        attributes = {
            "media_type": media_type,
            "object_digest": ref.digest,
            "byte_length": ref.byte_length,
        }
        if title is not None:
            attributes["title"] = title
        if timestamp is not None:
            attributes["timestamp"] = float(timestamp)
        if doc_type in ("Thing/Document/Text", "Thing/Document/Pdf"):
            attributes["text"] = data.decode("utf-8")
        # every submission is a separate piece of evidence: a fresh node even
        # for duplicate bytes, sharing one content-addressed object
        label = title or f"{media_type} {ref.digest[:12]} ({job.job_id})"
        doc_id, _ = self.store.upsert_node(doc_type, label, actor, attributes=attributes, dedup=False)
        job.document_id = doc_id
        job.produced_ids.append(doc_id)
        self.provenance.append(
            actor,
            "ingest",
            {"job_id": job.job_id, "document": doc_id, "object": ref.to_dict()},
        )
        job.status = "running"
        matched = [
            m for m, d in self.descriptors.items() if any(fnmatch.fnmatch(media_type, p) for p in d.ingest_types)
        ]
        if not matched:
            job.warnings.append(f"no module accepts media type {media_type!r}")
            log.warning("ingest %s: no module accepts %s", job.job_id, media_type)
        for module_id in sorted(matched):
            self._schedule(module_id, doc_id, doc_id, {}, depth=1, job_id=job.job_id)
        self._drain()
        if job.status == "running":
            job.status = "done"
        return job

    # -- dispatch ----------------------------------------------------------------

    def notify_mutation(self, item_id: str, mutation: str, job_id: str | None = None) -> None:
        """Propagate a committed mutation to matching change listeners."""
        item = self.store.get_item(item_id)
        depth = item.cascade_depth + 1
        for module_id in sorted(self.descriptors):
            descriptor = self.descriptors[module_id]
            for listener in descriptor.listeners:
                if listener.get("mutation", mutation) != mutation:
                    continue
                item_type = getattr(item, "type", None)
                if item_type is None or not path_is_descendant(item_type, listener["type"]):
                    continue
                source_doc = self._source_document(item_id)
                self._schedule(module_id, item_id, source_doc, {}, depth=depth, job_id=job_id)
                break
        self._drain()

    def _source_document(self, item_id: str) -> str:
        item = self.store.get_item(item_id)
        if hasattr(item, "type") and path_is_descendant(item.type, "Thing/Document"):
            return item_id
        attributions = getattr(item, "attributions", None) or []
        if attributions and attributions[0][0]:
            return attributions[0][0]
        return item_id

    def _schedule(self, module_id: str, item_id: str, source_doc: str, params: dict, depth: int, job_id=None) -> None:
        if depth > self.max_cascade_depth:
            log.warning("cascade depth %d exceeds limit %d; dropping run of %s on %s", depth, self.max_cascade_depth, module_id, item_id)
            return
        key = (module_id, item_id, content_digest(self.store.get_item(item_id)), _params_digest(params))
        if key in self._dispatched:
            return
        self._dispatched.add(key)
        self._queue.append((module_id, item_id, source_doc, params, depth, job_id))

    def _drain(self) -> None:
        if self._draining:
            return
        self._draining = True
        try:
            while self._queue:
                self._execute(*self._queue.pop(0))
        finally:
            self._draining = False

    def _execute(self, module_id: str, item_id: str, source_doc: str, params: dict, depth: int, job_id) -> None:
        module = self.modules[module_id]
        run = RunRecord(self._next("run"), module_id, item_id, source_doc, params, depth, job_id)
        self.runs[run.run_id] = run
        actor = Actor("module", module_id)
        self.provenance.append(
            actor,
            "module_run",
            {
                "run_id": run.run_id,
                "module": module_id,
                "trigger_item": item_id,
                "source_document": source_doc,
                "params": params,
                "depth": depth,
            },
        )
        ctx = ModuleContext(self.store, self.objects, item_id, source_doc, params)
        try:
            result = module.run(ctx)
            self._commit(run, result, actor, depth)
        except Exception as exc:  # failed runs never partially apply candidates
            run.status = "failed"
            log.error("module run %s (%s) failed: %s", run.run_id, module_id, exc)
            if job_id and job_id in self.jobs:
                self.jobs[job_id].status = "failed"
                self.jobs[job_id].error = str(exc)
            return
        if job_id and job_id in self.jobs:
            self.jobs[job_id].produced_ids.extend(run.produced_ids)

    def _commit(self, run: RunRecord, result: RunResult, actor: Actor, depth: int) -> None:
        # validate everything before the first mutation so a bad candidate
        # set never half-applies
        refs = {c.key for c in result.nodes}
        for candidate in result.nodes:
            self.store.schema.require(candidate.type)
            self.store.schema.validate_attributes(candidate.type, candidate.attributes)
        for candidate in result.edges:
            for ref in (candidate.from_ref, candidate.to_ref):
                if ref not in refs and not self.store.has_item(ref):
                    raise UnknownItemError(f"edge candidate references unknown {ref!r}")
        attribution = (run.source_doc_id, run.module_id)
        id_map: dict[str, str] = {}
        created: list[tuple[str, str]] = []
        for candidate in result.nodes:
            node_id, outcome = self.store.upsert_node(
                candidate.type,
                candidate.label,
                actor,
                attributes=candidate.attributes,
                attribution=attribution,
                cascade_depth=depth,
            )
            id_map[candidate.key] = node_id
            run.produced_ids.append(node_id)
            created.append((node_id, "create_node" if outcome == "created" else "update_node"))
        for candidate in result.edges:
            edge_id = self.store.upsert_edge(
                candidate.kind,
                id_map.get(candidate.from_ref, candidate.from_ref),
                id_map.get(candidate.to_ref, candidate.to_ref),
                actor,
                grade=candidate.grade,
                attribution=attribution,
                attributes=candidate.attributes,
                cascade_depth=depth,
            )
            run.produced_ids.append(edge_id)
        for node_id, mutation in created:
            item = self.store.get_item(node_id)
            for module_id in sorted(self.descriptors):
                for listener in self.descriptors[module_id].listeners:
                    if listener.get("mutation", mutation) != mutation:
                        continue
                    if not path_is_descendant(item.type, listener["type"]):
                        continue
                    self._schedule(
                        module_id,
                        node_id,
                        self._source_document(node_id),
                        {},
                        depth=depth + 1,
                        job_id=run.job_id,
                    )
                    break

    # -- parameterized re-runs ---------------------------------------------------

    def rerun_with_parameters(
        self, item_id: str, module_id: str, params: dict, actor: Actor | None = None
    ) -> list[str]:
        """Supersede a prior run's results and re-execute with new parameters.

        Returns the ids hidden as superseded. Re-running with identical
        parameters is a no-op (dispatch idempotence).
        """
        prior = [r for r in self.runs.values() if r.module_id == module_id and r.trigger_item_id == item_id]
        if not prior:
            raise UnknownItemError(f"no prior run of {module_id!r} on {item_id!r}")
        key = (module_id, item_id, content_digest(self.store.get_item(item_id)), _params_digest(params))
        if key in self._dispatched:
            return []
        old_produced = self._transitive_produced(prior)
        superseded = self._hide_superseded(old_produced, actor or Actor("user", "system"))
        source_doc = self._source_document(item_id)
        depth = self.store.get_item(item_id).cascade_depth + 1
        self._schedule(module_id, item_id, source_doc, params, depth=depth, job_id=prior[-1].job_id)
        self._drain()
        return superseded

    def _transitive_produced(self, roots: list[RunRecord]) -> list[str]:
        """Items produced by the given runs plus all downstream cascade runs."""
        produced: list[str] = []
        seen_items: set[str] = set()
        done_runs: set[str] = set()
        frontier = list(roots)
        while frontier:
            run = frontier.pop(0)
            if run.run_id in done_runs:
                continue
            done_runs.add(run.run_id)
            for item_id in run.produced_ids:
                if item_id not in seen_items:
                    seen_items.add(item_id)
                    produced.append(item_id)
            frontier.extend(
                r for r in self.runs.values() if r.run_id not in done_runs and r.trigger_item_id in seen_items
            )
        return produced

    def _hide_superseded(self, item_ids: list[str], actor: Actor) -> list[str]:
        """Hide superseded results, documents first.

        A node with an attribution to a still-visible document stays visible:
        hiding one source must not suppress independently-corroborated items.
        """
        hidden: list[str] = []
        nodes = [i for i in item_ids if i in self.store.nodes]
        edges = [i for i in item_ids if i in self.store.edges]
        docs = [i for i in nodes if path_is_descendant(self.store.nodes[i].type, "Thing/Document")]
        others = [i for i in nodes if i not in docs]
        for doc_id in docs:
            if not self.store.nodes[doc_id].hidden:
                hidden.extend(self.store.hide(doc_id, actor, reason="superseded"))
        for node_id in others:
            node = self.store.nodes[node_id]
            if node.hidden:
                continue
            sources = node.source_documents()
            if sources and all(self.store.nodes[d].hidden for d in sources if d in self.store.nodes):
                hidden.extend(self.store.hide(node_id, actor, reason="superseded"))
        for edge_id in edges:
            edge = self.store.edges[edge_id]
            if edge.hidden:
                continue
            if edge.attribution and edge.attribution[0] in self.store.nodes and self.store.nodes[edge.attribution[0]].hidden:
                hidden.extend(self.store.hide(edge_id, actor, reason="superseded"))
        return hidden
