"""Runtime of the integrated graph data model.

The store is a pure fold over the provenance log: every public mutation
seals its fully-resolved payload (including generated ids and clamped
grades) into the log first, then applies it to in-memory state. Replaying
the log therefore reproduces the store byte for byte.

Nothing is ever deleted; hiding flips a flag and keeps items retrievable.
"""

from __future__ import annotations

import re
import unicodedata
from collections import deque
from dataclasses import dataclass, field

from casegraph.errors import PermissionError_, SchemaError, UnknownItemError, ValidationError
from casegraph.provenance import ProvenanceEntry, ProvenanceLog, trace_entries
from casegraph.schema import (
    Actor,
    ConfidenceGrade,
    GRADE_UNKNOWN,
    SchemaRegistry,
    cap_automated_grade,
    path_is_descendant,
)

ALIAS_KIND = "same_as"
_ID_RE = re.compile(r"^[ne](\d+)$")


def normalize_label(label: str) -> str:
    """NFC + case-fold + whitespace collapse; the node dedup key component."""
    return " ".join(unicodedata.normalize("NFC", label).casefold().split())


@dataclass
class NodeRecord:
    id: str
    type: str
    label: str
    attributes: dict
    hidden: bool
    created_by: Actor
    created_at: float
    cascade_depth: int
    attributions: list  # list of [doc_id, module_id]
    reviewed: bool = False
    hide_reason: str | None = None
    annotations: list = field(default_factory=list)

    def source_documents(self) -> set[str]:
        return {a[0] for a in self.attributions if a and a[0]}


@dataclass
class EdgeRecord:
    id: str
    kind: str
    from_id: str
    to_id: str
    grade: ConfidenceGrade
    attribution: list | None  # [doc_id, module_id], either element may be None
    hidden: bool
    created_by: Actor
    created_at: float
    cascade_depth: int
    attributes: dict = field(default_factory=dict)
    reviewed: bool = False
    hide_reason: str | None = None
    annotations: list = field(default_factory=list)

    def other(self, node_id: str) -> str:
        return self.to_id if node_id == self.from_id else self.from_id


@dataclass
class ViewFilter:
    time_range: tuple[float, float] | None = None
    min_grade: ConfidenceGrade | None = None
    cross_match_only: bool = False
    include_hidden: bool = False
    type_selection: list[str] | None = None  # None = all types toggled on

    def __post_init__(self):
        if self.time_range is not None and self.time_range[0] > self.time_range[1]:
            raise ValidationError("time_range start after end")


@dataclass
class AliasCluster:
    representative: str
    members: list[str]
    confirming_edges: list[str]
    grade: ConfidenceGrade


@dataclass
class GraphView:
    nodes: set[str]
    edges: set[str]
    clusters: list[AliasCluster] = field(default_factory=list)


class GraphStore:
    def __init__(self, schema: SchemaRegistry, log: ProvenanceLog | None, clock=None):
        self.schema = schema
        self.log = log
        self.clock = clock if clock is not None else (log.clock if log else (lambda: 0.0))
        self.nodes: dict[str, NodeRecord] = {}
        self.edges: dict[str, EdgeRecord] = {}
        self._adjacency: dict[str, set[str]] = {}
        self._dedup: dict[tuple[str, str], list[str]] = {}
        self._counter = 0

    # -- id generation ------------------------------------------------------

    def _new_id(self, prefix: str) -> str:
        node_id = f"{prefix}{self._counter:08d}"
        self._counter += 1
        return node_id

    def _track_id(self, item_id: str) -> None:
        m = _ID_RE.match(item_id)
        if m:
            self._counter = max(self._counter, int(m.group(1)) + 1)

    # -- logging ------------------------------------------------------------

    def _commit(self, actor: Actor, mutation: str, payload: dict) -> None:
        """Durable-log first, then apply. Mutations never apply unlogged."""
        if self.log is not None:
            self.log.append(actor, mutation, payload)
        self._apply(mutation, payload)

    # -- mutations ------------------------------------------------------------

    def upsert_node(
        self,
        type_path: str,
        label: str,
        actor: Actor,
        attributes: dict | None = None,
        attribution: tuple[str | None, str | None] | None = None,
        cascade_depth: int = 0,
        dedup: bool = True,
    ) -> tuple[str, str]:
        """Create a node or merge into an existing visible duplicate.

        Returns (node id, "created" | "merged"). Duplicate = identical type
        and normalized label; fuzzier identity goes through merge_cluster.
        Ingest passes dedup=False: each submission is separate evidence.
        """
        attributes = dict(attributes or {})
        self.schema.require(type_path)
        self.schema.validate_attributes(type_path, attributes)
        key = (type_path, normalize_label(label))
        for existing_id in self._dedup.get(key, []) if dedup else ():
            node = self.nodes[existing_id]
            if node.hidden:
                continue
            if attribution is not None and list(attribution) not in node.attributions:
                self._commit(actor, "update_node", {"id": existing_id, "add_attribution": list(attribution)})
            return existing_id, "merged"
        node_id = self._new_id("n")
        payload = {
            "id": node_id,
            "type": type_path,
            "label": label,
            "attributes": attributes,
            "created_by": actor.to_dict(),
            "created_at": float(self.clock()),
            "cascade_depth": cascade_depth,
            "attributions": [list(attribution)] if attribution is not None else [],
            "reviewed": actor.is_user,
        }
        self._commit(actor, "create_node", payload)
        return node_id, "created"

    def upsert_edge(
        self,
        kind: str,
        from_id: str,
        to_id: str,
        actor: Actor,
        grade: ConfidenceGrade = GRADE_UNKNOWN,
        attribution: tuple[str | None, str | None] | None = None,
        attributes: dict | None = None,
        cascade_depth: int = 0,
    ) -> str:
        if from_id not in self.nodes:
            raise UnknownItemError(f"dangling edge endpoint {from_id!r}")
        if to_id not in self.nodes:
            raise UnknownItemError(f"dangling edge endpoint {to_id!r}")
        if not self.schema.has_relationship(kind):
            raise SchemaError(f"unregistered relationship kind {kind!r}")
        if not self.schema.allows_endpoints(kind, self.nodes[from_id].type, self.nodes[to_id].type):
            raise SchemaError(
                f"kind {kind!r} does not allow endpoints "
                f"{self.nodes[from_id].type} -> {self.nodes[to_id].type}"
            )
        edge_id = self._new_id("e")
        stored = grade
        if not actor.is_user:
            stored = cap_automated_grade(grade)
            if stored != grade:
                self._commit(
                    actor,
                    "clamp_grade",
                    {"id": edge_id, "requested": str(grade), "stored": str(stored)},
                )
        payload = {
            "id": edge_id,
            "kind": kind,
            "from": from_id,
            "to": to_id,
            "grade": str(stored),
            "attribution": list(attribution) if attribution is not None else None,
            "attributes": dict(attributes or {}),
            "created_by": actor.to_dict(),
            "created_at": float(self.clock()),
            "cascade_depth": cascade_depth,
            "reviewed": actor.is_user,
        }
        self._commit(actor, "create_edge", payload)
        return edge_id

    def hide(self, item_id: str, actor: Actor, reason: str) -> list[str]:
        """Hide an item; hiding a node hides its incident edges too.

        Returns the ids hidden, in order. Non-destructive: everything stays
        retrievable with include_hidden.
        """
        item = self._get_item(item_id)
        if item.hidden:
            raise ValidationError(f"item {item_id!r} is already hidden")
        hidden_ids = [item_id]
        self._commit(actor, "hide", {"id": item_id, "reason": reason})
        if item_id in self.nodes:
            for edge_id in sorted(self._adjacency.get(item_id, ())):
                if not self.edges[edge_id].hidden:
                    self._commit(actor, "hide", {"id": edge_id, "reason": reason})
                    hidden_ids.append(edge_id)
        return hidden_ids

    def review(self, item_id: str, actor: Actor, new_grade: ConfidenceGrade | None = None) -> None:
        """User verification: marks reviewed and, for edges, replaces the grade.

        Grades may move in either direction; only the automated cap is one-sided.
        """
        if not actor.is_user:
            raise PermissionError_("only user actors may review items")
        self._get_item(item_id)
        payload = {"id": item_id, "new_grade": str(new_grade) if new_grade else None}
        self._commit(actor, "review", payload)

    def annotate(self, item_id: str, actor: Actor, comment: str, disposition: str = "none") -> None:
        if disposition not in ("none", "flagged", "disproved"):
            raise ValidationError(f"invalid disposition {disposition!r}")
        item = self._get_item(item_id)
        payload = {
            "id": item_id,
            "comment": comment,
            "disposition": disposition,
            "at": float(self.clock()),
        }
        self._commit(actor, "annotate", payload)
        if disposition == "disproved" and not item.hidden:
            self.hide(item_id, actor, reason="disproved")

    def merge_cluster(self, member_ids: list[str], actor: Actor, grade: ConfidenceGrade) -> AliasCluster:
        """Confirm alias members into a cluster via same_as edges to the representative."""
        if not actor.is_user:
            raise PermissionError_("only user actors may merge clusters")
        if len(set(member_ids)) < 2:
            raise ValidationError("a cluster needs at least 2 distinct members")
        members = [self._get_node(m) for m in member_ids]
        layers = {self.schema.first_layer(m.type) for m in members}
        if len(layers) != 1:
            raise ValidationError(f"cluster members span first-layer types {sorted(layers)}")
        representative = min(members, key=lambda m: (m.created_at, m.id))
        edge_ids = []
        for member in members:
            if member.id == representative.id:
                continue
            edge_ids.append(
                self.upsert_edge(ALIAS_KIND, member.id, representative.id, actor, grade=grade)
            )
        grades = [self.edges[e].grade for e in edge_ids]
        cluster_grade = min(grades, key=lambda g: (g.reliability_rank, g.credibility_rank))
        return AliasCluster(
            representative=representative.id,
            members=sorted(m.id for m in members),
            confirming_edges=edge_ids,
            grade=cluster_grade,
        )

    # -- event-sourcing fold --------------------------------------------------

    def _apply(self, mutation: str, payload: dict) -> None:
        if mutation == "create_node":
            node = NodeRecord(
                id=payload["id"],
                type=payload["type"],
                label=payload["label"],
                attributes=dict(payload["attributes"]),
                hidden=False,
                created_by=Actor.from_dict(payload["created_by"]),
                created_at=payload["created_at"],
                cascade_depth=payload["cascade_depth"],
                attributions=[list(a) for a in payload["attributions"]],
                reviewed=payload["reviewed"],
            )
            self.nodes[node.id] = node
            self._adjacency.setdefault(node.id, set())
            self._dedup.setdefault((node.type, normalize_label(node.label)), []).append(node.id)
            self._track_id(node.id)
        elif mutation == "update_node":
            node = self.nodes[payload["id"]]
            attribution = list(payload["add_attribution"])
            if attribution not in node.attributions:
                node.attributions.append(attribution)
        elif mutation == "create_edge":
            edge = EdgeRecord(
                id=payload["id"],
                kind=payload["kind"],
                from_id=payload["from"],
                to_id=payload["to"],
                grade=ConfidenceGrade.parse(payload["grade"]),
                attribution=list(payload["attribution"]) if payload["attribution"] else None,
                hidden=False,
                created_by=Actor.from_dict(payload["created_by"]),
                created_at=payload["created_at"],
                cascade_depth=payload["cascade_depth"],
                attributes=dict(payload["attributes"]),
                reviewed=payload["reviewed"],
            )
            self.edges[edge.id] = edge
            self._adjacency.setdefault(edge.from_id, set()).add(edge.id)
            self._adjacency.setdefault(edge.to_id, set()).add(edge.id)
            self._track_id(edge.id)
        elif mutation == "hide":
            item = self._get_item(payload["id"])
            item.hidden = True
            item.hide_reason = payload["reason"]
        elif mutation == "review":
            item = self._get_item(payload["id"])
            item.reviewed = True
            if payload["new_grade"] and isinstance(item, EdgeRecord):
                item.grade = ConfidenceGrade.parse(payload["new_grade"])
        elif mutation == "annotate":
            item = self._get_item(payload["id"])
            item.annotations.append(
                {"comment": payload["comment"], "disposition": payload["disposition"], "at": payload["at"]}
            )
        # ingest / module_run / clamp_grade / search_executed / ontology_edit
        # leave graph state untouched.

    @classmethod
    def replay(
        cls,
        entries: list[ProvenanceEntry],
        schema: SchemaRegistry,
        up_to_seq: int | None = None,
    ) -> "GraphStore":
        """Reconstruct store state by folding the log (optionally a prefix)."""
        store = cls(schema, log=None)
        for entry in entries:
            if up_to_seq is not None and entry.seq > up_to_seq:
                break
            store._apply(entry.mutation, entry.payload)
        return store

    def state_snapshot(self) -> dict:
        """Comparable full state: ids, grades, hidden flags, everything."""
        return {
            "nodes": {
                n.id: {
                    "type": n.type,
                    "label": n.label,
                    "attributes": n.attributes,
                    "hidden": n.hidden,
                    "hide_reason": n.hide_reason,
                    "created_by": n.created_by.to_dict(),
                    "created_at": n.created_at,
                    "cascade_depth": n.cascade_depth,
                    "attributions": n.attributions,
                    "reviewed": n.reviewed,
                    "annotations": n.annotations,
                }
                for n in self.nodes.values()
            },
            "edges": {
                e.id: {
                    "kind": e.kind,
                    "from": e.from_id,
                    "to": e.to_id,
                    "grade": str(e.grade),
                    "attribution": e.attribution,
                    "attributes": e.attributes,
                    "hidden": e.hidden,
                    "hide_reason": e.hide_reason,
                    "created_by": e.created_by.to_dict(),
                    "created_at": e.created_at,
                    "cascade_depth": e.cascade_depth,
                    "reviewed": e.reviewed,
                    "annotations": e.annotations,
                }
                for e in self.edges.values()
            },
        }

    # -- lookups ------------------------------------------------------------

    def _get_item(self, item_id: str) -> NodeRecord | EdgeRecord:
        if item_id in self.nodes:
            return self.nodes[item_id]
        if item_id in self.edges:
            return self.edges[item_id]
        raise UnknownItemError(f"unknown item {item_id!r}")

    def _get_node(self, node_id: str) -> NodeRecord:
        if node_id not in self.nodes:
            raise UnknownItemError(f"unknown node {node_id!r}")
        return self.nodes[node_id]

    def get_item(self, item_id: str) -> NodeRecord | EdgeRecord:
        return self._get_item(item_id)

    def has_item(self, item_id: str) -> bool:
        return item_id in self.nodes or item_id in self.edges

    def incident_edges(self, node_id: str) -> set[str]:
        return set(self._adjacency.get(node_id, ()))

    def trace(self, item_id: str) -> list[ProvenanceEntry]:
        """Chronological provenance for an item, its source documents included."""
        if self.log is None:
            raise UnknownItemError("store has no provenance log")
        item = self._get_item(item_id)
        related: set[str] = set()
        if isinstance(item, NodeRecord):
            frontier = list(item.source_documents())
        else:
            frontier = [item.attribution[0]] if item.attribution and item.attribution[0] else []
        # chase attribution documents transitively so derived items trace
        # back to their original ingest
        while frontier:
            doc_id = frontier.pop()
            if doc_id in related or doc_id not in self.nodes:
                continue
            related.add(doc_id)
            frontier.extend(self.nodes[doc_id].source_documents())
        return trace_entries(self.log, item_id, related)

    # -- views ----------------------------------------------------------------

    def _node_visible(self, node: NodeRecord, f: ViewFilter) -> bool:
        if node.hidden and not f.include_hidden:
            return False
        if f.type_selection is not None and not any(
            path_is_descendant(node.type, t) for t in f.type_selection
        ):
            return False
        if f.cross_match_only and len(node.source_documents()) < 2:
            return False
        if f.time_range is not None and not self._time_associated(node, f):
            return False
        return True

    def _time_associated(self, node: NodeRecord, f: ViewFilter) -> bool:
        t0, t1 = f.time_range
        if self._datetime_in_range(node, t0, t1):
            return True
        if path_is_descendant(node.type, "Thing/Document"):
            ts = node.attributes.get("timestamp")
            return ts is not None and t0 <= ts <= t1
        # 1 hop from a Datetime node intersecting the range
        for edge_id in self._adjacency.get(node.id, ()):
            edge = self.edges[edge_id]
            if edge.hidden and not f.include_hidden:
                continue
            other = self.nodes[edge.other(node.id)]
            if self._datetime_in_range(other, t0, t1):
                return True
        # attributed to a document whose timestamp lies in range
        for doc_id in node.source_documents():
            doc = self.nodes.get(doc_id)
            if doc is not None:
                ts = doc.attributes.get("timestamp")
                if ts is not None and t0 <= ts <= t1:
                    return True
        return False

    @staticmethod
    def _datetime_in_range(node: NodeRecord, t0: float, t1: float) -> bool:
        if not path_is_descendant(node.type, "Thing/Datetime"):
            return False
        interval = node.attributes.get("interval")
        if interval is not None and interval[0] <= t1 and t0 <= interval[1]:
            return True
        at = node.attributes.get("at")
        return at is not None and t0 <= at <= t1

    def _edge_visible(self, edge: EdgeRecord, f: ViewFilter, node_ok) -> bool:
        if edge.hidden and not f.include_hidden:
            return False
        if f.min_grade is not None and not edge.grade.at_least(f.min_grade):
            return False
        return node_ok(edge.from_id) and node_ok(edge.to_id)

    def apply_filter(self, f: ViewFilter | None = None) -> GraphView:
        f = f or ViewFilter()
        visible_nodes = {n.id for n in self.nodes.values() if self._node_visible(n, f)}
        node_ok = visible_nodes.__contains__
        visible_edges = {e.id for e in self.edges.values() if self._edge_visible(e, f, node_ok)}
        clusters = self._clusters(visible_nodes, visible_edges)
        return GraphView(nodes=visible_nodes, edges=visible_edges, clusters=clusters)

    def _clusters(self, visible_nodes: set[str], visible_edges: set[str]) -> list[AliasCluster]:
        """Connected components of visible same_as edges, one super-node each."""
        parent: dict[str, str] = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for edge_id in visible_edges:
            edge = self.edges[edge_id]
            if edge.kind != ALIAS_KIND:
                continue
            for nid in (edge.from_id, edge.to_id):
                parent.setdefault(nid, nid)
            ra, rb = find(edge.from_id), find(edge.to_id)
            if ra != rb:
                parent[ra] = rb
        groups: dict[str, list[str]] = {}
        for nid in parent:
            groups.setdefault(find(nid), []).append(nid)
        clusters = []
        for members in groups.values():
            if len(members) < 2:
                continue
            edge_ids = sorted(
                e
                for e in visible_edges
                if self.edges[e].kind == ALIAS_KIND
                and self.edges[e].from_id in members
                and self.edges[e].to_id in members
            )
            grades = [self.edges[e].grade for e in edge_ids]
            rep = min(
                (self.nodes[m] for m in members), key=lambda n: (n.created_at, n.id)
            ).id
            clusters.append(
                AliasCluster(
                    representative=rep,
                    members=sorted(members),
                    confirming_edges=edge_ids,
                    grade=min(grades, key=lambda g: (g.reliability_rank, g.credibility_rank)),
                )
            )
        return sorted(clusters, key=lambda c: c.representative)

    def neighborhood(self, center: str, k: int, f: ViewFilter | None = None) -> GraphView:
        """Nodes at BFS distance <= k in the filtered subgraph, plus all edges among them.

        Visibility is evaluated lazily per encountered item, so the query
        stays fast on large graphs.
        """
        f = f or ViewFilter()
        if k < 0:
            raise ValidationError("hop count must be >= 0")
        center_node = self._get_node(center)
        if not self._node_visible(center_node, f):
            raise UnknownItemError(f"center {center!r} is not visible under the filter")
        vis_cache: dict[str, bool] = {}

        def node_ok(node_id: str) -> bool:
            if node_id not in vis_cache:
                vis_cache[node_id] = self._node_visible(self.nodes[node_id], f)
            return vis_cache[node_id]

        reached = {center}
        frontier = deque([(center, 0)])
        while frontier:
            node_id, depth = frontier.popleft()
            if depth == k:
                continue
            for edge_id in self._adjacency.get(node_id, ()):
                edge = self.edges[edge_id]
                if edge.hidden and not f.include_hidden:
                    continue
                if f.min_grade is not None and not edge.grade.at_least(f.min_grade):
                    continue
                other = edge.other(node_id)
                if other in reached or not node_ok(other):
                    continue
                reached.add(other)
                frontier.append((other, depth + 1))
        edges = {
            e_id
            for node_id in reached
            for e_id in self._adjacency.get(node_id, ())
            if self.edges[e_id].from_id in reached
            and self.edges[e_id].to_id in reached
            and self._edge_visible(self.edges[e_id], f, node_ok)
        }
        return GraphView(nodes=reached, edges=edges, clusters=self._clusters(reached, edges))
