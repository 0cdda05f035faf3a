"""HTTP/JSON service: the single boundary clients talk through.

Every mutating request carries a bearer token resolved to a user actor and
a capability set (read, ingest, annotate, review, admin). With no token
table configured the instance is open and fully capable, for local use.
"""

from __future__ import annotations

import base64
import binascii

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import HTMLResponse, JSONResponse

from casegraph import report as report_mod
from casegraph.engine import CaseEngine, actor_for_token, parse_view_filter
from casegraph.errors import (
    CaseGraphError,
    ChainBrokenError,
    PermissionError_,
    SchemaError,
    StorageError,
    UnknownItemError,
    ValidationError,
)
from casegraph.schema import ConfidenceGrade
from casegraph.search import SearchQuery

DEFAULT_PAGE_SIZE = 200

_STATUS = {
    UnknownItemError: 404,
    ValidationError: 422,
    SchemaError: 422,
    PermissionError_: 403,
    StorageError: 500,
    ChainBrokenError: 500,
}


def _error_response(status: int, code: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "details": details},
    )


def node_payload(store, node_id: str) -> dict:
    node = store.nodes[node_id]
    return {
        "id": node.id,
        "type": node.type,
        "label": node.label,
        "attributes": node.attributes,
        "hidden": node.hidden,
        "hide_reason": node.hide_reason,
        "reviewed": node.reviewed,
        "cascade_depth": node.cascade_depth,
        "attributions": node.attributions,
        "annotations": node.annotations,
        "created_at": node.created_at,
    }


def edge_payload(store, edge_id: str) -> dict:
    edge = store.edges[edge_id]
    return {
        "id": edge.id,
        "kind": edge.kind,
        "from": edge.from_id,
        "to": edge.to_id,
        "grade": str(edge.grade),
        "attributes": edge.attributes,
        "hidden": edge.hidden,
        "hide_reason": edge.hide_reason,
        "reviewed": edge.reviewed,
        "attribution": edge.attribution,
        "created_at": edge.created_at,
    }


def view_payload(store, view, cursor: str | None, limit: int) -> dict:
    """Cursor pagination over node ids; edges ride along with their page."""
    node_ids = sorted(view.nodes)
    if cursor:
        node_ids = [n for n in node_ids if n > cursor]
    page = node_ids[:limit]
    page_set = set(page)
    edges = [
        edge_payload(store, e)
        for e in sorted(view.edges)
        if store.edges[e].from_id in page_set or store.edges[e].to_id in page_set
    ]
    return {
        "nodes": [node_payload(store, n) for n in page],
        "edges": edges,
        "clusters": [
            {
                "representative": c.representative,
                "members": c.members,
                "confirming_edges": c.confirming_edges,
                "grade": str(c.grade),
            }
            for c in view.clusters
        ],
        "total_nodes": len(view.nodes),
        "total_edges": len(view.edges),
        "next_cursor": page[-1] if len(node_ids) > limit else None,
    }


def create_app(engine: CaseEngine) -> FastAPI:
    app = FastAPI(title="casegraph", docs_url=None, redoc_url=None)

    def session(authorization: str | None = Header(default=None)):
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        resolved = actor_for_token(engine.config, token)
        if resolved is None:
            raise PermissionError_("unknown or missing bearer token")
        return resolved

    def need(capability: str, caps: set[str]) -> None:
        if capability not in caps:
            raise PermissionError_(f"capability {capability!r} required")

    @app.exception_handler(CaseGraphError)
    async def _handle(request: Request, exc: CaseGraphError):
        # unknown tokens surface as 401, capability misses as 403
        if isinstance(exc, PermissionError_) and "bearer token" in str(exc):
            return _error_response(401, "unauthorized", str(exc))
        status = next((s for t, s in _STATUS.items() if isinstance(exc, t)), 500)
        return _error_response(status, type(exc).__name__, str(exc))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "log_head_hash": engine.head_hash(), "entries": len(engine.log)}

    @app.get("/schema")
    def schema(auth=Depends(session)):
        need("read", auth[1])
        return engine.schema.describe()

    # -- ingest ---------------------------------------------------------------

    @app.post("/ingest")
    def ingest(body: dict, auth=Depends(session)):
        actor, caps = auth
        need("ingest", caps)
        try:
            data = base64.b64decode(body["content_base64"], validate=True)
        except (KeyError, binascii.Error) as exc:
            raise ValidationError(f"invalid ingest body: {exc}")
        if "media_type" not in body:
            raise ValidationError("media_type is required")
        job = engine.ingest(
            data,
            body["media_type"],
            actor,
            title=body.get("title"),
            timestamp=body.get("timestamp"),
        )
        return {
            "job_id": job.job_id,
            "status": job.status,
            "document": job.document_id,
            "produced": job.produced_ids,
            "warnings": job.warnings,
            "error": job.error,
        }

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str, auth=Depends(session)):
        need("read", auth[1])
        job = engine.job(job_id)
        return {
            "job_id": job.job_id,
            "status": job.status,
            "document": job.document_id,
            "produced": job.produced_ids,
            "warnings": job.warnings,
            "error": job.error,
        }

    # -- graph ----------------------------------------------------------------

    @app.get("/graph/view")
    def graph_view(
        request: Request,
        cursor: str | None = None,
        limit: int = Query(default=DEFAULT_PAGE_SIZE, ge=1, le=10000),
        auth=Depends(session),
    ):
        _, caps = auth
        need("read", caps)
        params = dict(request.query_params)
        view_filter = parse_view_filter(params)
        view = engine.view(view_filter)
        return view_payload(engine.store, view, cursor, limit)

    @app.get("/graph/neighborhood")
    def neighborhood(
        request: Request,
        center: str,
        k: int = 2,
        cursor: str | None = None,
        limit: int = Query(default=DEFAULT_PAGE_SIZE, ge=1, le=10000),
        auth=Depends(session),
    ):
        need("read", auth[1])
        view_filter = parse_view_filter(dict(request.query_params))
        view = engine.neighborhood(center, k, view_filter)
        payload = view_payload(engine.store, view, cursor, limit)
        payload["center"] = center
        payload["k"] = k
        return payload

    @app.post("/nodes")
    def create_node(body: dict, auth=Depends(session)):
        actor, caps = auth
        need("review", caps)
        node_id, outcome = engine.store.upsert_node(
            body["type"], body["label"], actor, attributes=body.get("attributes")
        )
        return {"id": node_id, "outcome": outcome}

    @app.post("/edges")
    def create_edge(body: dict, auth=Depends(session)):
        actor, caps = auth
        need("review", caps)
        grade = ConfidenceGrade.parse(body["grade"]) if body.get("grade") else None
        kwargs = {"grade": grade} if grade else {}
        edge_id = engine.store.upsert_edge(
            body["kind"], body["from"], body["to"], actor, attributes=body.get("attributes"), **kwargs
        )
        return {"id": edge_id}

    @app.post("/clusters/merge")
    def merge_cluster(body: dict, auth=Depends(session)):
        actor, caps = auth
        need("review", caps)
        cluster = engine.store.merge_cluster(body["members"], actor, ConfidenceGrade.parse(body["grade"]))
        return {
            "representative": cluster.representative,
            "members": cluster.members,
            "confirming_edges": cluster.confirming_edges,
            "grade": str(cluster.grade),
        }

    # -- items ----------------------------------------------------------------

    @app.get("/items/{item_id}")
    def get_item(item_id: str, include_hidden: bool = False, auth=Depends(session)):
        need("read", auth[1])
        item = engine.item_or_raise(item_id)
        if item.hidden and not include_hidden:
            raise UnknownItemError(f"unknown item {item_id!r}")
        if item_id in engine.store.nodes:
            return node_payload(engine.store, item_id)
        return edge_payload(engine.store, item_id)

    @app.post("/items/{item_id}/hide")
    def hide_item(item_id: str, body: dict, auth=Depends(session)):
        actor, caps = auth
        need("annotate", caps)
        hidden = engine.store.hide(item_id, actor, body.get("reason", "hidden by analyst"))
        return {"hidden": hidden}

    @app.post("/items/{item_id}/review")
    def review_item(item_id: str, body: dict, auth=Depends(session)):
        actor, caps = auth
        need("review", caps)
        grade = ConfidenceGrade.parse(body["new_grade"]) if body.get("new_grade") else None
        engine.store.review(item_id, actor, new_grade=grade)
        return {"id": item_id, "reviewed": True}

    @app.post("/items/{item_id}/annotate")
    def annotate_item(item_id: str, body: dict, auth=Depends(session)):
        actor, caps = auth
        need("annotate", caps)
        engine.store.annotate(item_id, actor, body.get("comment", ""), body.get("disposition", "none"))
        return {"id": item_id, "annotations": len(engine.item_or_raise(item_id).annotations)}

    @app.get("/items/{item_id}/trace")
    def trace_item(item_id: str, auth=Depends(session)):
        need("read", auth[1])
        return {"item": item_id, "entries": [e.to_dict() for e in engine.trace(item_id)]}

    @app.get("/items/{item_id}/actions")
    def item_actions(item_id: str, include_hidden: bool = False, auth=Depends(session)):
        need("read", auth[1])
        actions = engine.item_actions(item_id, include_hidden=include_hidden)
        preview = engine.orchestrator.preview_handler(item_id)
        return {"item": item_id, "actions": actions, "preview": preview}

    @app.post("/actions/{module_id}/{action}")
    def run_action(module_id: str, action: str, body: dict, auth=Depends(session)):
        actor, caps = auth
        need("ingest", caps)
        known = {a["action"] for a in engine.orchestrator.descriptors[module_id].context_actions} if module_id in engine.orchestrator.descriptors else set()
        if module_id not in engine.orchestrator.descriptors:
            raise UnknownItemError(f"unknown module {module_id!r}")
        if action not in known and action != "rerun":
            raise UnknownItemError(f"module {module_id!r} has no action {action!r}")
        superseded = engine.run_action(module_id, body["item"], body.get("params", {}), actor)
        return {"module": module_id, "action": action, "superseded": superseded}

    # -- documents ------------------------------------------------------------

    @app.get("/documents/{doc_id}/mentions")
    def document_mentions(doc_id: str, include_hidden: bool = False, auth=Depends(session)):
        need("read", auth[1])
        doc = engine.item_or_raise(doc_id)
        if doc.hidden and not include_hidden:
            raise UnknownItemError(f"unknown item {doc_id!r}")
        mentions = []
        for edge_id in sorted(engine.store.incident_edges(doc_id)):
            edge = engine.store.edges[edge_id]
            if edge.kind != "mentioned_in" or edge.to_id != doc_id:
                continue
            if edge.hidden and not include_hidden:
                continue
            entity = engine.store.nodes[edge.from_id]
            if entity.hidden and not include_hidden:
                continue
            mentions.append(
                {
                    "edge": edge_id,
                    "node": edge.from_id,
                    "node_label": entity.label,
                    "node_type": entity.type,
                    "grade": str(edge.grade),
                    **{k: edge.attributes.get(k) for k in ("start", "end", "label", "surface")},
                }
            )
        mentions.sort(key=lambda m: (m["start"] is None, m["start"], m["edge"]))
        return {"document": doc_id, "mentions": mentions}

    # -- search ---------------------------------------------------------------

    @app.post("/search")
    def search(body: dict, auth=Depends(session)):
        actor, caps = auth
        need("read", caps)
        query = SearchQuery(
            text=body["text"],
            modes=tuple(body.get("modes", ["exact"])),
            fuzzy_max_edits=body.get("fuzzy_max_edits", 1),
            ontology_max_depth=body.get("ontology_max_depth", 2),
            scope=body.get("scope", "both"),
        )
        view_filter = parse_view_filter(body.get("filter", {}))
        hits = engine.search(query, view_filter, actor=actor)
        return {
            "hits": [
                {
                    "target": h.target,
                    "node": h.node_id,
                    "document": h.doc_id,
                    "span": list(h.span) if h.span else None,
                    "matched_term": h.matched_term,
                    "mode": h.mode,
                    "score": h.score,
                    "explanation": list(h.explanation),
                }
                for h in hits
            ]
        }

    # -- ontology -------------------------------------------------------------

    @app.get("/ontology")
    def get_ontology(auth=Depends(session)):
        need("read", auth[1])
        return {"version": engine.ontology.version, **engine.ontology.to_dict()}

    @app.post("/ontology")
    def post_ontology(body: dict, auth=Depends(session)):
        actor, caps = auth
        need("admin", caps)
        version = engine.edit_ontology(body["edits"], actor)
        return {"version": version}

    # -- layout ---------------------------------------------------------------

    @app.post("/layout")
    def layout(body: dict, auth=Depends(session)):
        need("read", auth[1])
        view_filter = parse_view_filter(body.get("filter", {}))
        positions = engine.layout(view_filter, overrides=body.get("params"))
        return {"positions": positions}

    # -- report ---------------------------------------------------------------

    @app.get("/report")
    def report(items: str, title: str = "Case report", format: str = "json", auth=Depends(session)):
        need("read", auth[1])
        bundle = report_mod.build_report(engine, [i for i in items.split(",") if i], title=title)
        if format == "html":
            return HTMLResponse(report_mod.report_html(bundle))
        return JSONResponse(content=bundle, media_type="application/json")

    return app


def serve(engine: CaseEngine, host: str = "127.0.0.1", port: int | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(engine), host=host, port=port or engine.config.port, log_level="warning")
