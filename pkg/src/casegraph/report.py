"""Case report export: a self-contained evidence bundle.

The JSON form embeds, for every selected item, its full provenance trace
(with entry hashes), the referenced documents with content digests, and a
snapshot of the selected subgraph. The bundle can be re-verified without
the live store. The HTML rendering is a readable, non-normative view of
the same data.
"""

from __future__ import annotations

import html

from casegraph.errors import UnknownItemError, ValidationError
from casegraph.provenance import ProvenanceEntry, canonical_json
from casegraph.schema import path_is_descendant


def build_report(engine, item_ids: list[str], title: str = "Case report") -> dict:
    """Assemble the bundle; unknown ids are all reported at once."""
    if not item_ids:
        raise ValidationError("empty report selection")
    unknown = [i for i in item_ids if not engine.store.has_item(i)]
    if unknown:
        raise UnknownItemError(f"unknown items {unknown}")
    store = engine.store
    traces = {}
    doc_ids: set[str] = set()
    for item_id in item_ids:
        entries = store.trace(item_id)
        traces[item_id] = [e.to_dict() for e in entries]
        item = store.get_item(item_id)
        if item_id in store.nodes:
            doc_ids |= store.nodes[item_id].source_documents()
            if path_is_descendant(item.type, "Thing/Document"):
                doc_ids.add(item_id)
        elif item.attribution and item.attribution[0]:
            doc_ids.add(item.attribution[0])
    documents = []
    for doc_id in sorted(doc_ids):
        doc = store.nodes.get(doc_id)
        if doc is None:
            continue
        documents.append(
            {
                "id": doc_id,
                "label": doc.label,
                "media_type": doc.attributes.get("media_type"),
                "digest": doc.attributes.get("object_digest"),
                "hidden": doc.hidden,
                "hide_reason": doc.hide_reason,
            }
        )
    snapshot = {"nodes": {}, "edges": {}}
    selected = set(item_ids)
    for item_id in item_ids:
        if item_id in store.nodes:
            node = store.nodes[item_id]
            snapshot["nodes"][item_id] = {
                "type": node.type,
                "label": node.label,
                "hidden": node.hidden,
                "hide_reason": node.hide_reason,
                "reviewed": node.reviewed,
                "annotations": node.annotations,
            }
        else:
            edge = store.edges[item_id]
            snapshot["edges"][item_id] = {
                "kind": edge.kind,
                "from": edge.from_id,
                "to": edge.to_id,
                "grade": str(edge.grade),
                "hidden": edge.hidden,
                "hide_reason": edge.hide_reason,
            }
    # edges between selected nodes round out the snapshot
    for edge in store.edges.values():
        if edge.from_id in selected and edge.to_id in selected and edge.id not in snapshot["edges"]:
            snapshot["edges"][edge.id] = {
                "kind": edge.kind,
                "from": edge.from_id,
                "to": edge.to_id,
                "grade": str(edge.grade),
                "hidden": edge.hidden,
                "hide_reason": edge.hide_reason,
            }
    return {
        "title": title,
        "items": sorted(item_ids),
        "traces": traces,
        "documents": documents,
        "graph": snapshot,
        "generated_at": float(engine.log.clock()),
        "log_head_hash": engine.head_hash(),
    }


def report_json(bundle: dict) -> str:
    """Canonical serialization: byte-stable for fixed inputs and clock."""
    return canonical_json(bundle)


def verify_report(bundle: dict) -> list[str]:
    """Offline audit of a bundle. Returns problems; empty list = verified.

    Checks that every selected item has a trace, every trace entry's hash
    recomputes from its own fields, and seqs within a trace strictly increase.
    """
    problems = []
    for item_id in bundle.get("items", []):
        entries = bundle.get("traces", {}).get(item_id)
        if not entries:
            problems.append(f"item {item_id}: no provenance trace")
            continue
        last_seq = -1
        for raw in entries:
            entry = ProvenanceEntry.from_dict(raw)
            if entry.compute_hash() != entry.entry_hash:
                problems.append(f"item {item_id}: entry seq {entry.seq} hash mismatch")
            if entry.seq <= last_seq:
                problems.append(f"item {item_id}: trace seq order broken at {entry.seq}")
            last_seq = entry.seq
    for doc in bundle.get("documents", []):
        if not doc.get("digest"):
            problems.append(f"document {doc.get('id')}: missing content digest")
    return problems


def report_html(bundle: dict) -> str:
    esc = html.escape

    def trace_rows(entries):
        return "\n".join(
            f"<tr><td>{e['seq']}</td><td>{esc(e['mutation'])}</td>"
            f"<td>{esc(e['actor']['kind'])}:{esc(e['actor']['id'])}</td>"
            f"<td><code>{esc(e['entry_hash'][:16])}</code></td></tr>"
            for e in entries
        )

    item_sections = []
    for item_id in bundle["items"]:
        node = bundle["graph"]["nodes"].get(item_id)
        edge = bundle["graph"]["edges"].get(item_id)
        if node:
            heading = f"{esc(node['label'])} <small>({esc(node['type'])}, {esc(item_id)})</small>"
            status = "hidden: " + esc(str(node["hide_reason"])) if node["hidden"] else "visible"
        elif edge:
            heading = f"{esc(edge['kind'])} {esc(edge['from'])} → {esc(edge['to'])} <small>({esc(item_id)})</small>"
            status = f"grade {esc(edge['grade'])}" + (", hidden: " + esc(str(edge["hide_reason"])) if edge["hidden"] else "")
        else:
            heading, status = esc(item_id), ""
        item_sections.append(
            f"<section><h2>{heading}</h2><p>{status}</p>"
            f"<table><tr><th>seq</th><th>mutation</th><th>actor</th><th>hash</th></tr>"
            f"{trace_rows(bundle['traces'][item_id])}</table></section>"
        )
    doc_rows = "\n".join(
        f"<tr><td>{esc(d['id'])}</td><td>{esc(d['label'])}</td><td>{esc(str(d['media_type']))}</td>"
        f"<td><code>{esc(str(d['digest']))}</code></td>"
        f"<td>{'hidden: ' + esc(str(d['hide_reason'])) if d['hidden'] else 'visible'}</td></tr>"
        for d in bundle["documents"]
    )
    return f"""<!DOCTYPE html>
<html lang="en"><head><meta charset="utf-8"><title>{esc(bundle["title"])}</title>
<style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse}}
td,th{{border:1px solid #999;padding:2px 8px;text-align:left}}</style></head><body>
<h1>{esc(bundle["title"])}</h1>
<p>Generated at {bundle["generated_at"]}; provenance head <code>{esc(bundle["log_head_hash"])}</code>.</p>
<h2>Referenced documents</h2>
<table><tr><th>id</th><th>label</th><th>media type</th><th>digest</th><th>status</th></tr>
{doc_rows}</table>
{"".join(item_sections)}
</body></html>
"""
