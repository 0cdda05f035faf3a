"""Command-line entry points: serve, ingest, search, layout, eval-ner,
replay, verify, export-report."""

from __future__ import annotations

import argparse
import json
import mimetypes
import os
import sys

from casegraph import layout as layout_mod
from casegraph import ner, report as report_mod
from casegraph.engine import CaseEngine, EngineConfig
from casegraph.errors import CaseGraphError
from casegraph.provenance import read_log_file, verify_log_file
from casegraph.schema import Actor, SchemaRegistry
from casegraph.search import SearchQuery
from casegraph.store import GraphStore


def _engine(args) -> CaseEngine:
    if args.config:
        config = EngineConfig.from_file(args.config)
    else:
        config = EngineConfig(data_dir=args.data_dir)
    return CaseEngine(config)


def cmd_serve(args) -> int:
    from casegraph.api import serve

    engine = _engine(args)
    serve(engine, host=args.host, port=args.port)
    return 0


def cmd_ingest(args) -> int:
    engine = _engine(args)
    with open(args.file, "rb") as fh:
        data = fh.read()
    media_type = args.media_type or mimetypes.guess_type(args.file)[0] or "application/octet-stream"
    actor = Actor("user", args.actor)
    job = engine.ingest(data, media_type, actor, title=args.title or os.path.basename(args.file))
    print(json.dumps({
        "job_id": job.job_id,
        "status": job.status,
        "document": job.document_id,
        "produced": job.produced_ids,
        "warnings": job.warnings,
        "error": job.error,
    }, indent=2))
    engine.close()
    return 0 if job.status == "done" else 1


def cmd_search(args) -> int:
    engine = _engine(args)
    query = SearchQuery(
        text=args.text,
        modes=tuple(args.modes.split(",")),
        fuzzy_max_edits=args.max_edits,
        ontology_max_depth=args.depth,
        scope=args.scope,
    )
    hits = engine.search(query, actor=Actor("user", args.actor))
    for hit in hits:
        where = hit.node_id or f"{hit.doc_id}[{hit.span[0]}:{hit.span[1]}]"
        via = f" via {' > '.join(hit.explanation)}" if hit.explanation else ""
        print(f"{hit.score:6.3f}  {hit.mode:<12} {where:<24} {hit.matched_term}{via}")
    engine.close()
    return 0


def cmd_layout(args) -> int:
    with open(args.graph, encoding="utf-8") as fh:
        graph = json.load(fh)
    params = layout_mod.LayoutParams(theta=args.theta, iterations=args.iters, seed=args.seed)
    state = layout_mod.run(graph["nodes"], [tuple(e) for e in graph["edges"]], params)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(state.positions(), fh)
    print(f"wrote {len(graph['nodes'])} positions to {args.out}")
    return 0


def cmd_eval_ner(args) -> int:
    with open(args.docs, encoding="utf-8") as fh:
        docs: dict[str, str] = json.load(fh)
    lengths = {doc_id: len(text) for doc_id, text in docs.items()}
    gold = ner.import_annotations(args.gold, lengths)
    if args.pred:
        pred_sets = ner.import_annotations(args.pred, lengths)
        predicted = [
            ner.EntityMention(g.doc_id, s, e, docs[g.doc_id][s:e], label)
            for g in pred_sets
            for (s, e, label) in g.spans
        ]
    else:
        gazetteer = ner.Gazetteer.from_file(args.gazetteer) if args.gazetteer else ner.default_gazetteer()
        predicted = []
        for doc_id, text in docs.items():
            for mention in ner.extract(text, gazetteer):
                mention.doc_id = doc_id
                predicted.append(mention)
    report = ner.evaluate(predicted, gold)
    print(report.format_table())
    return 0


def cmd_replay(args) -> int:
    log_path = args.log or os.path.join(args.data_dir, "provenance.ndjson")
    entries = read_log_file(log_path)
    store = GraphStore.replay(entries, SchemaRegistry.default(), up_to_seq=args.up_to_seq)
    snapshot = store.state_snapshot()
    summary = {
        "entries": len(entries),
        "nodes": len(snapshot["nodes"]),
        "edges": len(snapshot["edges"]),
        "hidden": sum(1 for n in snapshot["nodes"].values() if n["hidden"])
        + sum(1 for e in snapshot["edges"].values() if e["hidden"]),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(snapshot, fh, sort_keys=True, indent=2)
        summary["snapshot"] = args.out
    print(json.dumps(summary, indent=2))
    return 0


def cmd_verify(args) -> int:
    log_path = args.log or os.path.join(args.data_dir, "provenance.ndjson")
    broken = verify_log_file(log_path)
    if broken is None:
        print(f"chain intact: {len(read_log_file(log_path))} entries")
        return 0
    print(f"chain broken at seq {broken}", file=sys.stderr)
    return 1


def cmd_export_report(args) -> int:
    engine = _engine(args)
    bundle = report_mod.build_report(engine, args.items.split(","), title=args.title)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report_mod.report_json(bundle))
    if args.html:
        with open(args.html, "w", encoding="utf-8") as fh:
            fh.write(report_mod.report_html(bundle))
    print(f"report written to {args.out}")
    engine.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="casegraph", description="Intelligence case-graph engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="engine config JSON")
        p.add_argument("--data-dir", default="casegraph-data", help="storage directory (when no config)")
        p.add_argument("--actor", default="analyst", help="acting user id")

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ingest", help="ingest one file and run matching modules")
    common(p)
    p.add_argument("file")
    p.add_argument("--media-type")
    p.add_argument("--title")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("search", help="search node labels and document text")
    common(p)
    p.add_argument("text")
    p.add_argument("--modes", default="exact,substring,fuzzy,ontological")
    p.add_argument("--max-edits", type=int, default=1)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--scope", default="both", choices=["node_labels", "document_text", "both"])
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("layout", help="compute 2D positions for a graph file")
    p.add_argument("--graph", required=True, help='JSON {"nodes": [...], "edges": [[a,b],...]}')
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("eval-ner", help="score predictions against a gold annotation set")
    p.add_argument("--gold", required=True, help="gold NDJSON {doc,start,end,label}")
    p.add_argument("--pred", help="predicted NDJSON; omitted = run the gazetteer extractor")
    p.add_argument("--docs", required=True, help="JSON {doc_id: text}")
    p.add_argument("--gazetteer", help="gazetteer JSON (default: shipped)")
    p.set_defaults(func=cmd_eval_ner)

    p = sub.add_parser("replay", help="rebuild state from the provenance log")
    p.add_argument("--log")
    p.add_argument("--data-dir", default="casegraph-data")
    p.add_argument("--up-to-seq", type=int, default=None)
    p.add_argument("--out", help="write the full state snapshot JSON here")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("verify", help="verify the provenance hash chain")
    p.add_argument("--log")
    p.add_argument("--data-dir", default="casegraph-data")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-report", help="export a self-contained case report")
    common(p)
    p.add_argument("--items", required=True, help="comma-separated item ids")
    p.add_argument("--title", default="Case report")
    p.add_argument("--out", required=True)
    p.add_argument("--html")
    p.set_defaults(func=cmd_export_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CaseGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
