"""Combined search: exact, substring, fuzzy, and ontological modes.

Ontological matches expand the query through an editable concept network
and decay with the number of steps taken; every ontological hit carries the
concept path that explains it.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field

from casegraph.errors import UnknownItemError, ValidationError
from casegraph.ner import normalize_term
from casegraph.provenance import ProvenanceLog
from casegraph.schema import Actor
from casegraph.store import GraphStore, ViewFilter, normalize_label

MODES = ("exact", "substring", "fuzzy", "ontological")
MODE_PRIORITY = {mode: i for i, mode in enumerate(MODES)}
LINK_RELATIONS = ("synonym", "hyponym", "hypernym")

DEFAULT_DECAY = 0.5
DEFAULT_MAX_EDITS = 3
DEFAULT_MAX_DEPTH = 5


class OntologyGraph:
    """Concept network with synonym/hyponym/hypernym links.

    Synonym links are stored in both directions; expansion traverses every
    link bidirectionally. The version counter bumps on every edit.
    """

    def __init__(self):
        self.concepts: set[str] = set()
        self._links: set[tuple[str, str, str]] = set()  # (from, rel, to)
        self.version = 0

    def links(self) -> list[tuple[str, str, str]]:
        return sorted(self._links)

    def add_concept(self, term: str) -> int:
        term = normalize_term(term)
        if not term:
            raise ValidationError("empty concept")
        self.concepts.add(term)
        self.version += 1
        return self.version

    def remove_concept(self, term: str) -> int:
        term = normalize_term(term)
        if term not in self.concepts:
            raise UnknownItemError(f"unknown concept {term!r}")
        if any(term in (a, b) for a, _, b in self._links):
            raise ValidationError(f"concept {term!r} still has links; remove them first")
        self.concepts.remove(term)
        self.version += 1
        return self.version

    def add_link(self, from_term: str, rel: str, to_term: str) -> int:
        a, b = normalize_term(from_term), normalize_term(to_term)
        if rel not in LINK_RELATIONS:
            raise ValidationError(f"unknown link relation {rel!r}")
        if a == b:
            raise ValidationError("self-links are not allowed")
        for term in (a, b):
            if term not in self.concepts:
                raise UnknownItemError(f"unknown concept {term!r}")
        self._links.add((a, rel, b))
        if rel == "synonym":
            self._links.add((b, rel, a))
        self.version += 1
        return self.version

    def remove_link(self, from_term: str, rel: str, to_term: str) -> int:
        a, b = normalize_term(from_term), normalize_term(to_term)
        if (a, rel, b) not in self._links:
            raise UnknownItemError(f"no link {a!r} -{rel}-> {b!r}")
        self._links.discard((a, rel, b))
        if rel == "synonym":
            self._links.discard((b, rel, a))
        self.version += 1
        return self.version

    def neighbors(self, term: str) -> list[str]:
        out = {b for a, _, b in self._links if a == term}
        out |= {a for a, _, b in self._links if b == term}
        return sorted(out)

    def to_dict(self) -> dict:
        return {"concepts": sorted(self.concepts), "links": [{"from": a, "rel": r, "to": b} for a, r, b in self.links()]}

    @classmethod
    def from_dict(cls, data: dict) -> "OntologyGraph":
        ontology = cls()
        for concept in data.get("concepts", []):
            ontology.concepts.add(normalize_term(concept))
        for link in data.get("links", []):
            ontology.add_link(link["from"], link["rel"], link["to"])
        ontology.version = 0
        return ontology

    @classmethod
    def from_file(cls, path) -> "OntologyGraph":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def apply_edit(self, edit: dict) -> int:
        """One edit: {"op": add_concept|remove_concept|add_link|remove_link, ...}."""
        op = edit.get("op")
        if op == "add_concept":
            return self.add_concept(edit["term"])
        if op == "remove_concept":
            return self.remove_concept(edit["term"])
        if op == "add_link":
            return self.add_link(edit["from"], edit["rel"], edit["to"])
        if op == "remove_link":
            return self.remove_link(edit["from"], edit["rel"], edit["to"])
        raise ValidationError(f"unknown ontology edit op {op!r}")


def expand(term: str, ontology: OntologyGraph, max_depth: int) -> dict[str, tuple[int, tuple[str, ...]]]:
    """Breadth-first closure up to max_depth; minimal depth per term.

    Returns {term: (depth, concept path from query to term)}; the query term
    itself appears at depth 0 with an empty path.
    """
    if max_depth < 0:
        raise ValidationError("max_depth must be >= 0")
    start = normalize_term(term)
    result: dict[str, tuple[int, tuple[str, ...]]] = {start: (0, ())}
    queue = deque([(start, 0, (start,))])
    while queue:
        current, depth, path = queue.popleft()
        if depth == max_depth:
            continue
        for neighbor in ontology.neighbors(current):
            if neighbor not in result:
                result[neighbor] = (depth + 1, path + (neighbor,))
                queue.append((neighbor, depth + 1, path + (neighbor,)))
    return result


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a or not b:
        return len(a) + len(b)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        row = [i]
        for j, cb in enumerate(b, start=1):
            row.append(min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = row
    return prev[-1]


def score(mode: str, **evidence) -> float:
    """Score a match. exact: 1; substring: length ratio; fuzzy: 1 - edits/len;
    ontological: decay^depth."""
    if mode == "exact":
        return 1.0
    if mode == "substring":
        return evidence["query_len"] / evidence["match_len"]
    if mode == "fuzzy":
        longest = max(evidence["query_len"], evidence["match_len"])
        return 1.0 - evidence["edits"] / longest
    if mode == "ontological":
        return evidence["decay"] ** evidence["depth"]
    raise ValidationError(f"unknown search mode {mode!r}")


@dataclass
class SearchQuery:
    text: str
    modes: tuple[str, ...] = ("exact",)
    fuzzy_max_edits: int = 1
    ontology_max_depth: int = 2
    scope: str = "both"  # node_labels | document_text | both

    def __post_init__(self):
        if not self.modes:
            raise ValidationError("at least one search mode required")
        for mode in self.modes:
            if mode not in MODES:
                raise ValidationError(f"unknown search mode {mode!r}")
        if self.scope not in ("node_labels", "document_text", "both"):
            raise ValidationError(f"unknown scope {self.scope!r}")
        if self.fuzzy_max_edits < 0 or self.ontology_max_depth < 0:
            raise ValidationError("bounds must be >= 0")


@dataclass
class SearchHit:
    target: str  # node id, or "doc_id:start:end" for document spans
    node_id: str | None
    doc_id: str | None
    span: tuple[int, int] | None
    matched_term: str
    mode: str
    score: float
    explanation: tuple[str, ...] = ()


@dataclass
class SearchConfig:
    decay: float = DEFAULT_DECAY
    max_fuzzy_edits: int = DEFAULT_MAX_EDITS
    max_ontology_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        if not 0 < self.decay < 1:
            raise ValidationError("decay must be in (0, 1)")


class SearchEngine:
    """Search over node labels and document text, restricted to a view filter.

    The token index is derived state, rebuilt lazily whenever the store's
    log has advanced.
    """

    def __init__(
        self,
        store: GraphStore,
        ontology: OntologyGraph,
        provenance: ProvenanceLog | None = None,
        config: SearchConfig | None = None,
    ):
        self.store = store
        self.ontology = ontology
        self.provenance = provenance
        self.config = config or SearchConfig()
        self._index_version: int | None = None
        self._doc_tokens: dict[str, list[tuple[str, int, int]]] = {}

    def _refresh_index(self) -> None:
        version = len(self.store.log) if self.store.log else len(self.store.nodes)
        if version == self._index_version:
            return
        token_re = re.compile(r"\w+", re.UNICODE)
        self._doc_tokens = {}
        for node in self.store.nodes.values():
            text = node.attributes.get("text")
            if text:
                self._doc_tokens[node.id] = [
                    (normalize_term(m.group()), m.start(), m.end()) for m in token_re.finditer(text)
                ]
        self._index_version = version

    def search(
        self,
        query: SearchQuery,
        view_filter: ViewFilter | None = None,
        actor: Actor | None = None,
    ) -> list[SearchHit]:
        if query.fuzzy_max_edits > self.config.max_fuzzy_edits:
            raise ValidationError(f"fuzzy_max_edits above configured maximum {self.config.max_fuzzy_edits}")
        if query.ontology_max_depth > self.config.max_ontology_depth:
            raise ValidationError(f"ontology_max_depth above configured maximum {self.config.max_ontology_depth}")
        self._refresh_index()
        self._fuzzy_budget = query.fuzzy_max_edits
        view = self.store.apply_filter(view_filter)
        query_norm = normalize_term(query.text)
        best: dict[str, SearchHit] = {}

        def offer(hit: SearchHit) -> None:
            current = best.get(hit.target)
            if current is None or (hit.score, -MODE_PRIORITY[hit.mode]) > (current.score, -MODE_PRIORITY[current.mode]):
                best[hit.target] = hit

        label_targets = (
            [(n, normalize_label(self.store.nodes[n].label)) for n in view.nodes]
            if query.scope in ("node_labels", "both")
            else []
        )
        doc_targets = (
            [(doc_id, tokens) for doc_id, tokens in self._doc_tokens.items() if doc_id in view.nodes]
            if query.scope in ("document_text", "both")
            else []
        )

        def match_term(term: str, mode: str, base_score: float | None = None, explanation=()) -> None:
            for node_id, label in label_targets:
                hit_score = self._match_one(term, label, mode, query_norm)
                if hit_score is None:
                    continue
                offer(
                    SearchHit(
                        target=node_id,
                        node_id=node_id,
                        doc_id=None,
                        span=None,
                        matched_term=self.store.nodes[node_id].label,
                        mode=mode,
                        score=base_score if base_score is not None else hit_score,
                        explanation=explanation,
                    )
                )
            for doc_id, tokens in doc_targets:
                for token, start, end in tokens:
                    hit_score = self._match_one(term, token, mode, query_norm)
                    if hit_score is None:
                        continue
                    offer(
                        SearchHit(
                            target=f"{doc_id}:{start}:{end}",
                            node_id=None,
                            doc_id=doc_id,
                            span=(start, end),
                            matched_term=token,
                            mode=mode,
                            score=base_score if base_score is not None else hit_score,
                            explanation=explanation,
                        )
                    )

        if "exact" in query.modes:
            match_term(query_norm, "exact")
        if "substring" in query.modes:
            match_term(query_norm, "substring")
        if "fuzzy" in query.modes:
            match_term(query_norm, "fuzzy")
        if "ontological" in query.modes:
            expansion = expand(query_norm, self.ontology, query.ontology_max_depth)
            for term, (depth, path) in sorted(expansion.items()):
                if depth == 0:
                    continue  # the query term itself belongs to exact mode
                match_term(
                    term,
                    "ontological",
                    base_score=score("ontological", decay=self.config.decay, depth=depth),
                    explanation=(query_norm,) + path[1:] if path else (),
                )
        if self.provenance is not None and actor is not None:
            # queries are logged; result sets are not (data economy)
            self.provenance.append(
                actor, "search_executed", {"text": query.text, "modes": list(query.modes), "scope": query.scope}
            )
        hits = sorted(best.values(), key=lambda h: (-h.score, MODE_PRIORITY[h.mode], h.target))
        return hits

    def _match_one(self, term: str, candidate: str, mode: str, query_norm: str) -> float | None:
        if mode == "exact" or mode == "ontological":
            if candidate == term:
                return 1.0
            return None
        if mode == "substring":
            if term and term in candidate:
                return score("substring", query_len=len(term), match_len=len(candidate))
            return None
        if mode == "fuzzy":
            if abs(len(term) - len(candidate)) > self._fuzzy_budget:
                return None
            edits = levenshtein(term, candidate)
            if edits <= self._fuzzy_budget:
                return score("fuzzy", query_len=len(term), match_len=len(candidate), edits=edits)
            return None
        return None

    _fuzzy_budget = 0  # set per search call


def sample_ontology() -> OntologyGraph:
    from importlib import resources

    text = resources.files("casegraph.data").joinpath("sample_ontology.json").read_text("utf-8")
    return OntologyGraph.from_dict(json.loads(text))
