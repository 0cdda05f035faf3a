"""Deterministic gazetteer/rule named-entity extraction and its evaluation harness.

Offsets are Unicode scalar counts into the original document text, half-open.
Matching is token-boundary anchored and case-insensitive after NFC + case
fold. Extraction is a pure function of (text, gazetteer).
"""

from __future__ import annotations

import calendar
import json
import re
import unicodedata
from dataclasses import dataclass, field

from casegraph.errors import ValidationError

LABELS = (
    "PERSON",
    "ORGANIZATION",
    "LOCATION",
    "MISC",
    "EVENT",
    "PRODUCT",
    "DATETIME",
    "LANGUAGE",
    "LAW",
    "QUANTITY",
    "NUMBERS",
)

LABEL_TO_TYPE = {
    "PERSON": "Thing/Entity/Person",
    "ORGANIZATION": "Thing/Entity/Organization",
    "LOCATION": "Thing/Location",
    "DATETIME": "Thing/Datetime",
    "EVENT": "Thing/Event",
    "MISC": "Thing/Entity/Misc",
    "PRODUCT": "Thing/Entity/Product",
    "LANGUAGE": "Thing/Entity/Language",
    "LAW": "Thing/Entity/Law",
    "QUANTITY": "Thing/Entity/Quantity",
    "NUMBERS": "Thing/Entity/Numbers",
}

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)

_DATE_PATTERNS = [
    (re.compile(r"\b(\d{2})\.(\d{2})\.(\d{4})\b"), ("d", "m", "y")),
    (re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b"), ("y", "m", "d")),
    (re.compile(r"\b(\d{2})/(\d{2})/(\d{4})\b"), ("d", "m", "y")),
]
_TIME_RE = re.compile(r"\b\d{1,2}:\d{2}(?::\d{2})?\b")
_QUANTITY_RE = re.compile(
    r"\b\d+(?:[.,]\d+)?\s?(?:kg|g|mg|t|km|m|cm|mm|l|ml|km/h|mph|%|€|\$|euro[s]?|dollar[s]?)(?=\b|\s|$)",
    re.IGNORECASE,
)
_NUMBER_RE = re.compile(r"\b\d+(?:[.,]\d+)?\b")


def normalize_term(term: str) -> str:
    return " ".join(unicodedata.normalize("NFC", term).casefold().split())


@dataclass
class EntityMention:
    doc_id: str | None
    start: int
    end: int
    surface: str
    label: str
    node_id: str | None = None

    def span(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.label)


@dataclass
class GoldAnnotationSet:
    doc_id: str
    spans: list[tuple[int, int, str]]

    def __post_init__(self):
        if len(set(self.spans)) != len(self.spans):
            raise ValidationError(f"duplicate gold spans for document {self.doc_id!r}")


@dataclass
class Gazetteer:
    """Label -> normalized surface forms, plus rule-pattern toggles."""

    surfaces: dict[str, set[str]] = field(default_factory=dict)
    patterns: dict[str, bool] = field(
        default_factory=lambda: {"DATETIME": True, "QUANTITY": True, "NUMBERS": True}
    )

    def __post_init__(self):
        normalized: dict[str, set[str]] = {}
        for label, forms in self.surfaces.items():
            if label not in LABELS:
                raise ValidationError(f"unknown entity label {label!r}")
            normed = {normalize_term(s) for s in forms}
            if "" in normed:
                raise ValidationError(f"empty surface form under {label!r}")
            normalized[label] = normed
        self.surfaces = normalized

    @property
    def max_tokens(self) -> int:
        longest = 1
        for forms in self.surfaces.values():
            for form in forms:
                longest = max(longest, form.count(" ") + 1)
        return longest

    @classmethod
    def from_dict(cls, data: dict) -> "Gazetteer":
        surfaces = {k: set(v) for k, v in data.items() if k != "patterns"}
        patterns = {"DATETIME": True, "QUANTITY": True, "NUMBERS": True}
        patterns.update(data.get("patterns", {}))
        return cls(surfaces=surfaces, patterns=patterns)

    @classmethod
    def from_file(cls, path) -> "Gazetteer":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def default_gazetteer() -> Gazetteer:
    from importlib import resources

    text = resources.files("casegraph.data").joinpath("default_gazetteer.json").read_text("utf-8")
    return Gazetteer.from_dict(json.loads(text))


def extract(text: str, gazetteer: Gazetteer) -> list[EntityMention]:
    """All non-overlapping mentions, longest-match first, then leftmost."""
    candidates: list[tuple[int, int, str]] = []
    tokens = [(m.start(), m.end(), normalize_term(m.group())) for m in _TOKEN_RE.finditer(text)]
    max_tokens = gazetteer.max_tokens
    for i in range(len(tokens)):
        for n in range(1, max_tokens + 1):
            if i + n > len(tokens):
                break
            key = " ".join(t[2] for t in tokens[i : i + n])
            for label, forms in gazetteer.surfaces.items():
                if key in forms:
                    candidates.append((tokens[i][0], tokens[i + n - 1][1], label))
    if gazetteer.patterns.get("DATETIME"):
        for pattern, _ in _DATE_PATTERNS:
            candidates.extend((m.start(), m.end(), "DATETIME") for m in pattern.finditer(text))
        candidates.extend((m.start(), m.end(), "DATETIME") for m in _TIME_RE.finditer(text))
    if gazetteer.patterns.get("QUANTITY"):
        candidates.extend((m.start(), m.end(), "QUANTITY") for m in _QUANTITY_RE.finditer(text))
    if gazetteer.patterns.get("NUMBERS"):
        candidates.extend((m.start(), m.end(), "NUMBERS") for m in _NUMBER_RE.finditer(text))
    # longest-match wins, then leftmost; label breaks remaining ties
    candidates.sort(key=lambda c: (-(c[1] - c[0]), c[0], c[2]))
    selected: list[tuple[int, int, str]] = []
    for start, end, label in candidates:
        if all(end <= s or start >= e for s, e, _ in selected):
            selected.append((start, end, label))
    selected.sort()
    return [EntityMention(None, s, e, text[s:e], label) for s, e, label in selected]


def parse_datetime_interval(surface: str) -> tuple[float, float] | None:
    """Day-granular UTC interval for date-shaped surfaces, else None."""
    for pattern, order in _DATE_PATTERNS:
        m = pattern.fullmatch(surface)
        if m:
            parts = dict(zip(order, m.groups()))
            try:
                day0 = calendar.timegm((int(parts["y"]), int(parts["m"]), int(parts["d"]), 0, 0, 0))
            except (ValueError, OverflowError):
                return None
            return (float(day0), float(day0 + 86400))
    return None


def link_mentions(store, doc_id: str, mentions: list[EntityMention], actor, module_id: str, cascade_depth: int = 0):
    """Upsert one node per distinct entity plus a mention edge per occurrence.

    Module-produced mention edges stay capped at reliability C by the store.
    Returns the mentions with node ids filled in.
    """
    from casegraph.schema import ConfidenceGrade

    doc = store.get_item(doc_id)
    text = doc.attributes.get("text", "")
    for mention in mentions:
        if not (0 <= mention.start < mention.end <= len(text)) or text[mention.start : mention.end] != mention.surface:
            raise ValidationError(f"mention span [{mention.start},{mention.end}) does not match document {doc_id!r}")
        attributes = {}
        type_path = LABEL_TO_TYPE[mention.label]
        if mention.label == "DATETIME":
            interval = parse_datetime_interval(mention.surface)
            if interval is not None:
                attributes["interval"] = list(interval)
        node_id, _ = store.upsert_node(
            type_path,
            mention.surface,
            actor,
            attributes=attributes,
            attribution=(doc_id, module_id),
            cascade_depth=cascade_depth,
        )
        mention.node_id = node_id
        store.upsert_edge(
            "mentioned_in",
            node_id,
            doc_id,
            actor,
            grade=ConfidenceGrade("C", 2),
            attribution=(doc_id, module_id),
            attributes={"start": mention.start, "end": mention.end, "label": mention.label, "surface": mention.surface},
            cascade_depth=cascade_depth,
        )
    return mentions


@dataclass
class LabelScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class EvalReport:
    per_label: dict[str, LabelScore]
    micro: LabelScore

    def to_dict(self) -> dict:
        def row(s: LabelScore) -> dict:
            return {"tp": s.tp, "fp": s.fp, "fn": s.fn, "precision": s.precision, "recall": s.recall, "f1": s.f1}

        return {"per_label": {k: row(v) for k, v in self.per_label.items()}, "micro": row(self.micro)}

    def format_table(self) -> str:
        lines = [f"{'Type':<14} {'P':>6} {'R':>6} {'F1':>6}"]
        for label in LABELS:
            if label in self.per_label:
                s = self.per_label[label]
                lines.append(f"{label:<14} {s.precision:>6.2f} {s.recall:>6.2f} {s.f1:>6.2f}")
        s = self.micro
        lines.append(f"{'micro':<14} {s.precision:>6.2f} {s.recall:>6.2f} {s.f1:>6.2f}")
        return "\n".join(lines)


def evaluate(predicted: list[EntityMention], gold: list[GoldAnnotationSet]) -> EvalReport:
    """Strict exact-span-and-label matching: TP/FP/FN per label plus micro totals."""
    gold_docs = {g.doc_id for g in gold}
    for mention in predicted:
        if mention.doc_id not in gold_docs:
            raise ValidationError(f"predicted mention references document {mention.doc_id!r} absent from gold set")
    gold_set = {(g.doc_id, s, e, label) for g in gold for (s, e, label) in g.spans}
    pred_set = {(m.doc_id, m.start, m.end, m.label) for m in predicted}
    per_label: dict[str, LabelScore] = {}
    for label in LABELS:
        g = {x for x in gold_set if x[3] == label}
        p = {x for x in pred_set if x[3] == label}
        if not g and not p:
            continue
        per_label[label] = LabelScore(tp=len(g & p), fp=len(p - g), fn=len(g - p))
    micro = LabelScore(
        tp=sum(s.tp for s in per_label.values()),
        fp=sum(s.fp for s in per_label.values()),
        fn=sum(s.fn for s in per_label.values()),
    )
    return EvalReport(per_label=per_label, micro=micro)


def import_annotations(path, document_lengths: dict[str, int]) -> list[GoldAnnotationSet]:
    """Load gold spans from NDJSON records {doc, start, end, label}.

    Collects all validation problems and reports them with line numbers.
    """
    spans_by_doc: dict[str, list[tuple[int, int, str]]] = {}
    errors: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {lineno}: parse error at column {exc.colno}: {exc.msg}")
            missing = {"doc", "start", "end", "label"} - set(record)
            if missing:
                errors.append(f"line {lineno}: missing fields {sorted(missing)}")
                continue
            doc, start, end, label = record["doc"], record["start"], record["end"], record["label"]
            if label not in LABELS:
                errors.append(f"line {lineno}: unknown label {label!r}")
                continue
            if doc not in document_lengths:
                errors.append(f"line {lineno}: unknown document {doc!r}")
                continue
            if not (isinstance(start, int) and isinstance(end, int) and 0 <= start < end <= document_lengths[doc]):
                errors.append(f"line {lineno}: span [{start},{end}) out of bounds for {doc!r}")
                continue
            if (start, end, label) in spans_by_doc.get(doc, []):
                errors.append(f"line {lineno}: duplicate span for {doc!r}")
                continue
            spans_by_doc.setdefault(doc, []).append((start, end, label))
    if errors:
        raise ValidationError("\n".join(errors))
    return [GoldAnnotationSet(doc, spans) for doc, spans in sorted(spans_by_doc.items())]
