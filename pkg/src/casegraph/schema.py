"""Hierarchical type system, relationship kinds, and 6x6 confidence grades.

Type paths are "/"-separated strings rooted at ``Thing`` (e.g.
``Thing/Entity/Person``). A path is a subtype of another iff the other is a
segment-wise prefix (inclusive). Attribute declarations are inherited down
the hierarchy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from casegraph.errors import SchemaError, ValidationError

ROOT = "Thing"
PATH_SEP = "/"

# The seven primitive attribute value kinds. Binary payloads never live in
# the graph; binary_ref points into object storage.
ATTRIBUTE_KINDS = ("text", "integer", "real", "timestamp", "interval", "geo_point", "binary_ref")

RELIABILITY_ORDER = "ABCDEF"  # A best ... E worst, F = cannot be judged
CREDIBILITY_ORDER = "123456"  # 1 best ... 5 worst, 6 = cannot be judged


def split_path(path: str) -> list[str]:
    return path.split(PATH_SEP)


def parent_path(path: str) -> str | None:
    segments = split_path(path)
    if len(segments) == 1:
        return None
    return PATH_SEP.join(segments[:-1])


def path_is_descendant(path: str, ancestor: str) -> bool:
    """True iff ancestor is a (non-strict) segment prefix of path."""
    a, b = split_path(path), split_path(ancestor)
    return len(b) <= len(a) and a[: len(b)] == b


@dataclass(frozen=True)
class ConfidenceGrade:
    """Admiralty 6x6 grade: source reliability A-F, information credibility 1-6.

    F and 6 mean "cannot be judged" and rank strictly below E and 5, so any
    non-trivial threshold hides unknowns.
    """

    reliability: str
    credibility: int

    def __post_init__(self):
        if self.reliability not in RELIABILITY_ORDER:
            raise ValidationError(f"invalid reliability {self.reliability!r}")
        if not isinstance(self.credibility, int) or not 1 <= self.credibility <= 6:
            raise ValidationError(f"invalid credibility {self.credibility!r}")

    @classmethod
    def parse(cls, text: str) -> "ConfidenceGrade":
        if len(text) != 2 or not text[1].isdigit():
            raise ValidationError(f"invalid grade {text!r}")
        return cls(text[0].upper(), int(text[1]))

    def __str__(self) -> str:
        return f"{self.reliability}{self.credibility}"

    @property
    def reliability_rank(self) -> int:
        """Higher is better; F ranks 0."""
        return 5 - RELIABILITY_ORDER.index(self.reliability)

    @property
    def credibility_rank(self) -> int:
        """Higher is better; 6 ranks 0."""
        return 6 - self.credibility

    def at_least(self, threshold: "ConfidenceGrade") -> bool:
        """Both components meet the threshold under the A>..>F, 1>..>6 order."""
        return (
            self.reliability_rank >= threshold.reliability_rank
            and self.credibility_rank >= threshold.credibility_rank
        )


# Default grade for anything nobody has judged yet.
GRADE_UNKNOWN = ConfidenceGrade("F", 6)
# Cap for automated results that no user has reviewed.
AUTOMATED_RELIABILITY_CAP = "C"


def grade_at_least(grade: ConfidenceGrade, threshold: ConfidenceGrade) -> bool:
    return grade.at_least(threshold)


def cap_automated_grade(grade: ConfidenceGrade) -> ConfidenceGrade:
    """Clamp reliability to C for unreviewed module output."""
    if grade.reliability_rank > ConfidenceGrade(AUTOMATED_RELIABILITY_CAP, 1).reliability_rank:
        return ConfidenceGrade(AUTOMATED_RELIABILITY_CAP, grade.credibility)
    return grade


@dataclass(frozen=True)
class Actor:
    """Who performed an action: a human user or an analysis module."""

    kind: str  # "user" | "module"
    id: str

    def __post_init__(self):
        if self.kind not in ("user", "module"):
            raise ValidationError(f"invalid actor kind {self.kind!r}")

    @property
    def is_user(self) -> bool:
        return self.kind == "user"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "id": self.id}

    @classmethod
    def from_dict(cls, d: dict) -> "Actor":
        return cls(d["kind"], d["id"])


@dataclass
class RelationshipKind:
    name: str
    from_types: list[str] = field(default_factory=lambda: [ROOT])
    to_types: list[str] = field(default_factory=lambda: [ROOT])


class SchemaRegistry:
    """Registry of type paths, their attribute declarations, and edge kinds.

    Written at startup / explicit admin calls, read-only afterwards.
    """

    def __init__(self):
        self._types: dict[str, dict[str, str]] = {}
        self._kinds: dict[str, RelationshipKind] = {}
        self.register_type(ROOT, {})

    # -- types ------------------------------------------------------------

    def register_type(self, path: str, attributes: dict[str, str] | None = None) -> str:
        attributes = dict(attributes or {})
        segments = split_path(path)
        if not segments or segments[0] != ROOT or any(not s for s in segments):
            raise SchemaError(f"path must be rooted at {ROOT}: {path!r}")
        if path in self._types:
            raise SchemaError(f"duplicate type path {path!r}")
        parent = parent_path(path)
        if parent is not None and parent not in self._types:
            raise SchemaError(f"unknown parent type {parent!r} for {path!r}")
        inherited = self.effective_attributes(parent) if parent else {}
        for name, kind in attributes.items():
            if kind not in ATTRIBUTE_KINDS:
                raise SchemaError(f"unknown attribute kind {kind!r} on {path!r}")
            if name in inherited:
                raise SchemaError(f"attribute {name!r} on {path!r} collides with inherited declaration")
        self._types[path] = attributes
        return path

    def is_registered(self, path: str) -> bool:
        return path in self._types

    def require(self, path: str) -> None:
        if path not in self._types:
            raise SchemaError(f"unregistered type path {path!r}")

    def is_subtype(self, path: str, ancestor: str) -> bool:
        self.require(path)
        self.require(ancestor)
        return path_is_descendant(path, ancestor)

    def declared_attributes(self, path: str) -> dict[str, str]:
        self.require(path)
        return dict(self._types[path])

    def effective_attributes(self, path: str) -> dict[str, str]:
        """Own plus inherited attribute declarations."""
        self.require(path)
        merged: dict[str, str] = {}
        segments = split_path(path)
        for i in range(1, len(segments) + 1):
            prefix = PATH_SEP.join(segments[:i])
            merged.update(self._types.get(prefix, {}))
        return merged

    def first_layer(self, path: str) -> str:
        """The layer directly under the root (Entity, Event, ...)."""
        self.require(path)
        segments = split_path(path)
        if len(segments) < 2:
            raise SchemaError(f"{path!r} has no first-layer type")
        return PATH_SEP.join(segments[:2])

    def all_types(self) -> list[str]:
        return sorted(self._types)

    def describe(self) -> dict:
        """Wire form of the registry; feeding it back to from_definition round-trips."""
        return {
            "types": [
                {"path": path, "attributes": self.declared_attributes(path)} for path in self.all_types()
            ],
            "relationship_kinds": [
                {"name": k.name, "from": k.from_types, "to": k.to_types}
                for k in (self._kinds[n] for n in self.all_relationships())
            ],
        }

    def validate_attributes(self, path: str, attributes: dict) -> None:
        declared = self.effective_attributes(path)
        for name, value in attributes.items():
            if name not in declared:
                raise SchemaError(f"attribute {name!r} not declared for {path!r}")
            kind = declared[name]
            if not _value_matches_kind(value, kind):
                raise SchemaError(f"attribute {name!r} on {path!r} is not a valid {kind}: {value!r}")

    # -- relationship kinds ------------------------------------------------

    def register_relationship(self, name: str, from_types=None, to_types=None) -> str:
        if name in self._kinds:
            raise SchemaError(f"duplicate relationship kind {name!r}")
        kind = RelationshipKind(name, list(from_types or [ROOT]), list(to_types or [ROOT]))
        for t in kind.from_types + kind.to_types:
            self.require(t)
        self._kinds[name] = kind
        return name

    def has_relationship(self, name: str) -> bool:
        return name in self._kinds

    def all_relationships(self) -> list[str]:
        return sorted(self._kinds)

    def allows_endpoints(self, name: str, from_type: str, to_type: str) -> bool:
        if name not in self._kinds:
            raise SchemaError(f"unregistered relationship kind {name!r}")
        kind = self._kinds[name]
        return any(self.is_subtype(from_type, t) for t in kind.from_types) and any(
            self.is_subtype(to_type, t) for t in kind.to_types
        )

    # -- loading -----------------------------------------------------------

    @classmethod
    def from_definition(cls, definition: dict) -> "SchemaRegistry":
        """Build a registry from the JSON schema format.

        ``{"types": [{"path": ..., "attributes": {...}}, ...],
           "relationship_kinds": [{"name": ..., "from": [...], "to": [...]}]}``
        Types may appear in any order; parents are resolved by path depth.
        """
        registry = cls()
        for entry in sorted(definition.get("types", []), key=lambda e: len(split_path(e["path"]))):
            if entry["path"] == ROOT:
                continue
            registry.register_type(entry["path"], entry.get("attributes", {}))
        for entry in definition.get("relationship_kinds", []):
            registry.register_relationship(entry["name"], entry.get("from"), entry.get("to"))
        return registry

    @classmethod
    def from_file(cls, path) -> "SchemaRegistry":
        with open(path, encoding="utf-8") as fh:
            return cls.from_definition(json.load(fh))

    @classmethod
    def default(cls) -> "SchemaRegistry":
        """The shipped investigation registry (50+ types, 10+ edge kinds)."""
        text = resources.files("casegraph.data").joinpath("default_schema.json").read_text("utf-8")
        return cls.from_definition(json.loads(text))


def _value_matches_kind(value, kind: str) -> bool:
    if kind == "text" or kind == "binary_ref":
        return isinstance(value, str)
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "real":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "timestamp":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "interval":
        return (
            isinstance(value, (list, tuple))
            and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
            and value[0] <= value[1]
        )
    if kind == "geo_point":
        return (
            isinstance(value, (list, tuple))
            and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        )
    return False
