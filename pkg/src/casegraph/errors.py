"""Exception hierarchy shared by all casegraph components."""


class CaseGraphError(Exception):
    """Base class for all casegraph errors."""


class SchemaError(CaseGraphError):
    """Type registration or attribute validation failed."""


class UnknownItemError(CaseGraphError):
    """A node, edge, document, or concept id does not resolve."""


class ValidationError(CaseGraphError):
    """Input data violates a contract (bad span, bad grade, bad filter...)."""


class PermissionError_(CaseGraphError):
    """Actor lacks the capability or actor kind required for the operation."""


class StorageError(CaseGraphError):
    """Object storage or provenance log failure."""


class ChainBrokenError(CaseGraphError):
    """Provenance chain verification failed."""

    def __init__(self, seq: int, detail: str = ""):
        self.seq = seq
        super().__init__(f"provenance chain broken at seq {seq}" + (f": {detail}" if detail else ""))
