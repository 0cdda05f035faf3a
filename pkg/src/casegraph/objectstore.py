"""Content-addressed object storage for raw ingested payloads.

Objects live in a two-level hex fan-out directory tree keyed by their
SHA-256 digest; identical bytes share one object. The graph only ever holds
references, never payloads.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

from casegraph.errors import StorageError, UnknownItemError


@dataclass(frozen=True)
class ObjectRef:
    digest: str
    media_type: str
    byte_length: int
    storage_path: str

    def to_dict(self) -> dict:
        return {
            "digest": self.digest,
            "media_type": self.media_type,
            "byte_length": self.byte_length,
            "storage_path": self.storage_path,
        }


class ObjectStore:
    def __init__(self, root: str):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def _path_for(self, digest: str) -> str:
        return os.path.join(self.root, digest[:2], digest[2:4], digest)

    def put(self, data: bytes, media_type: str) -> ObjectRef:
        if not data:
            raise StorageError("refusing to store an empty payload")
        digest = hashlib.sha256(data).hexdigest()
        path = self._path_for(digest)
        if not os.path.exists(path):
            os.makedirs(os.path.dirname(path), exist_ok=True)
            tmp = path + ".tmp"
            with open(tmp, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        return ObjectRef(digest, media_type, len(data), path)

    def get(self, digest: str) -> bytes:
        """Read and re-verify an object; a digest mismatch is corruption."""
        path = self._path_for(digest)
        if not os.path.exists(path):
            raise UnknownItemError(f"no object with digest {digest}")
        with open(path, "rb") as fh:
            data = fh.read()
        if hashlib.sha256(data).hexdigest() != digest:
            raise StorageError(f"object {digest} failed digest verification")
        return data

    def exists(self, digest: str) -> bool:
        return os.path.exists(self._path_for(digest))
