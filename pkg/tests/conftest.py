import json

import pytest

from casegraph.engine import CaseEngine, EngineConfig
from casegraph.provenance import ProvenanceLog
from casegraph.schema import Actor, SchemaRegistry
from casegraph.store import GraphStore

USER = Actor("user", "alice")
MODULE = Actor("module", "extractor")


@pytest.fixture
def user():
    return USER


@pytest.fixture
def module_actor():
    return MODULE


@pytest.fixture
def schema():
    return SchemaRegistry.default()


@pytest.fixture
def store(schema, tmp_path):
    log = ProvenanceLog(str(tmp_path / "log.ndjson"))
    yield GraphStore(schema, log)
    log.close()


@pytest.fixture
def mem_store(schema):
    # counter-based clock keeps created_at distinct and deterministic
    ticks = iter(range(10**9))
    log = ProvenanceLog(None, clock=lambda: float(next(ticks)))
    return GraphStore(schema, log)


@pytest.fixture
def engine(tmp_path):
    e = CaseEngine(EngineConfig(data_dir=str(tmp_path / "data"), fixed_timestamp=1700000000.0))
    yield e
    e.close()


def mock_audio(speakers: dict[str, str]) -> bytes:
    return json.dumps({"speakers": speakers}).encode("utf-8")
