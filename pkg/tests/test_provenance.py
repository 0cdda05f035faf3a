import json
import random

import pytest
from hypothesis import given, strategies as st

from casegraph.errors import StorageError, UnknownItemError
from casegraph.provenance import (
    GENESIS_HASH,
    ProvenanceLog,
    canonical_json,
    read_log_file,
    trace_entries,
    verify_entries,
    verify_log_file,
)
from casegraph.schema import Actor

USER = Actor("user", "alice")

json_payloads = st.dictionaries(
    st.text(min_size=1, max_size=8),
    st.recursive(
        st.one_of(st.none(), st.booleans(), st.integers(), st.text(max_size=10)),
        lambda children: st.lists(children, max_size=3),
        max_leaves=6,
    ),
    max_size=4,
)


def test_canonical_json_is_order_independent():
    assert canonical_json({"b": 1, "a": [2, {"y": 0, "x": 1}]}) == canonical_json(
        {"a": [2, {"x": 1, "y": 0}], "b": 1}
    )


def test_append_links_chain():
    log = ProvenanceLog(None)
    e0 = log.append(USER, "create_node", {"id": "n0"})
    e1 = log.append(USER, "hide", {"id": "n0", "reason": "x"})
    assert e0.prev_hash == GENESIS_HASH
    assert e1.prev_hash == e0.entry_hash
    assert (e0.seq, e1.seq) == (0, 1)
    assert log.verify() is None


def test_unknown_mutation_rejected():
    log = ProvenanceLog(None)
    with pytest.raises(StorageError):
        log.append(USER, "delete_node", {"id": "n0"})


def test_unserializable_payload_rejected_before_append():
    log = ProvenanceLog(None)
    with pytest.raises(StorageError):
        log.append(USER, "annotate", {"bad": object()})
    assert len(log) == 0


@given(st.lists(json_payloads, min_size=1, max_size=6))
def test_chain_verifies_for_arbitrary_payloads(payloads):
    log = ProvenanceLog(None)
    for payload in payloads:
        log.append(USER, "annotate", payload)
    assert verify_entries(log.entries) is None


def test_file_round_trip(tmp_path):
    path = str(tmp_path / "log.ndjson")
    log = ProvenanceLog(path)
    log.append(USER, "create_node", {"id": "n0", "label": "Zoé"})
    log.append(USER, "review", {"id": "n0", "new_grade": "B2"})
    log.close()
    entries = read_log_file(path)
    assert [e.mutation for e in entries] == ["create_node", "review"]
    assert verify_log_file(path) is None
    # header line pins the digest algorithm
    first = json.loads(open(path, encoding="utf-8").readline())
    assert first["digest"] == "sha256"


def test_reopen_continues_chain(tmp_path):
    path = str(tmp_path / "log.ndjson")
    log = ProvenanceLog(path)
    log.append(USER, "create_node", {"id": "n0"})
    log.close()
    log2 = ProvenanceLog(path)
    log2.append(USER, "hide", {"id": "n0", "reason": "x"})
    log2.close()
    assert verify_log_file(path) is None
    assert len(read_log_file(path)) == 2


def _corrupt_one_bit(path: str, rng: random.Random) -> int:
    """Flip one random bit inside a random entry line; returns the entry seq."""
    with open(path, "rb") as fh:
        lines = fh.read().split(b"\n")
    target = rng.randrange(1, len([l for l in lines if l]))  # skip header
    line = bytearray(lines[target])
    pos = rng.randrange(len(line))
    line[pos] ^= 1 << rng.randrange(8)
    lines[target] = bytes(line)
    with open(path, "wb") as fh:
        fh.write(b"\n".join(lines))
    return target - 1


def test_single_bit_corruption_detected(tmp_path):
    rng = random.Random(7)
    for trial in range(20):
        path = str(tmp_path / f"log{trial}.ndjson")
        log = ProvenanceLog(path)
        for i in range(10):
            log.append(USER, "annotate", {"id": f"n{i}", "comment": "c" * 20})
        log.close()
        seq = _corrupt_one_bit(path, rng)
        broken = verify_log_file(path)
        assert broken is not None
        assert broken <= seq  # never blamed later than the flipped entry
        # an intact prefix stays verifiable
        assert broken >= 0


def test_trace_entries_filters_by_ids():
    log = ProvenanceLog(None)
    log.append(USER, "create_node", {"id": "n0"})
    log.append(USER, "create_node", {"id": "n1"})
    log.append(USER, "create_edge", {"id": "e0", "from": "n0", "to": "n1"})
    entries = trace_entries(log, "n0")
    assert [e.seq for e in entries] == [0, 2]
    with pytest.raises(UnknownItemError):
        trace_entries(log, "nope")


def test_unparseable_line_reports_position(tmp_path):
    path = str(tmp_path / "log.ndjson")
    log = ProvenanceLog(path)
    log.append(USER, "create_node", {"id": "n0"})
    log.append(USER, "create_node", {"id": "n1"})
    log.close()
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("{not json\n")
    assert verify_log_file(path) == 2
