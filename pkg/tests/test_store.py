import random

import pytest

from casegraph.errors import PermissionError_, SchemaError, UnknownItemError, ValidationError
from casegraph.schema import Actor, ConfidenceGrade, GRADE_UNKNOWN, SchemaRegistry
from casegraph.store import GraphStore, ViewFilter, normalize_label

from oracles import bfs_k_hop

USER = Actor("user", "alice")
MODULE = Actor("module", "extractor")


class TestNormalization:
    def test_label_normalization(self):
        assert normalize_label("  anna  ADAMS ") == "anna adams"
        assert normalize_label("Anna") == normalize_label("Anna")


class TestUpsertNode:
    def test_create_then_merge(self, mem_store):
        nid, outcome = mem_store.upsert_node("Thing/Entity/Person", "Anna Adams", USER)
        assert outcome == "created"
        nid2, outcome2 = mem_store.upsert_node("Thing/Entity/Person", "anna  ADAMS", USER)
        assert (nid2, outcome2) == (nid, "merged")
        assert len(mem_store.nodes) == 1

    def test_different_type_no_merge(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "Jordan", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Speaker", "Jordan", USER)
        assert a != b

    def test_merge_accumulates_attribution(self, mem_store):
        doc1, _ = mem_store.upsert_node("Thing/Document", "d1", USER, dedup=False)
        doc2, _ = mem_store.upsert_node("Thing/Document", "d2", USER, dedup=False)
        nid, _ = mem_store.upsert_node("Thing/Entity/Person", "P", MODULE, attribution=(doc1, "m"))
        mem_store.upsert_node("Thing/Entity/Person", "P", MODULE, attribution=(doc2, "m"))
        assert mem_store.nodes[nid].source_documents() == {doc1, doc2}

    def test_dedup_false_always_creates(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Document", "same", USER, dedup=False)
        b, _ = mem_store.upsert_node("Thing/Document", "same", USER, dedup=False)
        assert a != b

    def test_hidden_duplicate_not_merged(self, mem_store):
        nid, _ = mem_store.upsert_node("Thing/Entity/Person", "P", USER)
        mem_store.hide(nid, USER, "mistake")
        nid2, outcome = mem_store.upsert_node("Thing/Entity/Person", "P", USER)
        assert outcome == "created" and nid2 != nid

    def test_unknown_type_rejected(self, mem_store):
        with pytest.raises(SchemaError):
            mem_store.upsert_node("Thing/Nope", "x", USER)

    def test_user_nodes_start_reviewed(self, mem_store):
        nid, _ = mem_store.upsert_node("Thing/Entity/Person", "P", USER)
        mid, _ = mem_store.upsert_node("Thing/Entity/Person", "Q", MODULE)
        assert mem_store.nodes[nid].reviewed
        assert not mem_store.nodes[mid].reviewed


class TestEdges:
    def test_endpoints_validated(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        d, _ = mem_store.upsert_node("Thing/Document", "D", USER)
        eid = mem_store.upsert_edge("mentioned_in", a, d, USER, grade=ConfidenceGrade("B", 2))
        assert mem_store.edges[eid].grade == ConfidenceGrade("B", 2)
        with pytest.raises(SchemaError):
            mem_store.upsert_edge("mentioned_in", d, a, USER)  # documents are targets
        with pytest.raises(UnknownItemError):
            mem_store.upsert_edge("related_to", a, "n99999999", USER)

    def test_module_grade_capped_and_logged(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "B", USER)
        eid = mem_store.upsert_edge("related_to", a, b, MODULE, grade=ConfidenceGrade("A", 1))
        assert mem_store.edges[eid].grade == ConfidenceGrade("C", 1)
        clamps = [e for e in mem_store.log.entries if e.mutation == "clamp_grade"]
        assert len(clamps) == 1 and clamps[0].payload["requested"] == "A1"

    def test_user_grade_not_capped(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "B", USER)
        eid = mem_store.upsert_edge("related_to", a, b, USER, grade=ConfidenceGrade("A", 1))
        assert mem_store.edges[eid].grade == ConfidenceGrade("A", 1)


class TestHideReviewAnnotate:
    def test_hide_cascades_to_incident_edges(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "B", USER)
        eid = mem_store.upsert_edge("related_to", a, b, USER)
        hidden = mem_store.hide(a, USER, "wrong")
        assert hidden == [a, eid]
        assert mem_store.edges[eid].hidden and mem_store.edges[eid].hide_reason == "wrong"
        assert not mem_store.nodes[b].hidden

    def test_double_hide_rejected(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        mem_store.hide(a, USER, "x")
        with pytest.raises(ValidationError):
            mem_store.hide(a, USER, "y")

    def test_review_is_user_only(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", MODULE)
        with pytest.raises(PermissionError_):
            mem_store.review(a, MODULE)
        mem_store.review(a, USER)
        assert mem_store.nodes[a].reviewed

    def test_review_can_raise_edge_grade_past_cap(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "B", USER)
        eid = mem_store.upsert_edge("related_to", a, b, MODULE, grade=ConfidenceGrade("A", 1))
        assert mem_store.edges[eid].grade.reliability == "C"
        mem_store.review(eid, USER, new_grade=ConfidenceGrade("A", 1))
        assert mem_store.edges[eid].grade == ConfidenceGrade("A", 1)

    def test_disproved_annotation_hides(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        mem_store.annotate(a, USER, "ruled out by alibi", disposition="disproved")
        assert mem_store.nodes[a].hidden
        assert mem_store.nodes[a].hide_reason == "disproved"
        assert mem_store.nodes[a].annotations[0]["comment"] == "ruled out by alibi"

    def test_plain_annotation_keeps_visible(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        mem_store.annotate(a, USER, "check later", disposition="flagged")
        assert not mem_store.nodes[a].hidden


class TestClusters:
    def test_merge_cluster_builds_alias_edges(self, mem_store):
        ids = [mem_store.upsert_node("Thing/Entity/Person", n, USER)[0] for n in ("Ann", "Anna", "Annie")]
        cluster = mem_store.merge_cluster(ids, USER, ConfidenceGrade("B", 2))
        assert cluster.representative == ids[0]  # earliest created
        assert cluster.members == sorted(ids)
        assert len(cluster.confirming_edges) == 2
        view = mem_store.apply_filter()
        assert len(view.clusters) == 1

    def test_cluster_needs_same_first_layer(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Event", "B", USER)
        with pytest.raises(ValidationError):
            mem_store.merge_cluster([a, b], USER, ConfidenceGrade("B", 2))

    def test_cluster_user_only_and_min_size(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "B", USER)
        with pytest.raises(PermissionError_):
            mem_store.merge_cluster([a, b], MODULE, ConfidenceGrade("B", 2))
        with pytest.raises(ValidationError):
            mem_store.merge_cluster([a, a], USER, ConfidenceGrade("B", 2))

    def test_cluster_dissolves_below_grade_threshold(self, mem_store):
        ids = [mem_store.upsert_node("Thing/Entity/Person", n, USER)[0] for n in ("Ann", "Anna")]
        mem_store.merge_cluster(ids, USER, ConfidenceGrade("C", 3))
        strict = mem_store.apply_filter(ViewFilter(min_grade=ConfidenceGrade("B", 2)))
        assert strict.clusters == []
        loose = mem_store.apply_filter(ViewFilter(min_grade=ConfidenceGrade("D", 4)))
        assert len(loose.clusters) == 1


class TestFilters:
    def test_grade_threshold_on_edges(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "B", USER)
        low = mem_store.upsert_edge("related_to", a, b, USER, grade=ConfidenceGrade("E", 5))
        high = mem_store.upsert_edge("communicated_with", a, b, USER, grade=ConfidenceGrade("B", 1))
        view = mem_store.apply_filter(ViewFilter(min_grade=ConfidenceGrade("C", 3)))
        assert high in view.edges and low not in view.edges

    def test_unknown_grade_hidden_by_any_threshold(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "B", USER)
        eid = mem_store.upsert_edge("related_to", a, b, USER)  # F6 default
        assert eid not in mem_store.apply_filter(ViewFilter(min_grade=ConfidenceGrade("E", 5))).edges
        assert eid in mem_store.apply_filter(ViewFilter(min_grade=GRADE_UNKNOWN)).edges

    def test_type_selection(self, mem_store):
        p, _ = mem_store.upsert_node("Thing/Entity/Person", "P", USER)
        e, _ = mem_store.upsert_node("Thing/Event", "E", USER)
        view = mem_store.apply_filter(ViewFilter(type_selection=["Thing/Entity"]))
        assert p in view.nodes and e not in view.nodes

    def test_cross_match_needs_two_documents(self, mem_store):
        d1, _ = mem_store.upsert_node("Thing/Document", "d1", USER, dedup=False)
        d2, _ = mem_store.upsert_node("Thing/Document", "d2", USER, dedup=False)
        single, _ = mem_store.upsert_node("Thing/Entity/Person", "S", MODULE, attribution=(d1, "m"))
        both, _ = mem_store.upsert_node("Thing/Entity/Person", "B", MODULE, attribution=(d1, "m"))
        mem_store.upsert_node("Thing/Entity/Person", "B", MODULE, attribution=(d2, "m"))
        view = mem_store.apply_filter(ViewFilter(cross_match_only=True))
        assert both in view.nodes and single not in view.nodes

    def test_include_hidden(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        mem_store.hide(a, USER, "x")
        assert a not in mem_store.apply_filter().nodes
        assert a in mem_store.apply_filter(ViewFilter(include_hidden=True)).nodes

    def test_inverted_time_range_rejected(self):
        with pytest.raises(ValidationError):
            ViewFilter(time_range=(10.0, 5.0))

    def test_time_association(self, mem_store):
        dt, _ = mem_store.upsert_node("Thing/Datetime", "March", USER, attributes={"interval": [100.0, 200.0]})
        event, _ = mem_store.upsert_node("Thing/Event", "meeting", USER)
        mem_store.upsert_edge("occurred_at", event, dt, USER, grade=ConfidenceGrade("B", 2))
        loner, _ = mem_store.upsert_node("Thing/Entity/Person", "loner", USER)
        doc, _ = mem_store.upsert_node("Thing/Document", "memo", USER, attributes={"timestamp": 150.0}, dedup=False)
        attributed, _ = mem_store.upsert_node("Thing/Entity/Person", "from memo", MODULE, attribution=(doc, "m"))
        view = mem_store.apply_filter(ViewFilter(time_range=(120.0, 180.0)))
        assert dt in view.nodes  # interval intersects
        assert event in view.nodes  # one hop from it
        assert doc in view.nodes  # document timestamp in range
        assert attributed in view.nodes  # attributed to that document
        assert loner not in view.nodes
        assert mem_store.apply_filter(ViewFilter(time_range=(300.0, 400.0))).nodes == set()


class TestNeighborhood:
    def test_matches_bfs_oracle_on_random_graph(self, schema):
        rng = random.Random(11)
        store = GraphStore(schema, None)
        n = 200
        ids = [store.upsert_node("Thing/Entity/Person", f"p{i}", USER)[0] for i in range(n)]
        for _ in range(400):
            a, b = rng.sample(ids, 2)
            store.upsert_edge("related_to", a, b, USER, grade=ConfidenceGrade("B", 2))
        for nid in rng.sample(ids, 20):
            if not store.nodes[nid].hidden:
                store.hide(nid, USER, "noise")
        adjacency: dict[str, set[str]] = {}
        for edge in store.edges.values():
            if edge.hidden or store.nodes[edge.from_id].hidden or store.nodes[edge.to_id].hidden:
                continue
            adjacency.setdefault(edge.from_id, set()).add(edge.to_id)
            adjacency.setdefault(edge.to_id, set()).add(edge.from_id)
        center = next(i for i in ids if not store.nodes[i].hidden)
        for k in range(5):
            assert store.neighborhood(center, k).nodes == bfs_k_hop(adjacency, center, k)

    def test_invisible_center_rejected(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        mem_store.hide(a, USER, "x")
        with pytest.raises(UnknownItemError):
            mem_store.neighborhood(a, 2)
        with pytest.raises(ValidationError):
            mem_store.neighborhood(a, -1, ViewFilter(include_hidden=True))

    def test_k_zero_is_just_center(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "A", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "B", USER)
        mem_store.upsert_edge("related_to", a, b, USER)
        view = mem_store.neighborhood(a, 0)
        assert view.nodes == {a} and view.edges == set()


class TestReplay:
    def test_replay_reproduces_state(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "Anna", USER)
        b, _ = mem_store.upsert_node("Thing/Entity/Person", "Bertha", MODULE)
        eid = mem_store.upsert_edge("related_to", a, b, MODULE, grade=ConfidenceGrade("A", 2))
        mem_store.review(eid, USER, new_grade=ConfidenceGrade("B", 1))
        mem_store.annotate(a, USER, "note", disposition="flagged")
        mem_store.hide(b, USER, "duplicate")
        replayed = GraphStore.replay(mem_store.log.entries, mem_store.schema)
        assert replayed.state_snapshot() == mem_store.state_snapshot()

    def test_replay_prefix(self, mem_store):
        a, _ = mem_store.upsert_node("Thing/Entity/Person", "Anna", USER)
        cut = mem_store.log.entries[-1].seq
        mem_store.hide(a, USER, "x")
        replayed = GraphStore.replay(mem_store.log.entries, mem_store.schema, up_to_seq=cut)
        assert not replayed.nodes[a].hidden

    def test_replayed_store_continues_id_sequence(self, mem_store):
        mem_store.upsert_node("Thing/Entity/Person", "Anna", USER)
        replayed = GraphStore.replay(mem_store.log.entries, mem_store.schema)
        nid, _ = replayed.upsert_node("Thing/Entity/Person", "Bertha", USER)
        assert nid not in mem_store.nodes or mem_store.nodes[nid].label == "Bertha"
        assert nid == "n00000001"


class TestTrace:
    def test_trace_includes_source_document_chain(self, mem_store):
        doc, _ = mem_store.upsert_node("Thing/Document", "report", USER, dedup=False)
        derived, _ = mem_store.upsert_node(
            "Thing/Document/Transcript", "transcript", MODULE, attribution=(doc, "t"), dedup=False
        )
        person, _ = mem_store.upsert_node("Thing/Entity/Person", "P", MODULE, attribution=(derived, "ner"))
        mutations = [e.mutation for e in mem_store.trace(person)]
        assert mutations.count("create_node") == 3  # person, transcript, and root document

    def test_trace_unknown_item(self, mem_store):
        with pytest.raises(UnknownItemError):
            mem_store.trace("n424242")
