import pytest
from hypothesis import given, strategies as st

from casegraph.errors import SchemaError, ValidationError
from casegraph.schema import (
    ConfidenceGrade,
    GRADE_UNKNOWN,
    SchemaRegistry,
    cap_automated_grade,
    parent_path,
    path_is_descendant,
)

grades = st.builds(
    ConfidenceGrade, st.sampled_from("ABCDEF"), st.integers(min_value=1, max_value=6)
)


class TestConfidenceGrade:
    def test_parse_round_trip(self):
        assert str(ConfidenceGrade.parse("C3")) == "C3"
        assert ConfidenceGrade.parse("a1") == ConfidenceGrade("A", 1)

    @pytest.mark.parametrize("bad", ["", "G1", "A7", "A0", "AA", "1A", "B12"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValidationError):
            ConfidenceGrade.parse(bad)

    def test_f6_is_strictly_lowest(self):
        for r in "ABCDEF":
            for c in range(1, 7):
                grade = ConfidenceGrade(r, c)
                assert grade.at_least(GRADE_UNKNOWN)
                if grade != GRADE_UNKNOWN:
                    assert not GRADE_UNKNOWN.at_least(grade)

    def test_at_least_needs_both_components(self):
        assert ConfidenceGrade("B", 2).at_least(ConfidenceGrade("C", 3))
        assert not ConfidenceGrade("A", 4).at_least(ConfidenceGrade("C", 3))
        assert not ConfidenceGrade("D", 1).at_least(ConfidenceGrade("C", 3))

    @given(grades, grades)
    def test_at_least_matches_componentwise_ranks(self, a, b):
        expected = a.reliability_rank >= b.reliability_rank and a.credibility_rank >= b.credibility_rank
        assert a.at_least(b) == expected

    @given(grades)
    def test_automated_cap_never_exceeds_c(self, grade):
        capped = cap_automated_grade(grade)
        assert capped.reliability in "CDEF"
        assert capped.credibility == grade.credibility

    def test_cap_leaves_low_grades_alone(self):
        assert cap_automated_grade(ConfidenceGrade("E", 5)) == ConfidenceGrade("E", 5)
        assert cap_automated_grade(ConfidenceGrade("A", 1)) == ConfidenceGrade("C", 1)


class TestPaths:
    def test_descendant_is_segment_wise(self):
        assert path_is_descendant("Thing/Entity/Person", "Thing/Entity")
        assert path_is_descendant("Thing/Entity", "Thing/Entity")
        assert not path_is_descendant("Thing/EntityX", "Thing/Entity")
        assert not path_is_descendant("Thing", "Thing/Entity")

    def test_parent_path(self):
        assert parent_path("Thing/Entity/Person") == "Thing/Entity"
        assert parent_path("Thing") is None


class TestRegistry:
    def test_register_and_subtype(self):
        reg = SchemaRegistry()
        reg.register_type("Thing/Entity")
        reg.register_type("Thing/Entity/Person", {"alias": "text"})
        assert reg.is_subtype("Thing/Entity/Person", "Thing/Entity")
        assert not reg.is_subtype("Thing/Entity", "Thing/Entity/Person")

    def test_unknown_parent_rejected(self):
        reg = SchemaRegistry()
        with pytest.raises(SchemaError):
            reg.register_type("Thing/Entity/Person")

    def test_duplicate_rejected(self):
        reg = SchemaRegistry()
        reg.register_type("Thing/Entity")
        with pytest.raises(SchemaError):
            reg.register_type("Thing/Entity")

    def test_inherited_attribute_collision(self):
        reg = SchemaRegistry()
        reg.register_type("Thing/Entity", {"alias": "text"})
        with pytest.raises(SchemaError):
            reg.register_type("Thing/Entity/Person", {"alias": "text"})

    def test_effective_attributes_inherit(self):
        reg = SchemaRegistry()
        reg.register_type("Thing/Entity", {"alias": "text"})
        reg.register_type("Thing/Entity/Person", {"age": "integer"})
        assert reg.effective_attributes("Thing/Entity/Person") == {"alias": "text", "age": "integer"}

    def test_validate_attributes(self):
        reg = SchemaRegistry()
        reg.register_type("Thing/Entity", {"alias": "text", "weight": "real"})
        reg.validate_attributes("Thing/Entity", {"alias": "x", "weight": 1.5})
        with pytest.raises(SchemaError):
            reg.validate_attributes("Thing/Entity", {"unknown": 1})
        with pytest.raises(SchemaError):
            reg.validate_attributes("Thing/Entity", {"alias": 42})

    def test_relationship_endpoints(self):
        reg = SchemaRegistry()
        reg.register_type("Thing/Entity")
        reg.register_type("Thing/Document")
        reg.register_relationship("mentioned_in", ["Thing"], ["Thing/Document"])
        assert reg.allows_endpoints("mentioned_in", "Thing/Entity", "Thing/Document")
        assert not reg.allows_endpoints("mentioned_in", "Thing/Document", "Thing/Entity")

    def test_first_layer(self):
        reg = SchemaRegistry()
        reg.register_type("Thing/Entity")
        reg.register_type("Thing/Entity/Person")
        assert reg.first_layer("Thing/Entity/Person") == "Thing/Entity"
        with pytest.raises(SchemaError):
            reg.first_layer("Thing")


class TestDefaultSchema:
    def test_shipped_registry_size(self, schema):
        assert len(schema.all_types()) >= 50
        assert len(schema.all_relationships()) >= 10

    def test_core_types_present(self, schema):
        for path in (
            "Thing/Entity/Person",
            "Thing/Location",
            "Thing/Datetime",
            "Thing/Event",
            "Thing/Document/Audio",
            "Thing/Document/Transcript",
            "Thing/Entity/Speaker",
        ):
            assert schema.is_registered(path), path

    def test_document_attributes(self, schema):
        attrs = schema.effective_attributes("Thing/Document/Text")
        assert attrs["object_digest"] == "binary_ref"
        assert attrs["timestamp"] == "timestamp"

    def test_describe_round_trips(self, schema):
        rebuilt = SchemaRegistry.from_definition(schema.describe())
        assert rebuilt.all_types() == schema.all_types()
        assert rebuilt.all_relationships() == schema.all_relationships()
