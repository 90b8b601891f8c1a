import json

import pytest

from fmea_gen.errors import InvalidDocumentError
from fmea_gen.model import (
    STEP_ORDER,
    DegradationInfluence,
    DegradationMechanism,
    EquipmentBoundary,
    FailureLocation,
    FmeaDocument,
    JobPlan,
    PreventativeTask,
    StepKind,
    canonical_json,
    flatten_step_items,
    from_json_dict,
    require_valid,
    to_json_dict,
    validate_document,
)


def make_doc(**overrides) -> FmeaDocument:
    base = dict(
        doc_id="doc-1",
        equipment_name="Test Pump",
        short_description="small test pump",
        boundary=EquipmentBoundary(
            description="A pump for tests.",
            components=("impeller", "casing"),
        ),
        locations=(
            FailureLocation(id="fl-1", name="impeller", component_ref="impeller"),
            FailureLocation(id="fl-2", name="casing", component_ref=None),
        ),
        mechanisms=(DegradationMechanism(id="dm-1", name="erosion", location_ref="fl-1"),),
        influences=(DegradationInfluence(id="di-1", name="low flow", mechanism_ref="dm-1"),),
        tasks=(PreventativeTask(id="pt-1", description="inspect impeller", location_ref="fl-1"),),
        job_plans=(JobPlan(id="jp-1", name="yearly care", task_refs=("pt-1",), schedule="every 12 months"),),
        provenance="authored",
    )
    base.update(overrides)
    return FmeaDocument(**base)


def codes(doc) -> set[str]:
    return {v.code for v in validate_document(doc)}


class TestValidation:
    def test_valid_document_has_no_violations(self):
        assert validate_document(make_doc()) == []

    def test_empty_component_name(self):
        doc = make_doc(boundary=EquipmentBoundary(description="d", components=("", "casing")))
        assert "EMPTY_NAME" in codes(doc)

    def test_untrimmed_name(self):
        doc = make_doc(boundary=EquipmentBoundary(description="d", components=(" impeller", "casing")))
        assert "UNTRIMMED_NAME" in codes(doc)

    def test_duplicate_component_case_insensitive(self):
        doc = make_doc(boundary=EquipmentBoundary(description="d", components=("Impeller", "impeller")))
        assert "DUPLICATE_COMPONENT" in codes(doc)

    def test_empty_boundary_description(self):
        doc = make_doc(boundary=EquipmentBoundary(description="   ", components=("impeller",)))
        assert "EMPTY_DESCRIPTION" in codes(doc)

    def test_duplicate_ids_document_wide(self):
        doc = make_doc(mechanisms=(DegradationMechanism(id="fl-1", name="erosion", location_ref="fl-1"),))
        assert "DUPLICATE_ID" in codes(doc)

    def test_dangling_location_ref(self):
        doc = make_doc(mechanisms=(DegradationMechanism(id="dm-1", name="erosion", location_ref="fl-9"),))
        assert "DANGLING_REF" in codes(doc)

    def test_dangling_component_ref(self):
        doc = make_doc(locations=(FailureLocation(id="fl-1", name="impeller", component_ref="rotor"),))
        assert "DANGLING_REF" in codes(doc)

    def test_component_ref_matches_case_insensitively(self):
        doc = make_doc(locations=(FailureLocation(id="fl-1", name="impeller", component_ref="IMPELLER"),),
                       mechanisms=(), influences=(), tasks=(), job_plans=())
        assert validate_document(doc) == []

    def test_job_plan_without_tasks(self):
        doc = make_doc(job_plans=(JobPlan(id="jp-1", name="care", task_refs=(), schedule="monthly"),))
        assert "EMPTY_TASK_REFS" in codes(doc)

    def test_job_plan_dangling_task_ref(self):
        doc = make_doc(job_plans=(JobPlan(id="jp-1", name="care", task_refs=("pt-9",), schedule="monthly"),))
        assert "DANGLING_REF" in codes(doc)

    def test_invalid_provenance(self):
        doc = make_doc(provenance="copied")
        assert "INVALID_PROVENANCE" in codes(doc)

    def test_require_valid_raises_with_detail(self):
        doc = make_doc(provenance="copied")
        with pytest.raises(InvalidDocumentError) as err:
            require_valid(doc)
        assert err.value.code == "INVALID_DOCUMENT"
        assert any(v["code"] == "INVALID_PROVENANCE" for v in err.value.detail)


class TestStepKind:
    def test_coerce_accepts_value_and_aliases(self):
        assert StepKind.coerce("boundary") is StepKind.BOUNDARY
        assert StepKind.coerce("failure-locations") is StepKind.FAILURE_LOCATIONS
        assert StepKind.coerce(StepKind.TASKS) is StepKind.TASKS

    def test_coerce_rejects_unknown(self):
        with pytest.raises(ValueError):
            StepKind.coerce("nonsense")

    def test_step_order_has_six_steps(self):
        assert len(STEP_ORDER) == 6
        assert STEP_ORDER[0] is StepKind.BOUNDARY
        assert STEP_ORDER[1] is StepKind.FAILURE_LOCATIONS


class TestFlatten:
    def test_boundary_items_are_components(self):
        doc = make_doc()
        assert flatten_step_items(doc, "boundary") == ["impeller", "casing"]

    def test_locations_items_are_names(self):
        doc = make_doc()
        assert flatten_step_items(doc, StepKind.FAILURE_LOCATIONS) == ["impeller", "casing"]

    def test_tasks_items_are_descriptions(self):
        doc = make_doc()
        assert flatten_step_items(doc, "tasks") == ["inspect impeller"]


class TestJsonRoundTrip:
    def test_round_trip_identity(self, fixture_set):
        for doc in fixture_set.documents:
            data = to_json_dict(doc)
            again = from_json_dict(json.loads(json.dumps(data)))
            assert again == doc

    def test_canonical_json_is_stable(self):
        doc = make_doc()
        assert canonical_json(doc) == canonical_json(from_json_dict(to_json_dict(doc)))

    def test_unknown_field_rejected(self):
        data = to_json_dict(make_doc())
        data["extra"] = 1
        with pytest.raises(InvalidDocumentError):
            from_json_dict(data)

    def test_missing_required_field_rejected(self):
        data = to_json_dict(make_doc())
        del data["boundary"]
        with pytest.raises(InvalidDocumentError):
            from_json_dict(data)

    def test_all_keys_present_even_when_empty(self):
        doc = make_doc(mechanisms=(), influences=(), tasks=(), job_plans=())
        data = to_json_dict(doc)
        for key in ("doc_id", "equipment_name", "short_description", "boundary",
                    "locations", "mechanisms", "influences", "tasks", "job_plans", "provenance"):
            assert key in data
