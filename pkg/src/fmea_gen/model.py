"""Nested FMEA document schema, validation, and canonical JSON form.

An FMEA document is a forest rooted at failure locations: each degradation
mechanism hangs off exactly one location, each influence off exactly one
mechanism. Preventative tasks point back into that forest and job plans
group tasks. Validation returns violations as data (never raises), so a
reviewing UI can show everything wrong with a draft at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidDocumentError
from .textutil import normalize_name

PROVENANCE_VALUES = ("authored", "generated", "fixture")


class StepKind(str, Enum):
    """The six generation steps, in pipeline order."""

    BOUNDARY = "boundary"
    FAILURE_LOCATIONS = "failure_locations"
    MECHANISMS = "mechanisms"
    INFLUENCES = "influences"
    TASKS = "tasks"
    JOB_PLANS = "job_plans"

    @classmethod
    def coerce(cls, value: "StepKind | str") -> "StepKind":
        if isinstance(value, StepKind):
            return value
        name = str(value).strip().lower().replace("-", "_")
        # projection alias: the boundary step flattens to its component list
        if name == "boundary_components":
            return cls.BOUNDARY
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown step kind: {value!r}") from None


STEP_ORDER: tuple[StepKind, ...] = (
    StepKind.BOUNDARY,
    StepKind.FAILURE_LOCATIONS,
    StepKind.MECHANISMS,
    StepKind.INFLUENCES,
    StepKind.TASKS,
    StepKind.JOB_PLANS,
)


@dataclass(frozen=True)
class EquipmentBoundary:
    """Functional description of the asset plus its main components."""

    description: str
    components: tuple[str, ...] = ()


@dataclass(frozen=True)
class FailureLocation:
    id: str
    name: str
    component_ref: str | None = None


@dataclass(frozen=True)
class DegradationMechanism:
    id: str
    name: str
    location_ref: str


@dataclass(frozen=True)
class DegradationInfluence:
    id: str
    name: str
    mechanism_ref: str


@dataclass(frozen=True)
class PreventativeTask:
    id: str
    description: str
    location_ref: str
    mechanism_ref: str | None = None
    influence_ref: str | None = None


@dataclass(frozen=True)
class JobPlan:
    id: str
    name: str
    task_refs: tuple[str, ...]
    schedule: str


@dataclass(frozen=True)
class FmeaDocument:
    doc_id: str
    equipment_name: str
    short_description: str
    boundary: EquipmentBoundary
    locations: tuple[FailureLocation, ...] = ()
    mechanisms: tuple[DegradationMechanism, ...] = ()
    influences: tuple[DegradationInfluence, ...] = ()
    tasks: tuple[PreventativeTask, ...] = ()
    job_plans: tuple[JobPlan, ...] = ()
    provenance: str = "authored"


@dataclass(frozen=True)
class Violation:
    """One broken invariant: a stable code plus the offending identifier."""

    code: str
    subject: str
    message: str

    def to_json_dict(self) -> dict:
        return {"code": self.code, "subject": self.subject, "message": self.message}


def _check_name(violations: list[Violation], code_prefix: str, subject: str, name: str) -> None:
    if not name.strip():
        violations.append(Violation("EMPTY_NAME", subject, f"{code_prefix} has an empty name"))
    elif name != name.strip():
        violations.append(
            Violation("UNTRIMMED_NAME", subject, f"{code_prefix} name has leading/trailing whitespace: {name!r}")
        )


def validate_document(doc: FmeaDocument) -> list[Violation]:
    """Check every document invariant; an empty list means the document is valid.

    Violations are data, not exceptions: callers that need a hard failure
    (e.g. corpus ingest) wrap the result themselves.
    """
    violations: list[Violation] = []

    if doc.provenance not in PROVENANCE_VALUES:
        violations.append(
            Violation("INVALID_PROVENANCE", doc.doc_id, f"provenance must be one of {PROVENANCE_VALUES}")
        )
    if not doc.doc_id.strip():
        violations.append(Violation("EMPTY_NAME", doc.doc_id, "doc_id is empty"))
    _check_name(violations, "equipment", doc.doc_id, doc.equipment_name)
    if not doc.short_description.strip():
        violations.append(Violation("EMPTY_DESCRIPTION", doc.doc_id, "short_description is empty"))

    if not doc.boundary.description.strip():
        violations.append(Violation("EMPTY_DESCRIPTION", doc.doc_id, "boundary description is empty"))
    seen_components: dict[str, str] = {}
    for comp in doc.boundary.components:
        _check_name(violations, "component", comp, comp)
        key = normalize_name(comp)
        if key in seen_components:
            violations.append(
                Violation(
                    "DUPLICATE_COMPONENT",
                    comp,
                    f"component {comp!r} duplicates {seen_components[key]!r} (case-insensitive)",
                )
            )
        else:
            seen_components[key] = comp

    # id uniqueness is document-wide so references are unambiguous
    seen_ids: set[str] = set()
    for kind, items in (
        ("location", doc.locations),
        ("mechanism", doc.mechanisms),
        ("influence", doc.influences),
        ("task", doc.tasks),
        ("job plan", doc.job_plans),
    ):
        for item in items:
            if not item.id.strip():
                violations.append(Violation("EMPTY_NAME", item.id, f"{kind} has an empty id"))
            if item.id in seen_ids:
                violations.append(Violation("DUPLICATE_ID", item.id, f"{kind} id {item.id!r} is not unique"))
            seen_ids.add(item.id)

    location_ids = {loc.id for loc in doc.locations}
    mechanism_ids = {m.id for m in doc.mechanisms}
    influence_ids = {i.id for i in doc.influences}
    task_ids = {t.id for t in doc.tasks}
    component_keys = set(seen_components)

    for loc in doc.locations:
        _check_name(violations, "location", loc.id, loc.name)
        if loc.component_ref is not None and normalize_name(loc.component_ref) not in component_keys:
            violations.append(
                Violation("DANGLING_REF", loc.id, f"location {loc.id!r} references missing component {loc.component_ref!r}")
            )
    for mech in doc.mechanisms:
        _check_name(violations, "mechanism", mech.id, mech.name)
        if mech.location_ref not in location_ids:
            violations.append(
                Violation("DANGLING_REF", mech.id, f"mechanism {mech.id!r} references missing location {mech.location_ref!r}")
            )
    for infl in doc.influences:
        _check_name(violations, "influence", infl.id, infl.name)
        if infl.mechanism_ref not in mechanism_ids:
            violations.append(
                Violation("DANGLING_REF", infl.id, f"influence {infl.id!r} references missing mechanism {infl.mechanism_ref!r}")
            )
    for task in doc.tasks:
        if not task.description.strip():
            violations.append(Violation("EMPTY_NAME", task.id, f"task {task.id!r} has an empty description"))
        if task.location_ref not in location_ids:
            violations.append(
                Violation("DANGLING_REF", task.id, f"task {task.id!r} references missing location {task.location_ref!r}")
            )
        if task.mechanism_ref is not None and task.mechanism_ref not in mechanism_ids:
            violations.append(
                Violation("DANGLING_REF", task.id, f"task {task.id!r} references missing mechanism {task.mechanism_ref!r}")
            )
        if task.influence_ref is not None and task.influence_ref not in influence_ids:
            violations.append(
                Violation("DANGLING_REF", task.id, f"task {task.id!r} references missing influence {task.influence_ref!r}")
            )
    for plan in doc.job_plans:
        _check_name(violations, "job plan", plan.id, plan.name)
        if not plan.task_refs:
            violations.append(Violation("EMPTY_TASK_REFS", plan.id, f"job plan {plan.id!r} has no tasks"))
        for ref in plan.task_refs:
            if ref not in task_ids:
                violations.append(
                    Violation("DANGLING_REF", plan.id, f"job plan {plan.id!r} references missing task {ref!r}")
                )

    return violations


def require_valid(doc: FmeaDocument) -> None:
    """Raise INVALID_DOCUMENT carrying the violation list if any check fails."""
    violations = validate_document(doc)
    if violations:
        raise InvalidDocumentError(
            f"document {doc.doc_id!r} has {len(violations)} violation(s)",
            detail=[v.to_json_dict() for v in violations],
        )


def flatten_step_items(doc: FmeaDocument, step: StepKind | str) -> list[str]:
    """Project one step of the document onto its item names, in document order.

    Total on validated documents; the boundary step projects to component names.
    """
    step = StepKind.coerce(step)
    if step is StepKind.BOUNDARY:
        return list(doc.boundary.components)
    if step is StepKind.FAILURE_LOCATIONS:
        return [loc.name for loc in doc.locations]
    if step is StepKind.MECHANISMS:
        return [m.name for m in doc.mechanisms]
    if step is StepKind.INFLUENCES:
        return [i.name for i in doc.influences]
    if step is StepKind.TASKS:
        return [t.description for t in doc.tasks]
    return [p.name for p in doc.job_plans]


# --- canonical JSON ----------------------------------------------------------

_TOP_LEVEL_FIELDS = (
    "doc_id",
    "equipment_name",
    "short_description",
    "boundary",
    "locations",
    "mechanisms",
    "influences",
    "tasks",
    "job_plans",
    "provenance",
)


def to_json_dict(doc: FmeaDocument) -> dict:
    """Canonical wire form: fixed field names and order, all keys always present."""
    return {
        "doc_id": doc.doc_id,
        "equipment_name": doc.equipment_name,
        "short_description": doc.short_description,
        "boundary": {
            "description": doc.boundary.description,
            "components": list(doc.boundary.components),
        },
        "locations": [
            {"id": loc.id, "name": loc.name, "component_ref": loc.component_ref} for loc in doc.locations
        ],
        "mechanisms": [
            {"id": m.id, "name": m.name, "location_ref": m.location_ref} for m in doc.mechanisms
        ],
        "influences": [
            {"id": i.id, "name": i.name, "mechanism_ref": i.mechanism_ref} for i in doc.influences
        ],
        "tasks": [
            {
                "id": t.id,
                "description": t.description,
                "location_ref": t.location_ref,
                "mechanism_ref": t.mechanism_ref,
                "influence_ref": t.influence_ref,
            }
            for t in doc.tasks
        ],
        "job_plans": [
            {"id": p.id, "name": p.name, "task_refs": list(p.task_refs), "schedule": p.schedule}
            for p in doc.job_plans
        ],
        "provenance": doc.provenance,
    }


def canonical_json(doc: FmeaDocument) -> str:
    """Compact, byte-stable serialization used for hashing and equality checks."""
    return json.dumps(to_json_dict(doc), separators=(",", ":"), ensure_ascii=False)


def _require_keys(data: dict, allowed: tuple[str, ...], required: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise InvalidDocumentError(f"unknown field(s) in {where}: {', '.join(unknown)}", detail=unknown)
    missing = sorted(set(required) - set(data))
    if missing:
        raise InvalidDocumentError(f"missing field(s) in {where}: {', '.join(missing)}", detail=missing)


def _as_str(value: object, where: str) -> str:
    if not isinstance(value, str):
        raise InvalidDocumentError(f"{where} must be a string, got {type(value).__name__}")
    return value


def _as_opt_str(value: object, where: str) -> str | None:
    if value is None:
        return None
    return _as_str(value, where)


def _as_list(value: object, where: str) -> list:
    if not isinstance(value, list):
        raise InvalidDocumentError(f"{where} must be a list, got {type(value).__name__}")
    return value


def from_json_dict(data: dict) -> FmeaDocument:
    """Parse the canonical wire form. Unknown fields are rejected outright."""
    if not isinstance(data, dict):
        raise InvalidDocumentError("document must be a JSON object")
    _require_keys(
        data,
        _TOP_LEVEL_FIELDS,
        ("doc_id", "equipment_name", "short_description", "boundary"),
        "document",
    )

    raw_boundary = data["boundary"]
    if not isinstance(raw_boundary, dict):
        raise InvalidDocumentError("boundary must be a JSON object")
    _require_keys(raw_boundary, ("description", "components"), ("description",), "boundary")
    boundary = EquipmentBoundary(
        description=_as_str(raw_boundary["description"], "boundary.description"),
        components=tuple(
            _as_str(c, "boundary.components[]") for c in _as_list(raw_boundary.get("components", []), "boundary.components")
        ),
    )

    locations = []
    for raw in _as_list(data.get("locations", []), "locations"):
        _require_keys(raw, ("id", "name", "component_ref"), ("id", "name"), "locations[]")
        locations.append(
            FailureLocation(
                id=_as_str(raw["id"], "location.id"),
                name=_as_str(raw["name"], "location.name"),
                component_ref=_as_opt_str(raw.get("component_ref"), "location.component_ref"),
            )
        )

    mechanisms = []
    for raw in _as_list(data.get("mechanisms", []), "mechanisms"):
        _require_keys(raw, ("id", "name", "location_ref"), ("id", "name", "location_ref"), "mechanisms[]")
        mechanisms.append(
            DegradationMechanism(
                id=_as_str(raw["id"], "mechanism.id"),
                name=_as_str(raw["name"], "mechanism.name"),
                location_ref=_as_str(raw["location_ref"], "mechanism.location_ref"),
            )
        )

    influences = []
    for raw in _as_list(data.get("influences", []), "influences"):
        _require_keys(raw, ("id", "name", "mechanism_ref"), ("id", "name", "mechanism_ref"), "influences[]")
        influences.append(
            DegradationInfluence(
                id=_as_str(raw["id"], "influence.id"),
                name=_as_str(raw["name"], "influence.name"),
                mechanism_ref=_as_str(raw["mechanism_ref"], "influence.mechanism_ref"),
            )
        )

    tasks = []
    for raw in _as_list(data.get("tasks", []), "tasks"):
        _require_keys(
            raw,
            ("id", "description", "location_ref", "mechanism_ref", "influence_ref"),
            ("id", "description", "location_ref"),
            "tasks[]",
        )
        tasks.append(
            PreventativeTask(
                id=_as_str(raw["id"], "task.id"),
                description=_as_str(raw["description"], "task.description"),
                location_ref=_as_str(raw["location_ref"], "task.location_ref"),
                mechanism_ref=_as_opt_str(raw.get("mechanism_ref"), "task.mechanism_ref"),
                influence_ref=_as_opt_str(raw.get("influence_ref"), "task.influence_ref"),
            )
        )

    job_plans = []
    for raw in _as_list(data.get("job_plans", []), "job_plans"):
        _require_keys(raw, ("id", "name", "task_refs", "schedule"), ("id", "name", "task_refs", "schedule"), "job_plans[]")
        job_plans.append(
            JobPlan(
                id=_as_str(raw["id"], "job_plan.id"),
                name=_as_str(raw["name"], "job_plan.name"),
                task_refs=tuple(_as_str(r, "job_plan.task_refs[]") for r in _as_list(raw["task_refs"], "job_plan.task_refs")),
                schedule=_as_str(raw["schedule"], "job_plan.schedule"),
            )
        )

    provenance = data.get("provenance", "authored")
    return FmeaDocument(
        doc_id=_as_str(data["doc_id"], "doc_id"),
        equipment_name=_as_str(data["equipment_name"], "equipment_name"),
        short_description=_as_str(data["short_description"], "short_description"),
        boundary=boundary,
        locations=tuple(locations),
        mechanisms=tuple(mechanisms),
        influences=tuple(influences),
        tasks=tuple(tasks),
        job_plans=tuple(job_plans),
        provenance=_as_str(provenance, "provenance"),
    )
