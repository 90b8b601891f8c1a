"""Regenerate the bundled fixture corpus and lookup map.

Usage: python tools/make_fixtures.py

Writes src/fmea_gen/fixtures/corpus/<doc_id>.json (20 documents, five
families of four) and src/fmea_gen/fixtures/lookup.json. The corpus is
built so that:

- every document shares one universal item ("foundation bolts" as both a
  component and a failure location), so any cross-family shot still yields
  nonzero recall;
- documents in a family share an identical core for every section, so
  same-family shots score high and majority voting across same-family
  variations is lossless on the core;
- each document carries one globally unique extra component/location, so
  no method reaches perfect recall by copying a different document and
  fuzzy grouping has distinct surfaces to keep apart;
- short descriptions share family keywords, so nearest-neighbour retrieval
  on the hashing embedder stays inside the family (checked at the end).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from fmea_gen.embedding import HashEmbedder, rank_candidates  # noqa: E402
from fmea_gen.model import (  # noqa: E402
    STEP_ORDER,
    DegradationInfluence,
    DegradationMechanism,
    EquipmentBoundary,
    FailureLocation,
    FmeaDocument,
    JobPlan,
    PreventativeTask,
    canonical_json,
    require_valid,
    to_json_dict,
)
from fmea_gen.prompting import format_example, shot_input_text  # noqa: E402
from fmea_gen.textutil import normalize_name  # noqa: E402

OUT_DIR = ROOT / "src" / "fmea_gen" / "fixtures"

# Each family: shared section cores plus four (doc_id, equipment_name,
# short_description, boundary lead sentence, unique extra item) rows.
# Task descriptions must avoid ";" and "::" so job-plan encoding stays
# reversible.
FAMILIES = {
    "pump": {
        "components": [
            "impeller", "casing", "shaft", "mechanical seal",
            "bearings", "coupling", "foundation bolts",
        ],
        "locations": [
            "impeller", "mechanical seal", "bearings",
            "shaft", "casing", "foundation bolts",
        ],
        "mechanisms": [
            ("cavitation erosion", 0),
            ("bearing wear", 2),
            ("seal face wear", 1),
            ("surface corrosion", 4),
        ],
        "influences": [
            ("low suction pressure", 0),
            ("shaft misalignment", 1),
            ("fluid contamination", 2),
        ],
        "tasks": [
            ("inspect mechanical seal for leakage", 1),
            ("lubricate bearings", 2),
            ("check shaft alignment", 3),
            ("measure vibration levels", 2),
        ],
        "plans": [
            ("quarterly pump care", [1, 3], "every 3 months"),
            ("annual pump overhaul", [0, 2], "every 12 months"),
        ],
        "boundary_tail": (
            "The boundary covers the pump casing and internals, the shaft sealing system, "
            "the bearings, and the drive coupling up to the motor flange."
        ),
        "docs": [
            ("pump-01", "Cooling Water Pump P-101",
             "horizontal centrifugal pump for cooling water circulation",
             "Horizontal centrifugal pump that circulates cooling water through the closed loop.",
             "wear rings"),
            ("pump-02", "Seawater Lift Pump P-102",
             "vertical centrifugal pump for seawater lift service",
             "Vertical centrifugal pump that lifts seawater to the distribution header.",
             "suction strainer"),
            ("pump-03", "Charge Pump P-103",
             "centrifugal charge pump for reactor feed duty",
             "Centrifugal charge pump that feeds process liquid to the reactor loop.",
             "balance drum"),
            ("pump-04", "Condensate Booster Pump P-104",
             "centrifugal booster pump for condensate return",
             "Centrifugal booster pump that returns condensate to the boiler feed system.",
             "casing wear plate"),
        ],
    },
    "motor": {
        "components": [
            "stator", "rotor", "shaft", "bearings",
            "cooling fan", "terminal box", "foundation bolts",
        ],
        "locations": [
            "stator windings", "bearings", "shaft",
            "cooling fan", "terminal box", "foundation bolts",
        ],
        "mechanisms": [
            ("winding insulation breakdown", 0),
            ("bearing wear", 1),
            ("rotor bar cracking", 2),
            ("contact corrosion", 4),
        ],
        "influences": [
            ("overheating", 0),
            ("voltage imbalance", 0),
            ("moisture ingress", 3),
        ],
        "tasks": [
            ("measure winding insulation resistance", 0),
            ("lubricate bearings", 1),
            ("clean cooling fan and guard", 3),
            ("check terminal connections", 4),
        ],
        "plans": [
            ("semiannual electrical check", [0, 3], "every 6 months"),
            ("quarterly motor care", [1, 2], "every 3 months"),
        ],
        "boundary_tail": (
            "The boundary covers the stator and rotor, the motor bearings, the cooling fan "
            "and guard, and the terminal box up to the supply cable lugs."
        ),
        "docs": [
            ("motor-01", "Conveyor Drive Motor M-201",
             "three phase induction motor for conveyor drive",
             "Three phase induction motor that drives the conveyor gearbox.",
             "shaft encoder"),
            ("motor-02", "Agitator Motor M-202",
             "three phase induction motor for agitator duty",
             "Three phase induction motor that turns the process agitator.",
             "slip ring unit"),
            ("motor-03", "Compressor Motor M-203",
             "medium voltage induction motor for compressor drive",
             "Medium voltage induction motor that drives the air compressor.",
             "anti condensation heater"),
            ("motor-04", "Crusher Motor M-204",
             "low voltage induction motor for crusher drive",
             "Low voltage induction motor that drives the crusher drum.",
             "vibration probes"),
        ],
    },
    "valve": {
        "components": [
            "valve body", "stem", "seat", "actuator",
            "packing gland", "position indicator", "foundation bolts",
        ],
        "locations": [
            "stem", "seat", "packing gland",
            "actuator", "valve body", "foundation bolts",
        ],
        "mechanisms": [
            ("seat erosion", 1),
            ("packing extrusion", 2),
            ("stem corrosion", 0),
            ("actuator drift", 3),
        ],
        "influences": [
            ("throttling service", 0),
            ("thermal cycling", 2),
            ("dirty process fluid", 0),
        ],
        "tasks": [
            ("stroke test the valve", 3),
            ("inspect packing gland for leakage", 2),
            ("grease the stem threads", 0),
            ("verify seat tightness", 1),
        ],
        "plans": [
            ("annual valve service", [0, 1], "every 12 months"),
            ("monthly valve checks", [2], "every month"),
        ],
        "boundary_tail": (
            "The boundary covers the valve body and trim, the stem and packing gland, the "
            "seat, and the actuator up to its supply connection."
        ),
        "docs": [
            ("valve-01", "Process Isolation Valve V-301",
             "electrically actuated gate valve for process isolation",
             "Electrically actuated gate valve that isolates the main process header.",
             "limit switches"),
            ("valve-02", "Steam Control Valve V-302",
             "pneumatic control valve for steam throttling",
             "Pneumatic control valve that throttles steam flow to the turbine.",
             "positioner"),
            ("valve-03", "Separator Relief Valve V-303",
             "spring loaded relief valve for overpressure protection",
             "Spring loaded relief valve that protects the separator vessel from overpressure.",
             "test gag"),
            ("valve-04", "Bypass Globe Valve V-304",
             "hydraulically actuated globe valve for bypass regulation",
             "Hydraulically actuated globe valve that regulates bypass flow.",
             "handwheel"),
        ],
    },
    "fan": {
        "components": [
            "impeller", "fan housing", "shaft", "bearings",
            "drive belt", "inlet guard", "foundation bolts",
        ],
        "locations": [
            "impeller", "bearings", "drive belt",
            "shaft", "fan housing", "foundation bolts",
        ],
        "mechanisms": [
            ("blade fouling", 0),
            ("bearing wear", 1),
            ("belt slippage", 2),
            ("housing corrosion", 4),
        ],
        "influences": [
            ("dust loading", 0),
            ("belt tension loss", 2),
            ("moisture carryover", 3),
        ],
        "tasks": [
            ("clean the impeller blades", 0),
            ("lubricate bearings", 1),
            ("check belt tension", 2),
            ("inspect the inlet guard", 4),
        ],
        "plans": [
            ("monthly fan route", [2], "every month"),
            ("quarterly fan care", [0, 1], "every 3 months"),
        ],
        "boundary_tail": (
            "The boundary covers the fan impeller, the housing, the shaft and bearings, the "
            "belt drive, and the inlet guard."
        ),
        "docs": [
            ("fan-01", "Forced Draft Fan F-401",
             "forced draft fan for boiler combustion air",
             "Forced draft fan that supplies combustion air to the boiler burners.",
             "anti vibration mounts"),
            ("fan-02", "Induced Draft Fan F-402",
             "induced draft fan for flue gas extraction",
             "Induced draft fan that extracts flue gas from the boiler outlet.",
             "backdraft damper"),
            ("fan-03", "Radiator Cooling Fan F-403",
             "axial cooling fan for radiator air flow",
             "Axial fan that moves cooling air across the radiator bank.",
             "variable inlet vanes"),
            ("fan-04", "Workshop Extract Fan F-404",
             "roof extract fan for workshop ventilation air",
             "Roof mounted extract fan that ventilates the workshop bay.",
             "acoustic silencer"),
        ],
    },
    "hx": {
        "components": [
            "tube bundle", "shell", "channel head", "baffles",
            "tube sheet", "gaskets", "foundation bolts",
        ],
        "locations": [
            "tube bundle", "tube sheet", "gaskets",
            "shell", "channel head", "foundation bolts",
        ],
        "mechanisms": [
            ("tube fouling", 0),
            ("gasket creep", 2),
            ("tube wall thinning", 0),
            ("shell corrosion", 3),
        ],
        "influences": [
            ("cooling water chemistry", 0),
            ("flow induced vibration", 2),
            ("thermal cycling", 1),
        ],
        "tasks": [
            ("clean the tube bundle", 0),
            ("inspect gaskets for leakage", 2),
            ("measure tube wall thickness", 0),
            ("check for fouling deposits", 0),
        ],
        "plans": [
            ("annual bundle clean", [0, 3], "every 12 months"),
            ("biennial thickness survey", [2], "every 24 months"),
        ],
        "boundary_tail": (
            "The boundary covers the tube bundle, the shell, the channel heads, the tube "
            "sheets, and all gasketed joints."
        ),
        "docs": [
            ("hx-01", "Lube Oil Cooler E-501",
             "shell and tube heat exchanger for lube oil cooling",
             "Shell and tube heat exchanger that cools the lube oil system.",
             "sacrificial anodes"),
            ("hx-02", "Gas Cooler E-502",
             "shell and tube heat exchanger for process gas cooling",
             "Shell and tube heat exchanger that cools process gas upstream of the compressor.",
             "impingement plate"),
            ("hx-03", "Jacket Water Cooler E-503",
             "shell and tube heat exchanger for jacket water cooling",
             "Shell and tube heat exchanger that cools the engine jacket water circuit.",
             "expansion joint"),
            ("hx-04", "Overhead Condenser E-504",
             "shell and tube heat exchanger for overhead vapour condensing",
             "Shell and tube heat exchanger that condenses overhead vapour from the column.",
             "vent connections"),
        ],
    },
}


def build_document(family: dict, doc_row: tuple) -> FmeaDocument:
    doc_id, equipment_name, short_description, lead, extra = doc_row

    components = list(family["components"]) + [extra]
    location_names = list(family["locations"]) + [extra]
    components_by_norm = {normalize_name(c): c for c in components}

    locations = tuple(
        FailureLocation(
            id=f"fl-{i + 1}",
            name=name,
            component_ref=components_by_norm.get(normalize_name(name)),
        )
        for i, name in enumerate(location_names)
    )
    mechanisms = tuple(
        DegradationMechanism(id=f"dm-{i + 1}", name=name, location_ref=locations[loc].id)
        for i, (name, loc) in enumerate(family["mechanisms"])
    )
    influences = tuple(
        DegradationInfluence(id=f"di-{i + 1}", name=name, mechanism_ref=mechanisms[mech].id)
        for i, (name, mech) in enumerate(family["influences"])
    )
    tasks = tuple(
        PreventativeTask(id=f"pt-{i + 1}", description=desc, location_ref=locations[loc].id)
        for i, (desc, loc) in enumerate(family["tasks"])
    )
    job_plans = tuple(
        JobPlan(
            id=f"jp-{i + 1}",
            name=name,
            task_refs=tuple(tasks[t].id for t in task_idx),
            schedule=schedule,
        )
        for i, (name, task_idx, schedule) in enumerate(family["plans"])
    )
    doc = FmeaDocument(
        doc_id=doc_id,
        equipment_name=equipment_name,
        short_description=short_description,
        boundary=EquipmentBoundary(
            description=f"{lead} {family['boundary_tail']}",
            components=tuple(components),
        ),
        locations=locations,
        mechanisms=mechanisms,
        influences=influences,
        tasks=tasks,
        job_plans=job_plans,
        provenance="fixture",
    )
    require_valid(doc)
    return doc


def build_lookup(docs: list[FmeaDocument]) -> dict[str, str]:
    lookup: dict[str, str] = {}
    for doc in docs:
        for step in STEP_ORDER:
            key = shot_input_text(doc, step)
            value = format_example(doc, step)
            if key in lookup and lookup[key] != value:
                raise SystemExit(f"lookup key collision with divergent values for {doc.doc_id}/{step.value}")
            lookup[key] = value
    return lookup


def check_retrieval(docs: list[FmeaDocument]) -> None:
    """Every document's nearest neighbour must stay inside its family."""
    embedder = HashEmbedder()
    failures = []
    for doc in docs:
        pool = [d for d in docs if d.doc_id != doc.doc_id]
        top = rank_candidates(doc.short_description, pool, k=1, provider=embedder)[0]
        family = doc.doc_id.rsplit("-", 1)[0]
        top_family = top.doc_id.rsplit("-", 1)[0]
        if family != top_family:
            failures.append(f"{doc.doc_id} -> {top.doc_id} (score {top.score:.3f})")
    if failures:
        raise SystemExit("leave-one-out retrieval left the family:\n  " + "\n  ".join(failures))


def main() -> None:
    docs = [build_document(family, row) for family in FAMILIES.values() for row in family["docs"]]
    uniques = [row[4] for family in FAMILIES.values() for row in family["docs"]]
    if len(set(uniques)) != len(uniques):
        raise SystemExit("unique extras are not globally unique")
    check_retrieval(docs)

    corpus_dir = OUT_DIR / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        path = corpus_dir / f"{doc.doc_id}.json"
        path.write_text(json.dumps(to_json_dict(doc), indent=2) + "\n", encoding="utf-8")
    lookup = build_lookup(docs)
    (OUT_DIR / "lookup.json").write_text(
        json.dumps(lookup, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    # canonical_json is what ingest hashing sees; round-trip sanity check
    for doc in docs:
        assert canonical_json(doc)
    print(f"wrote {len(docs)} documents and {len(lookup)} lookup entries under {OUT_DIR}")


if __name__ == "__main__":
    main()
