"""Prompt rendering: formatted worked examples plus the query input.

The emission grammar here is the exact grammar the response parser consumes,
so a formatted example always round-trips back to the document content it was
built from. Prompts are single completion strings (no chat roles); shot order
is preserved verbatim because orderings are an ensembling dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import EmptyInputError, MissingStepDataError, ShotCountMismatchError
from .model import STEP_ORDER, FmeaDocument, StepKind
from .parsing import STEP_HEADERS


class PromptMode(str, Enum):
    ZERO_SHOT = "zero_shot"
    RANDOM_SHOT = "random_shot"
    DFSP = "dfsp"

    @classmethod
    def coerce(cls, value: "PromptMode | str") -> "PromptMode":
        if isinstance(value, PromptMode):
            return value
        return cls(str(value).strip().lower().replace("-", "_"))


@dataclass(frozen=True)
class Shot:
    """One worked example: the input it answers and its formatted output block."""

    doc_id: str
    input_text: str
    example_text: str


@dataclass(frozen=True)
class PromptSpec:
    step: StepKind
    mode: PromptMode
    shots: tuple[Shot, ...]
    query_input: str
    template_id: str
    rendered: str


# Versioned instruction headers. Original wording; bump the id on any change
# so experiment reports stay diffable.
INSTRUCTION_TEMPLATES: dict[StepKind, tuple[str, str]] = {
    StepKind.BOUNDARY: (
        "boundary-v1",
        "You are a reliability engineer. Given a short equipment description, "
        "produce the equipment boundary: a functional description and the list "
        "of main components. Use exactly the output format of the examples.",
    ),
    StepKind.FAILURE_LOCATIONS: (
        "failure-locations-v1",
        "You are a reliability engineer. Given an equipment boundary, list the "
        "failure locations: the points on the equipment where a failure can "
        "occur. Use exactly the output format of the examples.",
    ),
    StepKind.MECHANISMS: (
        "mechanisms-v1",
        "You are a reliability engineer. Given the failure locations of a piece "
        "of equipment, list the degradation mechanisms that can lead to failure. "
        "Use exactly the output format of the examples.",
    ),
    StepKind.INFLUENCES: (
        "influences-v1",
        "You are a reliability engineer. Given the degradation mechanisms of a "
        "piece of equipment, list the degradation influences: the underlying "
        "causes. Use exactly the output format of the examples.",
    ),
    StepKind.TASKS: (
        "tasks-v1",
        "You are a reliability engineer. Given the degradation influences of a "
        "piece of equipment, list preventative maintenance tasks. Use exactly "
        "the output format of the examples.",
    ),
    StepKind.JOB_PLANS: (
        "job-plans-v1",
        "You are a reliability engineer. Given the preventative maintenance "
        "tasks for a piece of equipment, group them into job plans with a "
        "schedule. Use exactly the output format of the examples.",
    ),
}


def encode_job_plan_item(doc: FmeaDocument, plan_index: int) -> str:
    plan = doc.job_plans[plan_index]
    tasks_by_id = {t.id: t.description for t in doc.tasks}
    task_names = "; ".join(tasks_by_id[ref] for ref in plan.task_refs if ref in tasks_by_id)
    return f"{plan.name} :: {task_names} :: {plan.schedule}"


def decode_job_plan_item(item: str) -> tuple[str, list[str], str]:
    """Split a job-plan item line into (name, task names, schedule).

    Names and schedules must not themselves contain ' :: '; the fixture corpus
    and the formatter guarantee that.
    """
    parts = item.split(" :: ")
    if len(parts) != 3:
        raise ValueError(f"job plan item does not match 'name :: tasks :: schedule': {item!r}")
    name, tasks_part, schedule = parts
    task_names = [t.strip() for t in tasks_part.split(";") if t.strip()]
    return name.strip(), task_names, schedule.strip()


def step_example_items(doc: FmeaDocument, step: StepKind | str) -> list[str]:
    """The item lines a formatted example encodes for this step.

    Identical to flatten_step_items except for job plans, whose items carry
    the encoded ``name :: tasks :: schedule`` form.
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
    return [encode_job_plan_item(doc, i) for i in range(len(doc.job_plans))]


def format_items_block(step: StepKind, items: list[str], description: str | None = None) -> str:
    """Render a block in the emission grammar from already-flattened content."""
    lines: list[str] = []
    if step is StepKind.BOUNDARY:
        lines.append("### DESCRIPTION")
        lines.append(description or "")
        lines.append("### COMPONENTS")
    else:
        header = STEP_HEADERS[step][0]
        lines.append(f"### {header}")
    for item in items:
        lines.append(f"- {item}")
    lines.append("### END")
    return "\n".join(lines)


def format_example(doc: FmeaDocument, step: StepKind | str) -> str:
    """Format one document's step content as a worked-example block.

    Raises MISSING_STEP_DATA when the document has nothing to show for the
    step (no items; for the boundary, no description).
    """
    step = StepKind.coerce(step)
    items = step_example_items(doc, step)
    if step is StepKind.BOUNDARY:
        if not doc.boundary.description.strip():
            raise MissingStepDataError(f"document {doc.doc_id!r} has no boundary description")
        return format_items_block(step, items, doc.boundary.description)
    if not items:
        raise MissingStepDataError(f"document {doc.doc_id!r} has no {step.value} items")
    return format_items_block(step, items)


def shot_input_text(doc: FmeaDocument, step: StepKind | str) -> str:
    """The INPUT text a worked example answers.

    Boundary examples are keyed by the short equipment description; every
    later step is keyed by the formatted block of the step before it.
    """
    step = StepKind.coerce(step)
    if step is StepKind.BOUNDARY:
        return doc.short_description
    previous = STEP_ORDER[STEP_ORDER.index(step) - 1]
    return format_example(doc, previous)


def make_shot(doc: FmeaDocument, step: StepKind | str) -> Shot:
    step = StepKind.coerce(step)
    return Shot(doc_id=doc.doc_id, input_text=shot_input_text(doc, step), example_text=format_example(doc, step))


def _sanitize(text: str) -> str:
    # normalize newlines, keep printable characters only (plus newline)
    text = text.replace("\r\n", "\n").replace("\r", "\n").replace("\t", " ")
    return "".join(c for c in text if c == "\n" or c.isprintable())


def build_prompt(
    step: StepKind | str,
    mode: PromptMode | str,
    query_input: str,
    shots: list[Shot] | tuple[Shot, ...] = (),
) -> PromptSpec:
    """Render the completion prompt for a step.

    Shot order is preserved exactly as given. Mode and shot count must agree:
    zero_shot takes none, random_shot exactly one, dfsp at least one.
    """
    step = StepKind.coerce(step)
    mode = PromptMode.coerce(mode)
    shots = tuple(shots)

    if not query_input.strip():
        raise EmptyInputError("query input is empty")
    if mode is PromptMode.ZERO_SHOT and shots:
        raise ShotCountMismatchError(f"zero_shot takes no shots, got {len(shots)}")
    if mode is PromptMode.RANDOM_SHOT and len(shots) != 1:
        raise ShotCountMismatchError(f"random_shot takes exactly one shot, got {len(shots)}")
    if mode is PromptMode.DFSP and not shots:
        raise ShotCountMismatchError("dfsp requires at least one shot")

    template_id, instruction = INSTRUCTION_TEMPLATES[step]
    parts = [instruction, "\n\n"]
    for shot in shots:
        parts.append(f"INPUT: {shot.input_text}\nOUTPUT:\n{shot.example_text}\n\n")
    parts.append(f"INPUT: {query_input}\nOUTPUT:\n")
    rendered = _sanitize("".join(parts))

    return PromptSpec(
        step=step,
        mode=mode,
        shots=shots,
        query_input=query_input,
        template_id=template_id,
        rendered=rendered,
    )
