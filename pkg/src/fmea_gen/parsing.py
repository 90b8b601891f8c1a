"""Rule-based parser turning raw completion text into structured step fragments.

The parser accepts arbitrary text and never crashes: either it finds a block
it recognizes for the requested step and returns a fragment (possibly with
warnings), or it raises a ParseError with a stable code. Tolerances beyond
the emission grammar are deliberate and enumerated: case-insensitive headers,
``*`` bullets as well as ``- ``, and free chatter before the block and after
``### END``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import NoRecognizedBlockError, WrongBlockError
from .model import StepKind
from .textutil import normalize_name

# Opening headers, per step. The boundary block is the only two-section block.
STEP_HEADERS: dict[StepKind, tuple[str, ...]] = {
    StepKind.BOUNDARY: ("DESCRIPTION", "COMPONENTS"),
    StepKind.FAILURE_LOCATIONS: ("FAILURE LOCATIONS",),
    StepKind.MECHANISMS: ("MECHANISMS",),
    StepKind.INFLUENCES: ("INFLUENCES",),
    StepKind.TASKS: ("TASKS",),
    StepKind.JOB_PLANS: ("JOB PLANS",),
}

END_HEADER = "END"

_HEADER_RE = re.compile(r"^###\s+(.+?)\s*$")
_ALL_HEADERS = {h for headers in STEP_HEADERS.values() for h in headers}


@dataclass(frozen=True)
class ParseWarning:
    code: str
    line_no: int

    def to_json_dict(self) -> dict:
        return {"code": self.code, "line_no": self.line_no}


@dataclass(frozen=True)
class ParsedFragment:
    """Structured output of one pipeline step.

    ``description`` is populated only for the boundary step; ``items`` never
    contain empties or case-insensitive duplicates.
    """

    step: StepKind
    description: str | None
    items: tuple[str, ...]
    warnings: tuple[ParseWarning, ...] = ()


def _match_header(line: str) -> str | None:
    """Return the uppercased header name if the line is a ``### NAME`` header."""
    m = _HEADER_RE.match(line.strip())
    if m is None:
        return None
    return " ".join(m.group(1).upper().split())


def _bullet_item(line: str) -> str | None:
    stripped = line.strip()
    if stripped.startswith("- ") or stripped.startswith("* "):
        return stripped[2:].strip()
    if stripped in ("-", "*"):
        return ""
    return None


def parse(text: str, step: StepKind | str) -> ParsedFragment:
    """Extract the step's block from raw completion text.

    Raises NO_RECOGNIZED_BLOCK when no step-appropriate header exists and
    WRONG_BLOCK when only other steps' headers are present.
    """
    step = StepKind.coerce(step)
    own_headers = set(STEP_HEADERS[step])
    lines = text.split("\n")

    start = None
    saw_foreign_header = False
    for idx, line in enumerate(lines):
        header = _match_header(line)
        if header is None:
            continue
        if header in own_headers:
            start = idx
            break
        if header in _ALL_HEADERS:
            saw_foreign_header = True
    if start is None:
        if saw_foreign_header:
            raise WrongBlockError(f"found headers, but none for step {step.value!r}")
        raise NoRecognizedBlockError(f"no recognized block for step {step.value!r}")

    warnings: list[ParseWarning] = []
    raw_items: list[tuple[str, int]] = []
    description_lines: list[str] = []
    # section: "description" while consuming free text, "items" while consuming bullets
    section = "description" if (step is StepKind.BOUNDARY and _match_header(lines[start]) == "DESCRIPTION") else "items"
    ended = False
    last_line_no = start + 1

    for idx in range(start + 1, len(lines)):
        line = lines[idx]
        line_no = idx + 1
        last_line_no = line_no
        header = _match_header(line)

        if header == END_HEADER:
            ended = True
            break
        if header is not None:
            if step is StepKind.BOUNDARY and header == "COMPONENTS" and section == "description":
                section = "items"
                continue
            if header in _ALL_HEADERS:
                # a new known block started without closing ours
                warnings.append(ParseWarning("MISSING_END", line_no))
                ended = True
                break
            warnings.append(ParseWarning("UNRECOGNIZED_LINE", line_no))
            continue

        if section == "description":
            description_lines.append(line)
            continue

        item = _bullet_item(line)
        if item is None:
            if line.strip():
                warnings.append(ParseWarning("UNRECOGNIZED_LINE", line_no))
            continue
        if item:
            raw_items.append((item, line_no))

    if not ended:
        warnings.append(ParseWarning("MISSING_END", last_line_no))

    items: list[str] = []
    seen: set[str] = set()
    for item, line_no in raw_items:
        key = normalize_name(item)
        if key in seen:
            warnings.append(ParseWarning("DUPLICATE_DROPPED", line_no))
            continue
        seen.add(key)
        items.append(item)

    description = "\n".join(description_lines).strip() or None
    if step is not StepKind.BOUNDARY:
        description = None

    return ParsedFragment(step=step, description=description, items=tuple(items), warnings=tuple(warnings))


def to_json_dict(fragment: ParsedFragment) -> dict:
    return {
        "step": fragment.step.value,
        "description": fragment.description,
        "items": list(fragment.items),
        "warnings": [w.to_json_dict() for w in fragment.warnings],
    }


def to_json(fragment: ParsedFragment) -> str:
    """Canonical fragment JSON: fixed key order, compact, byte-stable."""
    return json.dumps(to_json_dict(fragment), separators=(",", ":"), ensure_ascii=False)


def from_json(text: str) -> ParsedFragment:
    data = json.loads(text)
    return ParsedFragment(
        step=StepKind.coerce(data["step"]),
        description=data.get("description"),
        items=tuple(data.get("items", [])),
        warnings=tuple(ParseWarning(w["code"], w["line_no"]) for w in data.get("warnings", [])),
    )
