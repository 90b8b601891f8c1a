"""Bundled demonstration corpus.

Twenty small analyses across five equipment families (pump, motor, valve,
fan, heat exchanger), at least two documents per family, plus the canned
input->output map that drives the lookup provider. The JSON files live in
the package's fixtures/ data directory and are regenerated by
tools/make_fixtures.py; they are never edited by hand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .errors import InvalidDocumentError
from .model import FmeaDocument, from_json_dict, require_valid


@dataclass(frozen=True)
class FixtureSet:
    documents: tuple[FmeaDocument, ...]
    lookup_map: dict[str, str]

    def by_id(self, doc_id: str) -> FmeaDocument:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)


def family_of(doc_id: str) -> str:
    """Fixture ids are <family>-<nn>."""
    return doc_id.rsplit("-", 1)[0]


def load_fixtures() -> FixtureSet:
    root = resources.files("fmea_gen") / "fixtures"
    documents: list[FmeaDocument] = []
    corpus = root / "corpus"
    for entry in sorted(corpus.iterdir(), key=lambda item: item.name):
        if not entry.name.endswith(".json"):
            continue
        try:
            doc = from_json_dict(json.loads(entry.read_text(encoding="utf-8")))
            require_valid(doc)
        except Exception as exc:
            raise InvalidDocumentError(f"fixture {entry.name} is corrupted: {exc}") from exc
        documents.append(doc)
    try:
        lookup_map = json.loads((root / "lookup.json").read_text(encoding="utf-8"))
    except Exception as exc:
        raise InvalidDocumentError(f"fixture lookup.json is corrupted: {exc}") from exc
    if not isinstance(lookup_map, dict):
        raise InvalidDocumentError("fixture lookup.json must hold a JSON object")
    return FixtureSet(documents=tuple(documents), lookup_map=lookup_map)
