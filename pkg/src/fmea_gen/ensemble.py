"""Fuzzy majority voting across repeated generations of the same step.

Items from all parsed variations are grouped by token-set similarity (single
link: a chain of pairwise matches merges into one group), then groups
supported by fewer than ceil(vote_threshold * n_variations) variations are
dropped. Voting is by variation, not by surface form, so one variation
repeating an item does not double its weight.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, TypeVar

from .errors import EmptyTextError, SizeMismatchError, StepMismatchError
from .parsing import ParsedFragment, to_json_dict as fragment_to_json_dict
from .textutil import tokenize

T = TypeVar("T")

DEFAULT_VOTE_THRESHOLD = 0.5
DEFAULT_FUZZY_THRESHOLD = 0.85
MAX_SHOT_PERMUTATIONS = 6


def similarity(a: str, b: str) -> float:
    """Jaccard overlap of the two texts' token sets, in [0, 1].

    Symmetric, and 1.0 exactly when the token sets are equal.
    """
    if not a.strip() or not b.strip():
        raise EmptyTextError("similarity requires non-empty texts")
    ta, tb = set(tokenize(a)), set(tokenize(b))
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


@dataclass(frozen=True)
class EnsembleConfig:
    """Labels one variation per (provider_id, shot-order index) pair."""

    variations: tuple[tuple[str, int], ...]
    vote_threshold: float = DEFAULT_VOTE_THRESHOLD
    fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD

    def __post_init__(self) -> None:
        if not self.variations:
            raise ValueError("at least one variation is required")
        if not 0.0 < self.vote_threshold <= 1.0:
            raise ValueError(f"vote_threshold must be in (0, 1], got {self.vote_threshold!r}")
        if not 0.0 <= self.fuzzy_threshold <= 1.0:
            raise ValueError(f"fuzzy_threshold must be in [0, 1], got {self.fuzzy_threshold!r}")

    @property
    def cutoff(self) -> int:
        # round() first so 0.2 * 5 = 1.0000000000000002 does not ceil to 2
        return math.ceil(round(self.vote_threshold * len(self.variations), 9))


@dataclass(frozen=True)
class VotedItem:
    canonical_name: str
    votes: int
    supporters: tuple[tuple[int, str], ...]

    def to_json_dict(self) -> dict:
        return {
            "name": self.canonical_name,
            "votes": self.votes,
            "supporters": [[index, surface] for index, surface in self.supporters],
        }


@dataclass(frozen=True)
class AggregateResult:
    fragment: ParsedFragment
    votes: tuple[VotedItem, ...]

    def to_json_dict(self) -> dict:
        payload = fragment_to_json_dict(self.fragment)
        payload["votes"] = [item.to_json_dict() for item in self.votes]
        return payload


def fuzzy_group(fragments: Sequence[ParsedFragment], fuzzy_threshold: float) -> list[list[tuple[int, str]]]:
    """Single-link grouping of all items across fragments.

    Returns groups of (variation index, surface form) in reading order:
    groups by their earliest member, members by (variation, item position).
    Single link means similarity >= threshold to ANY member joins the group,
    which is exactly the transitive closure of the pairwise match relation.
    """
    entries: list[tuple[int, str]] = []
    for var_idx, fragment in enumerate(fragments):
        for item in fragment.items:
            entries.append((var_idx, item))
    if not entries:
        return []

    parent = list(range(len(entries)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            if find(i) == find(j):
                continue
            if similarity(entries[i][1], entries[j][1]) >= fuzzy_threshold:
                parent[find(j)] = find(i)

    by_root: dict[int, list[int]] = {}
    for i in range(len(entries)):
        by_root.setdefault(find(i), []).append(i)
    return [
        [entries[i] for i in sorted(by_root[root])]
        for root in sorted(by_root, key=lambda r: min(by_root[r]))
    ]


def aggregate(fragments: Sequence[ParsedFragment], config: EnsembleConfig) -> AggregateResult:
    """Merge parsed variations into one voted fragment.

    A group survives when at least ceil(vote_threshold * n) distinct
    variations contain a member. Surviving items are ordered by descending
    votes, then by earliest first appearance; the canonical name is the
    earliest member's surface form, so output is traceable to a real model
    response. The boundary description (when present) is taken from the
    first variation. Warnings from all variations are carried through in
    variation order, which also makes the single-variation aggregate equal
    its input fragment exactly.
    """
    fragments = list(fragments)
    if len(fragments) != len(config.variations):
        raise SizeMismatchError(
            f"got {len(fragments)} fragments for {len(config.variations)} variations"
        )
    steps = {fragment.step for fragment in fragments}
    if len(steps) > 1:
        raise StepMismatchError(f"fragments span multiple steps: {sorted(s.value for s in steps)}")

    groups = fuzzy_group(fragments, config.fuzzy_threshold)

    # flattened (variation, item) position; items are unique within a
    # fragment (the parser dedups), so the pair is a usable key
    positions: dict[tuple[int, str], int] = {}
    for var_idx, fragment in enumerate(fragments):
        for item in fragment.items:
            positions[(var_idx, item)] = len(positions)

    kept: list[tuple[int, int, VotedItem]] = []
    for group in groups:
        supporters: list[tuple[int, str]] = []
        seen_vars: set[int] = set()
        for var_idx, surface in group:
            if var_idx not in seen_vars:
                seen_vars.add(var_idx)
                supporters.append((var_idx, surface))
        votes = len(supporters)
        if votes < config.cutoff:
            continue
        first_pos = min(positions[member] for member in group)
        kept.append((
            -votes,
            first_pos,
            VotedItem(canonical_name=group[0][1], votes=votes, supporters=tuple(supporters)),
        ))

    kept.sort(key=lambda entry: (entry[0], entry[1]))
    voted = tuple(item for _, _, item in kept)

    warnings = tuple(w for fragment in fragments for w in fragment.warnings)
    merged = ParsedFragment(
        step=fragments[0].step,
        description=fragments[0].description,
        items=tuple(item.canonical_name for item in voted),
        warnings=warnings,
    )
    return AggregateResult(fragment=merged, votes=voted)


def shot_permutations(shots: Sequence[T], limit: int = MAX_SHOT_PERMUTATIONS) -> list[tuple[T, ...]]:
    """Distinct shot orderings used to drive ensemble variations, capped at limit."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if not shots:
        return [()]
    return [
        tuple(shots[i] for i in perm)
        for perm in itertools.islice(itertools.permutations(range(len(shots))), limit)
    ]
