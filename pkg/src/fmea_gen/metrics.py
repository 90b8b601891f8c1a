"""Text-overlap scores used by the evaluation harness.

rouge1 scores free text against a reference by clipped unigram counts.
set_metrics scores generated item lists against gold lists via one-to-one
fuzzy matching, so near-duplicate predictions cannot claim the same credit
twice.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .ensemble import similarity
from .errors import EmptyGoldError, EmptyReferenceError
from .textutil import tokenize


@dataclass(frozen=True)
class Rouge1Score:
    recall: float
    precision: float
    f1: float


@dataclass(frozen=True)
class SetMetrics:
    recall: float
    precision: float
    f1: float
    matched_pairs: tuple[tuple[str, str], ...]

    @property
    def matched(self) -> int:
        return len(self.matched_pairs)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge1(candidate: str, reference: str) -> Rouge1Score:
    """Unigram recall/precision/F1 with per-token-type clipping."""
    ref_tokens = tokenize(reference)
    if not ref_tokens:
        raise EmptyReferenceError("reference text has no tokens")
    cand_tokens = tokenize(candidate)
    if not cand_tokens:
        return Rouge1Score(0.0, 0.0, 0.0)
    ref_counts = Counter(ref_tokens)
    cand_counts = Counter(cand_tokens)
    overlap = sum(min(count, ref_counts[token]) for token, count in cand_counts.items())
    recall = overlap / len(ref_tokens)
    precision = overlap / len(cand_tokens)
    return Rouge1Score(recall=recall, precision=precision, f1=_f1(precision, recall))


def set_metrics(predicted: Sequence[str], gold: Sequence[str], threshold: float = 1.0) -> SetMetrics:
    """Greedy one-to-one matching of predicted items to gold items.

    Predictions are walked in order; each takes its most similar unmatched
    gold item (earliest index on ties) if the similarity clears the
    threshold. At threshold 1.0 matching is between exact token-set classes,
    where greedy consumption already attains the maximum matching.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold!r}")
    gold = list(gold)
    if not gold:
        raise EmptyGoldError("gold item list is empty")
    predicted = list(predicted)

    taken = [False] * len(gold)
    pairs: list[tuple[str, str]] = []
    for item in predicted:
        best_idx = -1
        best_score = 0.0
        for idx, gold_item in enumerate(gold):
            if taken[idx]:
                continue
            score = similarity(item, gold_item)
            if score >= threshold and score > best_score:
                best_idx, best_score = idx, score
        if best_idx >= 0:
            taken[best_idx] = True
            pairs.append((item, gold[best_idx]))

    matched = len(pairs)
    recall = matched / len(gold)
    precision = matched / len(predicted) if predicted else 0.0
    return SetMetrics(recall=recall, precision=precision, f1=_f1(precision, recall), matched_pairs=tuple(pairs))
