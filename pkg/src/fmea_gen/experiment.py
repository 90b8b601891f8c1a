"""Experiment harness comparing zero-shot, random-shot, and DFSP generation.

One run walks a (provider, method, step) grid over the evaluation documents
of a stored split, drawing shots from the training split only. Per-document
scores are averaged arithmetically; unparseable responses score zero on every
metric and are tallied in a separate failure column so means stay honest.
Reports avoid wall-clock fields on purpose: a rerun with the same corpus,
config, and seed must be byte-identical.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .embedding import EmbeddingProvider, HashEmbedder, random_candidate, rank_candidates
from .errors import FmeaError
from .llm import ProviderConfig, complete
from .metrics import rouge1, set_metrics
from .model import FmeaDocument, StepKind
from .parsing import parse
from .prompting import PromptMode, build_prompt, make_shot, shot_input_text, step_example_items
from .store import CorpusSplit, CorpusStore
from .textutil import stable_seed

BOUNDARY_METRICS = ("rouge1_recall", "rouge1_precision", "rouge1_f1", "set_recall", "set_precision", "set_f1")
ITEM_METRICS = ("set_recall", "set_precision", "set_f1")

DEFAULT_K_SHOTS = 3
_DOC_FANOUT = 4


def metric_names(step: StepKind) -> tuple[str, ...]:
    return BOUNDARY_METRICS if step is StepKind.BOUNDARY else ITEM_METRICS


@dataclass(frozen=True)
class DocumentResult:
    doc_id: str
    metrics: dict[str, float]
    failure: str | None = None

    def to_json_dict(self) -> dict:
        return {"doc_id": self.doc_id, "metrics": self.metrics, "failure": self.failure}


@dataclass(frozen=True)
class ExperimentRow:
    provider_id: str
    method: str
    step: str
    results: tuple[DocumentResult, ...]

    @property
    def n(self) -> int:
        return len(self.results)

    @property
    def failures(self) -> int:
        return sum(1 for r in self.results if r.failure is not None)

    def mean(self, metric: str) -> float:
        if not self.results:
            return 0.0
        return sum(r.metrics[metric] for r in self.results) / len(self.results)

    @property
    def means(self) -> dict[str, float]:
        names = metric_names(StepKind(self.step))
        return {name: self.mean(name) for name in names}

    def to_json_dict(self) -> dict:
        return {
            "provider": self.provider_id,
            "method": self.method,
            "step": self.step,
            "means": self.means,
            "n": self.n,
            "failures": self.failures,
            "documents": [r.to_json_dict() for r in self.results],
        }


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[ExperimentRow, ...]
    split_seed: int
    split_part: str
    seed: int
    config: dict

    def row(self, provider_id: str, method: str, step: str) -> ExperimentRow:
        for row in self.rows:
            if (row.provider_id, row.method, row.step) == (provider_id, method, step):
                return row
        raise KeyError(f"no row for ({provider_id!r}, {method!r}, {step!r})")

    def to_json_dict(self) -> dict:
        return {
            "split": {"seed": self.split_seed, "part": self.split_part},
            "seed": self.seed,
            "config": self.config,
            "rows": [row.to_json_dict() for row in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        lines = ["provider,method,step,metric,mean,n,failures"]
        for row in self.rows:
            for metric, mean in row.means.items():
                lines.append(f"{row.provider_id},{row.method},{row.step},{metric},{mean:.6f},{row.n},{row.failures}")
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        """Fixed-width summary; the rouge1 column is the recall variant."""
        header = ("provider", "method", "step", "rouge1", "set_recall", "set_precision", "set_f1", "n", "failures")
        table = [header]
        for row in self.rows:
            means = row.means
            table.append((
                row.provider_id,
                row.method,
                row.step,
                f"{means['rouge1_recall']:.4f}" if "rouge1_recall" in means else "-",
                f"{means['set_recall']:.4f}",
                f"{means['set_precision']:.4f}",
                f"{means['set_f1']:.4f}",
                str(row.n),
                str(row.failures),
            ))
        widths = [max(len(line[col]) for line in table) for col in range(len(header))]
        rendered = []
        for line in table:
            rendered.append("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
        return "\n".join(rendered) + "\n"


def _zero_metrics(step: StepKind) -> dict[str, float]:
    return {name: 0.0 for name in metric_names(step)}


def _evaluate_document(
    doc: FmeaDocument,
    step: StepKind,
    method: PromptMode,
    provider: ProviderConfig,
    train_docs: Sequence[FmeaDocument],
    train_by_id: dict[str, FmeaDocument],
    embedder: EmbeddingProvider,
    doc_vector,
    k_shots: int,
    run_seed: int,
    match_threshold: float,
) -> DocumentResult:
    try:
        query_input = shot_input_text(doc, step)
        if method is PromptMode.ZERO_SHOT:
            shots = []
        elif method is PromptMode.RANDOM_SHOT:
            pick = random_candidate(train_docs, stable_seed(run_seed, doc.doc_id))
            shots = [make_shot(train_by_id[pick.doc_id], step)]
        else:
            # retrieval always keys on equipment descriptions, the space the
            # corpus index stores; the step block is only the prompt input
            ranked = rank_candidates(doc.short_description, train_docs, k_shots, embedder, doc_vector=doc_vector)
            shots = [make_shot(train_by_id[c.doc_id], step) for c in ranked]
        prompt = build_prompt(step, method, query_input, shots)
        response = complete(prompt, provider)
        fragment = parse(response.text, step)

        metrics: dict[str, float] = {}
        if step is StepKind.BOUNDARY:
            score = rouge1(fragment.description or "", doc.boundary.description)
            metrics["rouge1_recall"] = score.recall
            metrics["rouge1_precision"] = score.precision
            metrics["rouge1_f1"] = score.f1
        gold_items = step_example_items(doc, step)
        sm = set_metrics(fragment.items, gold_items, match_threshold)
        metrics["set_recall"] = sm.recall
        metrics["set_precision"] = sm.precision
        metrics["set_f1"] = sm.f1
        return DocumentResult(doc_id=doc.doc_id, metrics=metrics)
    except FmeaError as exc:
        return DocumentResult(doc_id=doc.doc_id, metrics=_zero_metrics(step), failure=exc.code)


def run_experiment(
    store: CorpusStore,
    split: CorpusSplit,
    steps: Sequence[StepKind | str],
    methods: Sequence[PromptMode | str],
    providers: Sequence[ProviderConfig],
    k_shots: int = DEFAULT_K_SHOTS,
    seed: int = 0,
    embedder: EmbeddingProvider | None = None,
    split_part: str = "test",
    match_threshold: float = 1.0,
) -> ExperimentReport:
    """Score every (provider, method, step) cell over the split's evaluation docs.

    Shots come from the training split only. Random-shot picks are seeded per
    document with stable_seed(seed, doc_id), so a rerun reproduces them while
    different documents still draw different shots. Per-document work fans out
    over a small thread pool; assembly order is the document order, not
    completion order.
    """
    steps = [StepKind.coerce(s) for s in steps]
    methods = [PromptMode.coerce(m) for m in methods]
    if not steps or not methods or not providers:
        raise ValueError("steps, methods, and providers must all be non-empty")
    embedder = embedder or HashEmbedder()

    train_docs = store.documents(split.train_ids)
    eval_docs = store.documents(split.part(split_part))
    train_by_id = {doc.doc_id: doc for doc in train_docs}

    # warm the embedding cache once; retrieval then reuses stored vectors
    vectors = {doc.doc_id: store.embedding_for(doc.doc_id, embedder) for doc in train_docs}
    doc_vector = lambda doc: vectors[doc.doc_id]

    rows: list[ExperimentRow] = []
    for provider in providers:
        for method in methods:
            for step in steps:
                with ThreadPoolExecutor(max_workers=_DOC_FANOUT) as pool:
                    results = list(
                        pool.map(
                            lambda doc: _evaluate_document(
                                doc, step, method, provider, train_docs, train_by_id,
                                embedder, doc_vector, k_shots, seed, match_threshold,
                            ),
                            eval_docs,
                        )
                    )
                rows.append(
                    ExperimentRow(
                        provider_id=provider.provider_id,
                        method=method.value,
                        step=step.value,
                        results=tuple(results),
                    )
                )

    config = {
        "providers": [{"provider_id": p.provider_id, "kind": p.kind} for p in providers],
        "methods": [m.value for m in methods],
        "steps": [s.value for s in steps],
        "embedder": embedder.provider_id,
        "k_shots": k_shots,
        "match_threshold": match_threshold,
    }
    return ExperimentReport(
        rows=tuple(rows),
        split_seed=split.seed,
        split_part=split_part,
        seed=seed,
        config=config,
    )
