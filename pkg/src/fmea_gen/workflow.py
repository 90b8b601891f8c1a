"""Supervised generation sessions: one equipment description walked through
the six document steps, each gated on explicit user review.

State is event-sourced. Every operation validates against in-memory state,
computes its effects, appends one JSON event line to sessions/<id>.jsonl, and
then applies that same event through the replay path. Replaying a log from
disk therefore reconstructs byte-identical session JSON by construction.
Steps unlock strictly in document order; reviewing a step unlocks the next.
"""

from __future__ import annotations

import copy
import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Sequence

from . import llm as llm_mod
from .embedding import EmbeddingProvider, HashEmbedder, rank_candidates
from .ensemble import (
    DEFAULT_FUZZY_THRESHOLD,
    DEFAULT_VOTE_THRESHOLD,
    EnsembleConfig,
    aggregate,
    shot_permutations,
)
from .errors import (
    EmptyInputError,
    FmeaError,
    GenerationFailedError,
    InvalidDocumentError,
    NotFoundError,
    ShotsNotConfirmedError,
    StepLockedError,
    StepNotGeneratedError,
    UnknownExampleError,
)
from .llm import ProviderConfig
from .model import (
    STEP_ORDER,
    DegradationInfluence,
    DegradationMechanism,
    EquipmentBoundary,
    FailureLocation,
    FmeaDocument,
    JobPlan,
    PreventativeTask,
    StepKind,
    require_valid,
)
from .parsing import parse
from .prompting import (
    PromptMode,
    build_prompt,
    decode_job_plan_item,
    format_items_block,
    make_shot,
)
from .store import CorpusStore
from .textutil import normalize_name

# the first two steps must always be walked; the rest may be skipped at finalize
SKIPPABLE_STEPS = (StepKind.MECHANISMS, StepKind.INFLUENCES, StepKind.TASKS, StepKind.JOB_PLANS)

_GENERATE_FANOUT = 4


class StepStatus(str, Enum):
    LOCKED = "locked"
    READY = "ready"
    CANDIDATES_SHOWN = "candidates_shown"
    GENERATED = "generated"
    REVIEWED = "reviewed"


_STATUS_ORDER = {status: index for index, status in enumerate(StepStatus)}


def _at_least(status: StepStatus, floor: StepStatus) -> bool:
    return _STATUS_ORDER[status] >= _STATUS_ORDER[floor]


@dataclass
class StepState:
    status: StepStatus = StepStatus.LOCKED
    candidates: list[dict] = field(default_factory=list)
    confirmed_shots: list[str] | None = None
    generated: dict | None = None
    accepted: dict | None = None
    skipped: bool = False

    def to_json_dict(self) -> dict:
        return {
            "status": self.status.value,
            "candidates": copy.deepcopy(self.candidates),
            "confirmed_shots": None if self.confirmed_shots is None else list(self.confirmed_shots),
            "generated": copy.deepcopy(self.generated),
            "accepted": copy.deepcopy(self.accepted),
            "skipped": self.skipped,
        }


@dataclass
class Session:
    session_id: str
    short_description: str
    created_at: str
    steps: dict[StepKind, StepState]
    finalized_doc_id: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "short_description": self.short_description,
            "created_at": self.created_at,
            "finalized_doc_id": self.finalized_doc_id,
            "steps": {step.value: state.to_json_dict() for step, state in self.steps.items()},
        }


def _new_session(session_id: str, short_description: str, created_at: str) -> Session:
    steps = {step: StepState() for step in STEP_ORDER}
    steps[StepKind.BOUNDARY].status = StepStatus.READY
    return Session(
        session_id=session_id,
        short_description=short_description,
        created_at=created_at,
        steps=steps,
    )


def _apply_event(session: Session | None, event: dict) -> Session:
    """Pure state transition; both live operations and replay go through here."""
    kind = event["event"]
    if kind == "session_created":
        return _new_session(event["session_id"], event["short_description"], event["created_at"])
    if session is None:
        raise ValueError(f"event {kind!r} before session_created")

    if kind == "candidates_shown":
        state = session.steps[StepKind(event["step"])]
        state.candidates = event["candidates"]
        if not _at_least(state.status, StepStatus.CANDIDATES_SHOWN):
            state.status = StepStatus.CANDIDATES_SHOWN
    elif kind == "shots_confirmed":
        state = session.steps[StepKind(event["step"])]
        state.confirmed_shots = list(event["doc_ids"])
    elif kind == "generated":
        state = session.steps[StepKind(event["step"])]
        state.generated = event["result"]
        state.status = StepStatus.GENERATED
    elif kind == "generation_failed":
        pass  # audit record only; the step keeps its current state
    elif kind == "reviewed":
        step = StepKind(event["step"])
        state = session.steps[step]
        state.accepted = {"items": list(event["items"]), "description": event["description"]}
        state.status = StepStatus.REVIEWED
        index = STEP_ORDER.index(step)
        if index + 1 < len(STEP_ORDER):
            nxt = session.steps[STEP_ORDER[index + 1]]
            if nxt.status is StepStatus.LOCKED:
                nxt.status = StepStatus.READY
    elif kind == "finalized":
        session.finalized_doc_id = event["doc_id"]
        for name in event["skipped"]:
            session.steps[StepKind(name)].skipped = True
    else:
        raise ValueError(f"unknown event kind {kind!r}")
    return session


def replay_events(events: Sequence[dict]) -> Session:
    session: Session | None = None
    for event in events:
        session = _apply_event(session, event)
    if session is None:
        raise ValueError("empty event log")
    return session


class WorkflowEngine:
    """Owns sessions, their event logs, and the generation plumbing.

    Requests for different sessions proceed independently; operations on one
    session are serialized by a per-session lock. Retrieval pools and manual
    shots are restricted to the training split of the configured seed.
    """

    def __init__(
        self,
        store: CorpusStore,
        sessions_dir: str | Path,
        providers: dict[str, ProviderConfig],
        embedder: EmbeddingProvider | None = None,
        split_seed: int = 7,
        default_k: int = 3,
        default_provider_ids: Sequence[str] | None = None,
        vote_threshold: float = DEFAULT_VOTE_THRESHOLD,
        fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD,
    ):
        if not providers:
            raise ValueError("at least one provider must be configured")
        self.store = store
        self.sessions_dir = Path(sessions_dir)
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.providers = dict(providers)
        self.embedder = embedder or HashEmbedder()
        self.split_seed = split_seed
        self.default_k = default_k
        self.default_provider_ids = list(default_provider_ids or [next(iter(self.providers))])
        for provider_id in self.default_provider_ids:
            if provider_id not in self.providers:
                raise ValueError(f"default provider {provider_id!r} is not configured")
        self.vote_threshold = vote_threshold
        self.fuzzy_threshold = fuzzy_threshold
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()
        self._train_ids: set[str] | None = None

    # --- session registry ---------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def _session(self, session_id: str) -> tuple[Session, threading.RLock]:
        with self._registry_lock:
            session = self._sessions.get(session_id)
            if session is None:
                path = self._log_path(session_id)
                if not path.exists():
                    raise NotFoundError(f"no session {session_id!r}")
                session = replay_events(self.read_events(session_id))
                self._sessions[session_id] = session
            lock = self._locks.setdefault(session_id, threading.RLock())
        return session, lock

    def read_events(self, session_id: str) -> list[dict]:
        path = self._log_path(session_id)
        if not path.exists():
            raise NotFoundError(f"no session {session_id!r}")
        lines = path.read_text(encoding="utf-8").splitlines()
        return [json.loads(line) for line in lines if line.strip()]

    def _append(self, session: Session | None, event: dict) -> Session:
        session_id = event["session_id"] if session is None else session.session_id
        with open(self._log_path(session_id), "a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, ensure_ascii=False) + "\n")
        return _apply_event(session, event)

    # --- step helpers ---------------------------------------------------------

    @staticmethod
    def _step(name: StepKind | str) -> StepKind:
        try:
            return StepKind.coerce(name)
        except ValueError:
            raise NotFoundError(f"unknown step {name!r}") from None

    def _train_pool(self) -> list:
        split = self.store.ensure_split(self.split_seed)
        self._train_ids = set(split.train_ids)
        return self.store.documents(split.train_ids)

    def _require_open(self, session: Session) -> None:
        if session.finalized_doc_id is not None:
            raise StepLockedError(
                f"session {session.session_id!r} is finalized; no further edits are allowed"
            )

    @staticmethod
    def _query_input(session: Session, step: StepKind) -> str:
        if step is StepKind.BOUNDARY:
            return session.short_description
        prev = STEP_ORDER[STEP_ORDER.index(step) - 1]
        accepted = session.steps[prev].accepted
        if accepted is None:
            raise StepLockedError(f"step {prev.value!r} has not been reviewed yet")
        return format_items_block(prev, list(accepted["items"]), accepted["description"])

    # --- operations ------------------------------------------------------------

    def create_session(self, short_description: str) -> Session:
        short_description = (short_description or "").strip()
        if not short_description:
            raise EmptyInputError("short_description must be non-empty")
        session_id = uuid.uuid4().hex
        event = {
            "event": "session_created",
            "session_id": session_id,
            "short_description": short_description,
            "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        with self._registry_lock:
            lock = self._locks.setdefault(session_id, threading.RLock())
        with lock:
            session = self._append(None, event)
            with self._registry_lock:
                self._sessions[session_id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        session, _ = self._session(session_id)
        return session

    def get_candidates(self, session_id: str, step: StepKind | str, k: int | None = None) -> list[dict]:
        step = self._step(step)
        k = self.default_k if k is None else k
        if k < 1:
            raise ValueError("k must be >= 1")
        session, lock = self._session(session_id)
        with lock:
            self._require_open(session)
            state = session.steps[step]
            if not _at_least(state.status, StepStatus.READY):
                raise StepLockedError(f"step {step.value!r} is locked; review the previous step first")
            # similar-equipment retrieval keys on the description for every
            # step; the upstream block only feeds the prompt, not the index
            pool = self._train_pool()
            vectors = {doc.doc_id: self.store.embedding_for(doc.doc_id, self.embedder) for doc in pool}
            ranked = rank_candidates(
                session.short_description, pool, k, self.embedder,
                doc_vector=lambda doc: vectors[doc.doc_id],
            )
            payload = [candidate.to_json_dict() for candidate in ranked]
            self._append(session, {
                "event": "candidates_shown",
                "session_id": session_id,
                "step": step.value,
                "k": k,
                "candidates": payload,
            })
            return copy.deepcopy(payload)

    def confirm_shots(self, session_id: str, step: StepKind | str, doc_ids: Sequence[str]) -> list[str]:
        step = self._step(step)
        session, lock = self._session(session_id)
        with lock:
            self._require_open(session)
            state = session.steps[step]
            if state.status is StepStatus.REVIEWED:
                raise StepLockedError(f"step {step.value!r} is already reviewed")
            if not _at_least(state.status, StepStatus.CANDIDATES_SHOWN):
                raise StepLockedError(f"step {step.value!r} has no candidates yet; fetch candidates first")
            if self._train_ids is None:
                self._train_pool()
            for doc_id in doc_ids:
                if doc_id not in (self._train_ids or set()):
                    raise UnknownExampleError(
                        f"doc {doc_id!r} is not in the training split and cannot be used as a shot"
                    )
            self._append(session, {
                "event": "shots_confirmed",
                "session_id": session_id,
                "step": step.value,
                "doc_ids": list(doc_ids),
            })
            return list(doc_ids)

    def generate(
        self,
        session_id: str,
        step: StepKind | str,
        provider_ids: Sequence[str] | None = None,
        vote_threshold: float | None = None,
        fuzzy_threshold: float | None = None,
    ) -> dict:
        step = self._step(step)
        session, lock = self._session(session_id)
        with lock:
            self._require_open(session)
            state = session.steps[step]
            if state.status is StepStatus.REVIEWED:
                raise StepLockedError(f"step {step.value!r} is already reviewed")
            if not _at_least(state.status, StepStatus.CANDIDATES_SHOWN):
                raise StepLockedError(f"step {step.value!r} is not ready to generate; fetch candidates first")
            if state.confirmed_shots is None:
                raise ShotsNotConfirmedError(
                    f"confirm a shot list for step {step.value!r} before generating (an empty list is allowed)"
                )
            provider_ids = list(provider_ids or self.default_provider_ids)
            for provider_id in provider_ids:
                if provider_id not in self.providers:
                    raise NotFoundError(f"unknown provider {provider_id!r}")

            query = self._query_input(session, step)
            shot_docs = [self.store.get(doc_id) for doc_id in state.confirmed_shots]
            shots = [make_shot(doc, step) for doc in shot_docs]
            mode = PromptMode.ZERO_SHOT if not shots else PromptMode.DFSP
            perms = shot_permutations(shots)

            jobs = []
            for provider_id in provider_ids:
                for perm_index, perm in enumerate(perms):
                    prompt = build_prompt(step, mode, query, list(perm))
                    jobs.append((provider_id, perm_index, perm, prompt))

            def run_job(job):
                provider_id, perm_index, perm, prompt = job
                meta = {
                    "provider": provider_id,
                    "shot_order": [shot.doc_id for shot in perm],
                    "prompt_hash": llm_mod.prompt_hash(prompt),
                    "error": None,
                }
                try:
                    response = llm_mod.complete(prompt, self.providers[provider_id])
                    fragment = parse(response.text, step)
                except FmeaError as exc:
                    meta["error"] = exc.code
                    meta["message"] = str(exc)
                    return meta, None
                return meta, fragment

            with ThreadPoolExecutor(max_workers=min(_GENERATE_FANOUT, len(jobs))) as pool:
                outcomes = list(pool.map(run_job, jobs))

            metas = [meta for meta, _ in outcomes]
            successes = [
                ((job[0], job[1]), fragment)
                for job, (meta, fragment) in zip(jobs, outcomes)
                if fragment is not None
            ]
            if not successes:
                self._append(session, {
                    "event": "generation_failed",
                    "session_id": session_id,
                    "step": step.value,
                    "variations": metas,
                })
                raise GenerationFailedError(
                    f"no variation produced a parseable {step.value} block",
                    detail={"variations": metas},
                )

            config = EnsembleConfig(
                variations=tuple(label for label, _ in successes),
                vote_threshold=self.vote_threshold if vote_threshold is None else vote_threshold,
                fuzzy_threshold=self.fuzzy_threshold if fuzzy_threshold is None else fuzzy_threshold,
            )
            result = aggregate([fragment for _, fragment in successes], config).to_json_dict()
            result["variations"] = metas
            self._append(session, {
                "event": "generated",
                "session_id": session_id,
                "step": step.value,
                "result": result,
            })
            return copy.deepcopy(result)

    def review(
        self,
        session_id: str,
        step: StepKind | str,
        items: Sequence[str],
        description: str | None = None,
    ) -> Session:
        step = self._step(step)
        session, lock = self._session(session_id)
        with lock:
            self._require_open(session)
            state = session.steps[step]
            if not _at_least(state.status, StepStatus.GENERATED):
                raise StepNotGeneratedError(f"step {step.value!r} has nothing to review; generate first")
            items = [str(item).strip() for item in items if str(item).strip()]
            if step is StepKind.BOUNDARY:
                accepted_description = (description or "").strip()
                if not accepted_description:
                    generated_description = (state.generated or {}).get("description")
                    accepted_description = (generated_description or "").strip() or session.short_description
            else:
                accepted_description = None
            self._append(session, {
                "event": "reviewed",
                "session_id": session_id,
                "step": step.value,
                "items": items,
                "description": accepted_description,
            })
            return session

    def finalize(self, session_id: str, skip: Sequence[str] | None = None) -> str:
        session, lock = self._session(session_id)
        with lock:
            if session.finalized_doc_id is not None:
                return session.finalized_doc_id
            skip_steps = {self._step(name) for name in (skip or [])}
            illegal = skip_steps - set(SKIPPABLE_STEPS)
            if illegal:
                names = ", ".join(sorted(step.value for step in illegal))
                raise StepNotGeneratedError(f"steps cannot be skipped: {names}")
            for step in STEP_ORDER:
                if step in skip_steps:
                    continue
                if session.steps[step].status is not StepStatus.REVIEWED:
                    raise StepNotGeneratedError(
                        f"step {step.value!r} is not reviewed; review it or include it in skip"
                    )
            doc = self._build_document(session, skip_steps)
            require_valid(doc)
            doc_id = self.store.ingest(doc)
            self._append(session, {
                "event": "finalized",
                "session_id": session_id,
                "doc_id": doc_id,
                "skipped": sorted(step.value for step in skip_steps),
            })
            return doc_id

    def _build_document(self, session: Session, skip_steps: set[StepKind]) -> FmeaDocument:
        def accepted_items(step: StepKind) -> list[str]:
            if step in skip_steps:
                return []
            accepted = session.steps[step].accepted
            return list(accepted["items"]) if accepted else []

        boundary_state = session.steps[StepKind.BOUNDARY].accepted or {}
        boundary = EquipmentBoundary(
            description=boundary_state.get("description") or session.short_description,
            components=tuple(accepted_items(StepKind.BOUNDARY)),
        )
        components_by_name = {normalize_name(c): c for c in boundary.components}

        locations = tuple(
            FailureLocation(
                id=f"fl-{index + 1}",
                name=name,
                component_ref=components_by_name.get(normalize_name(name)),
            )
            for index, name in enumerate(accepted_items(StepKind.FAILURE_LOCATIONS))
        )
        first_location = locations[0].id if locations else None

        mechanisms = tuple(
            DegradationMechanism(id=f"dm-{index + 1}", name=name, location_ref=first_location or "")
            for index, name in enumerate(accepted_items(StepKind.MECHANISMS))
        )
        first_mechanism = mechanisms[0].id if mechanisms else None

        influences = tuple(
            DegradationInfluence(id=f"di-{index + 1}", name=name, mechanism_ref=first_mechanism or "")
            for index, name in enumerate(accepted_items(StepKind.INFLUENCES))
        )

        tasks = tuple(
            PreventativeTask(id=f"pt-{index + 1}", description=text, location_ref=first_location or "")
            for index, text in enumerate(accepted_items(StepKind.TASKS))
        )
        tasks_by_name = {normalize_name(task.description): task.id for task in tasks}

        plans = []
        for index, item in enumerate(accepted_items(StepKind.JOB_PLANS)):
            try:
                name, task_names, schedule = decode_job_plan_item(item)
            except ValueError as exc:
                raise InvalidDocumentError(f"job plan item {item!r} is malformed: {exc}") from None
            refs = tuple(tasks_by_name.get(normalize_name(task_name), task_name) for task_name in task_names)
            plans.append(JobPlan(id=f"jp-{index + 1}", name=name, task_refs=refs, schedule=schedule))

        return FmeaDocument(
            doc_id=f"gen-{session.session_id}",
            equipment_name=session.short_description,
            short_description=session.short_description,
            boundary=boundary,
            locations=locations,
            mechanisms=mechanisms,
            influences=influences,
            tasks=tuple(tasks),
            job_plans=tuple(plans),
            provenance="generated",
        )
