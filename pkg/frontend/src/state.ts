// Pure derivations over the session wire state. Everything the screens need
// to decide (which buttons are live, why a step is locked, what finalize must
// skip) is computed here from the server's session JSON, with no DOM access,
// so the rules are unit-testable in isolation.

import {
  SKIPPABLE_STEPS,
  STEP_ORDER,
  SessionView,
  StepName,
} from "./api.js";

export const STEP_LABELS: Record<StepName, string> = {
  boundary: "Equipment boundary",
  failure_locations: "Failure locations",
  mechanisms: "Failure mechanisms",
  influences: "Operational influences",
  tasks: "Maintenance tasks",
  job_plans: "Job plans",
};

export interface StepFlags {
  enabled: boolean;
  locked_reason: string | null;
  can_fetch_candidates: boolean;
  can_confirm_shots: boolean;
  can_generate: boolean;
  can_review: boolean;
  reviewed: boolean;
}

export function stepFlags(session: SessionView, step: StepName): StepFlags {
  const state = session.steps[step];
  const finalized = session.finalized_doc_id !== null;
  const locked = state.status === "locked";
  const reviewed = state.status === "reviewed";

  let lockedReason: string | null = null;
  if (locked) {
    const index = STEP_ORDER.indexOf(step);
    const blocker = STEP_ORDER.slice(0, index).find(
      (earlier) => session.steps[earlier].status !== "reviewed",
    );
    lockedReason = blocker
      ? `review ${STEP_LABELS[blocker]} first`
      : "previous steps are incomplete";
  } else if (finalized) {
    lockedReason = "session is finalized";
  }

  const open = !locked && !reviewed && !finalized;
  const hasCandidates = state.status === "candidates_shown" || state.status === "generated";
  return {
    enabled: !locked && !finalized,
    locked_reason: lockedReason,
    can_fetch_candidates: open,
    can_confirm_shots: open && hasCandidates,
    can_generate: open && hasCandidates && state.confirmed_shots !== null,
    can_review: !finalized && state.status === "generated",
    reviewed,
  };
}

/** First step that still needs review, or null once every step is reviewed. */
export function nextStep(session: SessionView): StepName | null {
  return STEP_ORDER.find((step) => session.steps[step].status !== "reviewed") ?? null;
}

/** Finalize needs the first two steps reviewed; the tail may be skipped. */
export function canFinalize(session: SessionView): boolean {
  if (session.finalized_doc_id !== null) {
    return false;
  }
  return (
    session.steps.boundary.status === "reviewed" &&
    session.steps.failure_locations.status === "reviewed"
  );
}

/** Skip list finalize must send: every skippable step not yet reviewed. */
export function finalizeSkip(session: SessionView): StepName[] {
  return SKIPPABLE_STEPS.filter((step) => session.steps[step].status !== "reviewed");
}

/** Human summary of overall progress for the header line. */
export function progressSummary(session: SessionView): string {
  if (session.finalized_doc_id !== null) {
    return `finalized as ${session.finalized_doc_id}`;
  }
  const reviewed = STEP_ORDER.filter((step) => session.steps[step].status === "reviewed").length;
  return `${reviewed} of ${STEP_ORDER.length} steps reviewed`;
}
