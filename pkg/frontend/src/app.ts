// Wiring between the static page and the workflow API. The page holds no
// state the server cannot reconstruct: every mutation round-trips through the
// API and the view is re-rendered from the session wire JSON, so a reload
// reproduces the exact same screen.

import {
  ApiClient,
  ApiError,
  Candidate,
  STEP_ORDER,
  SessionView,
  StepName,
  VariationMeta,
} from "./api.js";
import {
  STEP_LABELS,
  canFinalize,
  finalizeSkip,
  progressSummary,
  stepFlags,
} from "./state.js";

export interface AppHandle {
  /** Wait until every queued action (and any it queued) has settled. */
  flush(): Promise<void>;
  session(): SessionView | null;
}

const POLL_INTERVAL_MS = 1000;

function must<T>(value: T | null, what: string): T {
  if (value === null) {
    throw new Error(`missing element: ${what}`);
  }
  return value;
}

function describeError(err: ApiError): string {
  let text = `${err.code}: ${err.message}`;
  const detail = err.detail as { variations?: VariationMeta[] } | null;
  if (detail && Array.isArray(detail.variations)) {
    for (const variation of detail.variations) {
      const note = variation.message ? `: ${variation.message}` : "";
      text += `\n${variation.provider} [${variation.error ?? "ok"}]${note}`;
    }
  }
  return text;
}

export function initApp(doc: Document, api: ApiClient): AppHandle {
  const descriptionInput = must(doc.getElementById("description-input"), "description-input") as HTMLInputElement;
  const createButton = must(doc.getElementById("create-session"), "create-session") as HTMLButtonElement;
  const sessionMeta = must(doc.getElementById("session-meta"), "session-meta");
  const banner = must(doc.getElementById("banner"), "banner");
  const bannerMessage = must(doc.getElementById("banner-message"), "banner-message");
  const bannerDismiss = must(doc.getElementById("banner-dismiss"), "banner-dismiss");
  const stepsEl = must(doc.getElementById("steps"), "steps");
  const finalizePanel = must(doc.getElementById("finalize-panel"), "finalize-panel");
  const finalizeButton = must(doc.getElementById("finalize"), "finalize") as HTMLButtonElement;
  const finalizeResult = must(doc.getElementById("finalize-result"), "finalize-result");
  const documentView = must(doc.getElementById("document-view"), "document-view");

  let session: SessionView | null = null;
  let generating = false;
  let tail: Promise<void> = Promise.resolve();

  function enqueue(task: () => Promise<void>): void {
    tail = tail.then(async () => {
      try {
        await task();
      } catch (err) {
        showBanner(err instanceof ApiError ? describeError(err) : String(err));
      }
    });
  }

  async function flush(): Promise<void> {
    // a task may enqueue follow-up work; drain until the tail stops moving
    let current: Promise<void>;
    do {
      current = tail;
      await current;
    } while (current !== tail);
  }

  function showBanner(text: string): void {
    bannerMessage.textContent = text;
    banner.hidden = false;
  }

  function hideBanner(): void {
    banner.hidden = true;
    bannerMessage.textContent = "";
  }

  async function refresh(): Promise<void> {
    if (session) {
      session = await api.getSession(session.session_id);
    }
    render();
  }

  // ---- rendering -------------------------------------------------------

  function candidateRow(candidate: Candidate, ticked: boolean): HTMLLIElement {
    const li = doc.createElement("li");
    li.className = "card";
    const label = doc.createElement("label");
    const box = doc.createElement("input");
    box.type = "checkbox";
    box.className = "shot-box";
    box.dataset.docId = candidate.doc_id;
    box.checked = ticked;
    const name = candidate.preview.split(":")[0] || candidate.doc_id;
    const score = doc.createElement("span");
    score.className = "card-score";
    score.textContent =
      typeof candidate.score === "number" ? `score ${candidate.score.toFixed(3)}` : "unscored";
    label.append(box, ` ${name} `, score);
    const preview = doc.createElement("span");
    preview.className = "card-preview";
    preview.textContent = candidate.preview;
    li.append(label, preview);
    return li;
  }

  function itemRow(name: string, votes: number | null): HTMLLIElement {
    const li = doc.createElement("li");
    const label = doc.createElement("label");
    const box = doc.createElement("input");
    box.type = "checkbox";
    box.className = "item-box";
    box.dataset.name = name;
    box.checked = true;
    label.append(box, ` ${name}`);
    if (votes !== null) {
      const badge = doc.createElement("span");
      badge.className = "votes";
      badge.textContent = `${votes} vote${votes === 1 ? "" : "s"}`;
      label.append(" ", badge);
    }
    li.append(label);
    return li;
  }

  function actionButton(cls: string, text: string, enabled: boolean): HTMLButtonElement {
    const button = doc.createElement("button");
    button.type = "button";
    button.className = cls;
    button.textContent = text;
    button.disabled = !enabled;
    return button;
  }

  function renderStep(view: SessionView, step: StepName): HTMLElement {
    const state = view.steps[step];
    const flags = stepFlags(view, step);
    const section = doc.createElement("section");
    section.className = flags.enabled ? "step" : "step locked";
    section.dataset.step = step;

    const header = doc.createElement("div");
    header.className = "step-header";
    const title = doc.createElement("h2");
    title.textContent = STEP_LABELS[step];
    const status = doc.createElement("span");
    status.className = "step-status";
    status.textContent = state.skipped ? `${state.status} (skipped)` : state.status;
    header.append(title, status);
    section.append(header);

    if (flags.locked_reason) {
      const reason = doc.createElement("p");
      reason.className = "locked-reason";
      reason.textContent = flags.locked_reason;
      section.append(reason);
    }

    const controls = doc.createElement("div");
    controls.className = "controls";
    controls.append(
      actionButton("fetch-candidates", "Show examples", flags.can_fetch_candidates),
      actionButton("confirm-shots", "Use ticked examples", flags.can_confirm_shots),
      actionButton("generate", generating ? "Generating..." : "Generate", flags.can_generate && !generating),
    );
    section.append(controls);

    if (state.candidates.length > 0 && !flags.reviewed) {
      const list = doc.createElement("ul");
      list.className = "candidates";
      const confirmed = new Set(state.confirmed_shots ?? []);
      for (const candidate of state.candidates) {
        list.append(candidateRow(candidate, confirmed.has(candidate.doc_id)));
      }
      section.append(list);
    }

    if (state.generated && !flags.reviewed) {
      const generatedBox = doc.createElement("div");
      generatedBox.className = "generated";
      if (state.generated.description !== null) {
        const label = doc.createElement("label");
        label.append("Description ");
        const input = doc.createElement("input");
        input.type = "text";
        input.className = "description-input";
        input.value = state.generated.description;
        label.append(input);
        generatedBox.append(label);
      }
      const list = doc.createElement("ul");
      list.className = "generated-items";
      const voteByName = new Map(state.generated.votes.map((vote) => [vote.name, vote.votes]));
      for (const item of state.generated.items) {
        list.append(itemRow(item, voteByName.get(item) ?? 1));
      }
      generatedBox.append(list);
      const reviewControls = doc.createElement("div");
      reviewControls.className = "controls";
      const supplement = doc.createElement("input");
      supplement.type = "text";
      supplement.className = "supplement-input";
      supplement.placeholder = "Add a missing item";
      reviewControls.append(
        supplement,
        actionButton("add-item", "Add", flags.can_review),
        actionButton("review", "Accept & continue", flags.can_review),
      );
      generatedBox.append(reviewControls);
      section.append(generatedBox);
    }

    if (state.accepted) {
      const summary = doc.createElement("p");
      summary.className = "accepted-summary";
      const count = state.accepted.items.length;
      summary.textContent = `Accepted ${count} item${count === 1 ? "" : "s"}`;
      if (state.accepted.description) {
        summary.textContent += `: ${state.accepted.description}`;
      }
      section.append(summary);
      const list = doc.createElement("ul");
      list.className = "accepted-items";
      for (const item of state.accepted.items) {
        const li = doc.createElement("li");
        li.textContent = item;
        list.append(li);
      }
      section.append(list);
    }

    return section;
  }

  function render(): void {
    if (!session) {
      sessionMeta.textContent = "";
      stepsEl.textContent = "";
      finalizePanel.hidden = true;
      return;
    }
    sessionMeta.textContent = `session ${session.session_id}: ${progressSummary(session)}`;
    stepsEl.textContent = "";
    for (const step of STEP_ORDER) {
      stepsEl.append(renderStep(session, step));
    }
    finalizePanel.hidden = false;
    finalizeButton.disabled = !canFinalize(session);
    if (session.finalized_doc_id) {
      finalizeResult.textContent = `saved as ${session.finalized_doc_id}`;
    }
  }

  // ---- actions ---------------------------------------------------------

  function onCreateSession(): void {
    const description = descriptionInput.value;
    enqueue(async () => {
      hideBanner();
      documentView.hidden = true;
      documentView.textContent = "";
      finalizeResult.textContent = "";
      session = await api.createSession(description);
      render();
    });
  }

  function onFetchCandidates(step: StepName): void {
    enqueue(async () => {
      if (!session) return;
      hideBanner();
      await api.getCandidates(session.session_id, step);
      await refresh();
    });
  }

  function onConfirmShots(step: StepName, docIds: string[]): void {
    enqueue(async () => {
      if (!session) return;
      hideBanner();
      await api.confirmShots(session.session_id, step, docIds);
      await refresh();
    });
  }

  function onGenerate(step: StepName): void {
    enqueue(async () => {
      if (!session) return;
      hideBanner();
      const sessionId = session.session_id;
      generating = true;
      render();
      // generation is seconds-scale; poll so the screen stays current while
      // the POST is in flight
      const timer = setInterval(() => {
        if (!generating) return;
        api
          .getSession(sessionId)
          .then((view) => {
            if (generating) {
              session = view;
              render();
            }
          })
          .catch(() => undefined);
      }, POLL_INTERVAL_MS);
      let failure: unknown = null;
      try {
        await api.generate(sessionId, step);
      } catch (err) {
        failure = err;
      } finally {
        generating = false;
        clearInterval(timer);
      }
      if (failure !== null) {
        // the step is unchanged server-side; restore the buttons and let the
        // queue wrapper surface the error banner
        render();
        throw failure;
      }
      await refresh();
    });
  }

  function onReview(step: StepName, items: string[], description: string | null): void {
    enqueue(async () => {
      if (!session) return;
      hideBanner();
      session = await api.review(session.session_id, step, items, description);
      render();
    });
  }

  function onFinalize(): void {
    enqueue(async () => {
      if (!session) return;
      hideBanner();
      const skip = finalizeSkip(session);
      const { doc_id } = await api.finalize(session.session_id, skip);
      await refresh();
      finalizeResult.textContent = `saved as ${doc_id}`;
      const stored = await api.getDocument(doc_id);
      documentView.textContent = JSON.stringify(stored, null, 2);
      documentView.hidden = false;
    });
  }

  // ---- event wiring ----------------------------------------------------

  createButton.addEventListener("click", onCreateSession);
  bannerDismiss.addEventListener("click", hideBanner);
  finalizeButton.addEventListener("click", onFinalize);

  stepsEl.addEventListener("click", (event) => {
    const target = event.target as Element | null;
    const button = target?.closest("button");
    if (!button || button.disabled) return;
    const stepEl = button.closest<HTMLElement>(".step");
    if (!stepEl || !stepEl.dataset.step) return;
    const step = stepEl.dataset.step as StepName;

    if (button.classList.contains("fetch-candidates")) {
      onFetchCandidates(step);
    } else if (button.classList.contains("confirm-shots")) {
      // ticked ids go to the server in display order, top to bottom
      const ids = Array.from(stepEl.querySelectorAll<HTMLInputElement>("input.shot-box"))
        .filter((box) => box.checked)
        .map((box) => box.dataset.docId ?? "");
      onConfirmShots(step, ids);
    } else if (button.classList.contains("generate")) {
      onGenerate(step);
    } else if (button.classList.contains("add-item")) {
      const input = stepEl.querySelector<HTMLInputElement>("input.supplement-input");
      const list = stepEl.querySelector("ul.generated-items");
      const value = input?.value.trim() ?? "";
      if (input && list && value) {
        list.append(itemRow(value, null));
        input.value = "";
      }
    } else if (button.classList.contains("review")) {
      const items = Array.from(stepEl.querySelectorAll<HTMLInputElement>("input.item-box"))
        .filter((box) => box.checked)
        .map((box) => box.dataset.name ?? "");
      const description = stepEl.querySelector<HTMLInputElement>("input.description-input");
      onReview(step, items, description ? description.value : null);
    }
  });

  render();
  return { flush, session: () => session };
}

declare global {
  interface Window {
    __FMEA_NO_AUTOBOOT?: boolean;
    FMEA_API_BASE?: string;
    fmeaApp?: AppHandle;
  }
}

if (
  typeof window !== "undefined" &&
  !window.__FMEA_NO_AUTOBOOT &&
  typeof document !== "undefined" &&
  document.getElementById("create-session") !== null
) {
  window.fmeaApp = initApp(document, new ApiClient(window.FMEA_API_BASE ?? ""));
}
