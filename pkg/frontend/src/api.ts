// Typed client for the workflow HTTP+JSON API. Every method maps 1:1 onto a
// server endpoint; non-2xx responses become ApiError with the server's
// machine-readable code so screens can branch without parsing prose.

export type StepName =
  | "boundary"
  | "failure_locations"
  | "mechanisms"
  | "influences"
  | "tasks"
  | "job_plans";

export const STEP_ORDER: readonly StepName[] = [
  "boundary",
  "failure_locations",
  "mechanisms",
  "influences",
  "tasks",
  "job_plans",
];

export const SKIPPABLE_STEPS: readonly StepName[] = [
  "mechanisms",
  "influences",
  "tasks",
  "job_plans",
];

export type StepStatus = "locked" | "ready" | "candidates_shown" | "generated" | "reviewed";

export interface Candidate {
  doc_id: string;
  score: number | "unscored";
  preview: string;
}

export interface ParseWarning {
  code: string;
  line_no: number | null;
}

export interface VotedItem {
  name: string;
  votes: number;
  supporters: [number, string][];
}

export interface VariationMeta {
  provider: string;
  shot_order: string[];
  prompt_hash: string;
  error: string | null;
  message?: string;
}

export interface GenerateResult {
  step: string;
  description: string | null;
  items: string[];
  warnings: ParseWarning[];
  votes: VotedItem[];
  variations: VariationMeta[];
}

export interface AcceptedState {
  items: string[];
  description: string | null;
}

export interface StepStateView {
  status: StepStatus;
  candidates: Candidate[];
  confirmed_shots: string[] | null;
  generated: GenerateResult | null;
  accepted: AcceptedState | null;
  skipped: boolean;
}

export interface SessionView {
  session_id: string;
  short_description: string;
  created_at: string;
  finalized_doc_id: string | null;
  steps: Record<StepName, StepStateView>;
}

export interface DocumentSummary {
  doc_id: string;
  equipment_name: string;
  short_description: string;
  provenance: string;
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly detail: unknown,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let code = "HTTP_ERROR";
      let message = `${method} ${path} failed with status ${response.status}`;
      let detail: unknown = null;
      try {
        const payload = (await response.json()) as { code?: string; message?: string; detail?: unknown };
        if (payload && typeof payload.code === "string") {
          code = payload.code;
          message = payload.message ?? message;
          detail = payload.detail ?? null;
        }
      } catch {
        // non-JSON error body; keep the fallback message
      }
      throw new ApiError(code, message, detail, response.status);
    }
    return (await response.json()) as T;
  }

  createSession(shortDescription: string): Promise<SessionView> {
    return this.request("POST", "/sessions", { short_description: shortDescription });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  getCandidates(
    sessionId: string,
    step: StepName,
    k?: number,
  ): Promise<{ step: string; candidates: Candidate[] }> {
    const query = k === undefined ? "" : `?k=${k}`;
    return this.request("GET", `/sessions/${sessionId}/steps/${step}/candidates${query}`);
  }

  confirmShots(
    sessionId: string,
    step: StepName,
    docIds: string[],
  ): Promise<{ step: string; confirmed_shots: string[] }> {
    return this.request("PUT", `/sessions/${sessionId}/steps/${step}/shots`, { doc_ids: docIds });
  }

  generate(
    sessionId: string,
    step: StepName,
    providers?: string[],
  ): Promise<{ step: string; result: GenerateResult }> {
    const body = providers === undefined ? {} : { providers };
    return this.request("POST", `/sessions/${sessionId}/steps/${step}/generate`, body);
  }

  review(
    sessionId: string,
    step: StepName,
    acceptedItems: string[],
    description?: string | null,
  ): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/steps/${step}/review`, {
      accepted_items: acceptedItems,
      description: description ?? null,
    });
  }

  finalize(sessionId: string, skip: string[]): Promise<{ doc_id: string }> {
    return this.request("POST", `/sessions/${sessionId}/finalize`, { skip });
  }

  listDocuments(): Promise<{ documents: DocumentSummary[] }> {
    return this.request("GET", "/documents");
  }

  getDocument(docId: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/documents/${docId}`);
  }
}
