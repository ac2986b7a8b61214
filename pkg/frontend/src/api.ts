// Plain fetch client for the facetalk session API. The backend is the
// single source of truth for dialog semantics; this module only moves
// JSON.

export interface TagRef {
  facet: string;
  id: string;
}

export type ValueDoc =
  | { tag: TagRef }
  | { span: string }
  | { number: number | string };

export interface PredicateDoc {
  value: ValueDoc;
  turn: number;
  type?: "EQUALS" | "NOT_EQUALS";
}

export interface BoundDoc {
  value: number | string;
  inclusive: boolean;
}

export interface FacetStateDoc {
  positive: PredicateDoc[];
  negative: PredicateDoc[];
  range: { lower: BoundDoc | null; upper: BoundDoc | null } | null;
}

export interface StateDoc {
  category: string | null;
  facets: Record<string, FacetStateDoc>;
  ungrounded: PredicateDoc[];
  sort: { facet: string; direction: "ASCENDING" | "DESCENDING" } | null;
  last_touched_facet: string | null;
  turn_counter: number;
}

export interface ProductDoc {
  id: string;
  title: string;
  description: string;
  values: Record<string, number>;
}

export interface IntentDoc {
  operator: string;
  facet?: string;
  value?: ValueDoc;
  predicate_type?: string;
  inclusivity?: string;
  nudge_direction?: string;
  sort_direction?: string;
}

export interface TurnResponseDoc {
  intents: IntentDoc[];
  state_summary: string;
  products: ProductDoc[];
  prompt: string | null;
  events: string[];
  dialog_act: string;
}

export interface StateResponseDoc {
  state: StateDoc;
  summary: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = "error";
    let message = response.statusText;
    try {
      const body = await response.json();
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, code, message);
  }
  return (await response.json()) as T;
}

export class SessionApi {
  constructor(readonly baseUrl: string = "") {}

  async createSession(): Promise<string> {
    const body = await asJson<{ session_id: string }>(
      await fetch(`${this.baseUrl}/v1/sessions`, { method: "POST" }),
    );
    return body.session_id;
  }

  async sendUtterance(sessionId: string, text: string): Promise<TurnResponseDoc> {
    return asJson(
      await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/utterances`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
      }),
    );
  }

  async getState(sessionId: string): Promise<StateResponseDoc> {
    return asJson(await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/state`));
  }

  async deleteSession(sessionId: string): Promise<void> {
    const response = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}`, {
      method: "DELETE",
    });
    if (!response.ok && response.status !== 404) {
      throw new ApiError(response.status, "error", response.statusText);
    }
  }
}
