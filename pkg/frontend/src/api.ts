import type {
  ActionDoc,
  ActionsResponse,
  CreateSessionResponse,
  HistoryResponse,
  QueryForm,
  QueryResponse,
  StateResponse,
  StepResponse,
} from "./types";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function toErrorMessage(data: unknown, fallback: string): string {
  if (data && typeof data === "object" && "detail" in data) {
    const detail = (data as { detail?: unknown }).detail;
    if (typeof detail === "string" && detail.trim()) return detail;
  }
  return fallback;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/** Thin typed client over the session routes. */
export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data: unknown = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        response.status,
        toErrorMessage(data, `${method} ${path} -> HTTP ${response.status}`),
      );
    }
    return data as T;
  }

  createSession(body: {
    family?: string;
    n?: number;
    mode?: "exact" | "approx";
    seed?: number;
  }): Promise<CreateSessionResponse> {
    return this.request("POST", "/sessions", body);
  }

  getState(sessionId: string): Promise<StateResponse> {
    return this.request("GET", `/sessions/${sessionId}/state`);
  }

  getActions(sessionId: string): Promise<ActionsResponse> {
    return this.request("GET", `/sessions/${sessionId}/actions`);
  }

  postQuery(sessionId: string, form: QueryForm): Promise<QueryResponse> {
    return this.request("POST", `/sessions/${sessionId}/query`, {
      min_reward: form.minReward,
      restriction: form.restriction,
      min_prob: form.minProb,
    });
  }

  postStep(sessionId: string, action: ActionDoc): Promise<StepResponse> {
    return this.request("POST", `/sessions/${sessionId}/step`, { action });
  }

  getHistory(sessionId: string): Promise<HistoryResponse> {
    return this.request("GET", `/sessions/${sessionId}/history`);
  }
}
