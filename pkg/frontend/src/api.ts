// Typed client for the workbench HTTP API; fetch is injectable for tests.

import {
  CreateSessionResponse,
  DslErrorBody,
  FidJson,
  Legend,
  RoundResponse,
  SessionJson,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class DslRejectedError extends Error {
  constructor(public body: DslErrorBody) {
    super(body.parse_error ? `line ${body.parse_error.line}: ${body.parse_error.message}` : "layout fails validation");
  }
}

export class RoundInProgressError extends Error {
  constructor() {
    super("a round is already in progress for this session");
  }
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function errorFor(response: Response): Promise<Error> {
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // non-JSON error body; fall through to a generic ApiError
  }
  if (response.status === 400 && body && typeof body === "object" && "violations" in body) {
    return new DslRejectedError(body as DslErrorBody);
  }
  if (response.status === 409) return new RoundInProgressError();
  const detail =
    body && typeof body === "object" && "detail" in body ? String((body as { detail: unknown }).detail) : response.statusText;
  return new ApiError(response.status, detail);
}

export class WorkbenchClient {
  constructor(private baseUrl: string, private fetchImpl: FetchLike = fetch) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) throw await errorFor(response);
    return (await response.json()) as T;
  }

  createSession(input: {
    prompt: string;
    s0Dsl: string;
    setup?: string;
    backend?: string;
    temperature?: number;
  }): Promise<CreateSessionResponse> {
    return this.request<CreateSessionResponse>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        prompt: input.prompt,
        s0_dsl: input.s0Dsl,
        setup: input.setup ?? "multi",
        backend: input.backend ?? "heuristic",
        temperature: input.temperature ?? 0.0,
      }),
    });
  }

  getSession(token: string): Promise<SessionJson> {
    return this.request<SessionJson>(`/sessions/${token}`);
  }

  runRound(token: string): Promise<RoundResponse> {
    return this.request<RoundResponse>(`/sessions/${token}/rounds`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: "{}",
    });
  }

  submitHumanEdit(token: string, dsl: string): Promise<RoundResponse> {
    return this.request<RoundResponse>(`/sessions/${token}/human-edit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dsl }),
    });
  }

  getLegend(): Promise<Legend> {
    return this.request<Legend>("/legend");
  }

  fid(a: string, b: string): Promise<FidJson> {
    const params = new URLSearchParams({ a, b });
    return this.request<FidJson>(`/metrics/fid?${params}`);
  }

  renderUrl(pngUrl: string): string {
    return this.baseUrl + pngUrl;
  }
}
