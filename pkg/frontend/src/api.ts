/**
 * Typed client for the fairtoss session service.
 *
 * Mirrors the HTTP/JSON interface exactly: six endpoints, capability token
 * in the X-Captain-Token header, and flat {code, message, field?} error
 * bodies surfaced as ApiError.
 */

export type TurnName = "bat_first" | "bowl_first";
export type PhaseName = "created" | "tossed" | "proposed" | "complete";

export interface OptionBundle {
  turn: TurnName;
  bonus_delta: number;
}

export interface Toss {
  lucky: string;
  unlucky: string;
  coin_draw: 0 | 1;
  seed_trace: string;
}

export interface Proposal {
  b: number;
  b_raw: number;
  advantageous_turn: TurnName;
  option1: OptionBundle;
  option2: OptionBundle;
}

export interface Allocation {
  chooser: string;
  other: string;
  chosen: OptionBundle;
  complement: OptionBundle;
  bonus_recipient: string | null;
  bonus_runs: number;
}

export interface TranscriptEvent {
  type: "tossed" | "proposed" | "chosen";
  [key: string]: unknown;
}

export interface Session {
  id: string;
  teams: [string, string];
  phase: PhaseName;
  toss: Toss | null;
  proposal: Proposal | null;
  allocation: Allocation | null;
  events: TranscriptEvent[];
  valuation_defaults: { kind?: string; sigma?: number } | null;
  created_at: string;
  updated_at: string;
}

export interface WhatIfQuery {
  b: number;
  a_hat: number;
  kind?: string;
  sigma?: number;
}

export interface WhatIfResponse {
  candidate_b: number;
  option1_utility: number;
  option2_utility: number;
  indifference_bonus: number;
  advantageous_turn: TurnName;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly field?: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  let field: string | undefined;
  try {
    const body = (await response.json()) as { code?: string; message?: string; field?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
    field = body.field;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, code, message, field);
}

export class SessionClient {
  constructor(
    readonly baseUrl: string,
    private token: string | null = null,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setToken(token: string): void {
    this.token = token;
  }

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["X-Captain-Token"] = this.token;
    return headers;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: this.headers(body !== undefined),
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  async createSession(
    teams: [string, string],
    valuation?: { kind?: string; sigma?: number },
  ): Promise<{ session: Session; tokens: Record<string, string> }> {
    return this.request("POST", "/sessions", { teams, valuation });
  }

  async toss(sessionId: string, seed?: number): Promise<Session> {
    const body = seed === undefined ? {} : { seed };
    const out = await this.request<{ session: Session }>("POST", `/sessions/${sessionId}/toss`, body);
    return out.session;
  }

  async propose(sessionId: string, b: number, advantageousTurn: TurnName): Promise<Session> {
    const out = await this.request<{ session: Session }>("POST", `/sessions/${sessionId}/proposal`, {
      b,
      advantageous_turn: advantageousTurn,
    });
    return out.session;
  }

  async choose(sessionId: string, option: 1 | 2): Promise<Session> {
    const out = await this.request<{ session: Session }>("POST", `/sessions/${sessionId}/choice`, {
      option,
    });
    return out.session;
  }

  async getSession(sessionId: string): Promise<Session> {
    const out = await this.request<{ session: Session }>("GET", `/sessions/${sessionId}`);
    return out.session;
  }

  async whatIf(sessionId: string, query: WhatIfQuery): Promise<WhatIfResponse> {
    const params = new URLSearchParams({ b: String(query.b), a_hat: String(query.a_hat) });
    if (query.kind !== undefined) params.set("kind", query.kind);
    if (query.sigma !== undefined) params.set("sigma", String(query.sigma));
    return this.request("GET", `/sessions/${sessionId}/whatif?${params.toString()}`);
  }
}
