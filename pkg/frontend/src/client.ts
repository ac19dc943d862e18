/**
 * Thin client for the read-only recommendation service.
 *
 * Only one request is considered live at a time: each call bumps a
 * sequence number, and a response arriving after a newer request has
 * started is reported as stale and must be ignored by the caller.
 */

export interface RecommendRequest {
  left: string;
  right: string;
  k: number;
}

export interface RecommendedQuote {
  quote_id: number;
  quote_text: string;
  score: number;
  rank: number;
}

export interface RecommendResponse {
  results: RecommendedQuote[];
  model_fingerprint: string;
  latency_ms: number;
}

export interface HealthResponse {
  status: string;
  catalog_size: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceUnreachableError extends Error {
  constructor(cause: unknown) {
    super(`recommendation service unreachable: ${cause}`);
    this.name = "ServiceUnreachableError";
  }
}

export type RecommendOutcome =
  | { kind: "ok"; response: RecommendResponse }
  | { kind: "stale" }
  | { kind: "error"; status: number; detail: string };

export class RecommendClient {
  private seq = 0;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  async health(): Promise<HealthResponse> {
    const res = await this.call("/api/health", undefined);
    return (await res.json()) as HealthResponse;
  }

  async recommend(request: RecommendRequest): Promise<RecommendOutcome> {
    const mySeq = ++this.seq;
    const res = await this.call("/api/recommend", request);
    if (mySeq !== this.seq) {
      return { kind: "stale" };
    }
    if (!res.ok) {
      const detail = await res
        .json()
        .then((body) => String((body as { detail?: string }).detail ?? res.statusText))
        .catch(() => res.statusText);
      return { kind: "error", status: res.status, detail };
    }
    return { kind: "ok", response: (await res.json()) as RecommendResponse };
  }

  private async call(path: string, body: object | undefined): Promise<Response> {
    try {
      return await this.fetchImpl(this.baseUrl + path, body === undefined
        ? undefined
        : {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
          });
    } catch (cause) {
      throw new ServiceUnreachableError(cause);
    }
  }
}
