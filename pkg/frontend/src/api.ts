/** Thin typed client over the hub API.
 *
 * The fetch implementation is injected so contract tests can run against
 * recorded payloads; the snapshot id of every response is surfaced so the
 * session can show a "data updated" banner when a publish happens
 * mid-session.
 */

import type {
  CooccurrencePayload,
  DecisionResponse,
  GrowthPayload,
  OverviewPayload,
  QueuePayload,
  SearchPayload,
  TrendingPayload,
} from "./types.js";
import type { QueryState } from "./search.js";
import { buildSearchParams } from "./search.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type DecideOutcome =
  | { kind: "ok"; body: DecisionResponse }
  | { kind: "conflict"; message: string };

export class HubApi {
  private snapshotListener: ((id: string) => void) | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  onSnapshot(listener: (id: string) => void): void {
    this.snapshotListener = listener;
  }

  private notifySnapshot(response: Response): void {
    const id = response.headers.get("X-Snapshot-Id");
    if (id && this.snapshotListener) {
      this.snapshotListener(id);
    }
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    this.notifySnapshot(response);
    if (!response.ok) {
      const body = await response.json().catch(() => null);
      throw new ApiError(
        response.status,
        body?.code ?? "http_error",
        body?.message ?? `HTTP ${response.status}`,
      );
    }
    return (await response.json()) as T;
  }

  search(query: QueryState): Promise<SearchPayload> {
    return this.getJson(`/api/search?${buildSearchParams(query).toString()}`);
  }

  reviewQueue(k: number): Promise<QueuePayload> {
    return this.getJson(`/api/review/queue?k=${k}`);
  }

  /** One POST per call; 409 is a first-class outcome, not an exception. */
  async decide(
    pmid: number,
    label: "accept" | "reject",
    curator: string,
  ): Promise<DecideOutcome> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/review/${pmid}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ label, curator }),
    });
    this.notifySnapshot(response);
    if (response.status === 409) {
      const body = await response.json().catch(() => null);
      return { kind: "conflict", message: body?.message ?? "already decided" };
    }
    if (!response.ok) {
      const body = await response.json().catch(() => null);
      throw new ApiError(
        response.status,
        body?.code ?? "http_error",
        body?.message ?? `HTTP ${response.status}`,
      );
    }
    return { kind: "ok", body: (await response.json()) as DecisionResponse };
  }

  overview(): Promise<OverviewPayload> {
    return this.getJson("/api/stats/overview");
  }

  growth(granularity: string = "month"): Promise<GrowthPayload> {
    return this.getJson(`/api/stats/growth?granularity=${granularity}`);
  }

  cooccurrence(): Promise<CooccurrencePayload> {
    return this.getJson("/api/stats/cooccurrence");
  }

  trending(): Promise<TrendingPayload> {
    return this.getJson("/api/stats/trending");
  }

  citeUrl(pmid: number, style: "text" | "ris"): string {
    return `${this.baseUrl}/api/doc/${pmid}/cite?style=${style}`;
  }

  docUrl(pmid: number): string {
    return `${this.baseUrl}/api/doc/${pmid}`;
  }
}
