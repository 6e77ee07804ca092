// Typed client for the engine API. Every state change in the UI flows
// through submitReview; everything else is a read.

import type {
  Intermediates,
  JobStatus,
  QueueItem,
  ReviewActionPayload,
  ReviewResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

/** The surface the screens consume; ApiClient is the real implementation. */
export interface EngineApi {
  queue(): Promise<QueueItem[]>;
  job(jobId: string): Promise<JobStatus>;
  intermediates(jobId: string): Promise<Intermediates>;
  submitReview(jobId: string, actions: ReviewActionPayload[]): Promise<ReviewResponse>;
  latestReport(): Promise<Record<string, unknown>>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient implements EngineApi {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        ...init,
        headers: {
          Authorization: `Bearer ${this.token}`,
          ...(init?.body ? { "Content-Type": "application/json" } : {}),
          ...init?.headers,
        },
      });
    } catch (err) {
      throw new ApiError(0, `engine unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async queue(): Promise<QueueItem[]> {
    const body = await this.request<{ queue: QueueItem[] }>("/review/queue");
    return body.queue;
  }

  job(jobId: string): Promise<JobStatus> {
    return this.request<JobStatus>(`/jobs/${encodeURIComponent(jobId)}`);
  }

  intermediates(jobId: string): Promise<Intermediates> {
    return this.request<Intermediates>(`/jobs/${encodeURIComponent(jobId)}/intermediates`);
  }

  submitReview(jobId: string, actions: ReviewActionPayload[]): Promise<ReviewResponse> {
    return this.request<ReviewResponse>(`/review/${encodeURIComponent(jobId)}`, {
      method: "POST",
      body: JSON.stringify({ actions }),
    });
  }

  latestReport(): Promise<Record<string, unknown>> {
    return this.request<Record<string, unknown>>("/reports/latest");
  }
}
