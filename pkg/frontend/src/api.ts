/**
 * Thin client for the grading service. The fetch implementation is
 * injectable so tests can run without a browser; errors are normalized to
 * the API's error envelope message.
 */

import type {
  ActionRequest,
  Comment,
  EssayDetail,
  EssaySummary,
  HighlightRegion,
} from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    public code: string,
    public status: number,
    public field: string | null = null,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private reviewerId: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`, "unreachable", 0);
    }
    const body = await response.text();
    if (!response.ok) {
      try {
        const parsed = JSON.parse(body);
        const envelope = parsed?.error ?? {};
        throw new ApiError(
          envelope.message ?? `HTTP ${response.status}`,
          envelope.code ?? "http_error",
          response.status,
          envelope.field ?? null,
        );
      } catch (err) {
        if (err instanceof ApiError) throw err;
        throw new ApiError(`HTTP ${response.status}: ${body.slice(0, 200)}`, "http_error", response.status);
      }
    }
    return JSON.parse(body) as T;
  }

  listEssays(assignmentId?: string): Promise<EssaySummary[]> {
    const query = assignmentId ? `?assignment_id=${encodeURIComponent(assignmentId)}` : "";
    return this.request<{ essays: EssaySummary[] }>(`/v1/essays${query}`).then((r) => r.essays);
  }

  getEssay(essayId: string): Promise<EssayDetail> {
    return this.request<EssayDetail>(`/v1/essays/${encodeURIComponent(essayId)}`);
  }

  getComments(essayId: string, runId?: string): Promise<Comment[]> {
    const query = runId ? `?run_id=${encodeURIComponent(runId)}` : "";
    return this.request<{ comments: Comment[] }>(
      `/v1/essays/${encodeURIComponent(essayId)}/comments${query}`,
    ).then((r) => r.comments);
  }

  /** Merged highlight regions, straight from the server; the UI never does
   * its own text matching. */
  getRegions(essayId: string, runId?: string): Promise<HighlightRegion[]> {
    const query = runId ? `?run_id=${encodeURIComponent(runId)}` : "";
    return this.request<{ regions: HighlightRegion[] }>(
      `/v1/essays/${encodeURIComponent(essayId)}/regions${query}`,
    ).then((r) => r.regions);
  }

  postAction(action: ActionRequest): Promise<number> {
    return this.request<{ action_id: number }>("/v1/actions", {
      method: "POST",
      headers: {
        "Content-Type": "application/json",
        "X-Reviewer-Id": this.reviewerId,
      },
      body: JSON.stringify(action),
    }).then((r) => r.action_id);
  }

  countActions(commentId: string): Promise<number> {
    return this.request<{ actions: unknown[] }>(
      `/v1/comments/${encodeURIComponent(commentId)}/actions`,
    ).then((r) => r.actions.length);
  }
}
