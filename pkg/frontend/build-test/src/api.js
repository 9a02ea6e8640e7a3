/**
 * Thin client for the grading service. The fetch implementation is
 * injectable so tests can run without a browser; errors are normalized to
 * the API's error envelope message.
 */
export class ApiError extends Error {
    code;
    status;
    field;
    constructor(message, code, status, field = null) {
        super(message);
        this.code = code;
        this.status = status;
        this.field = field;
    }
}
export class ApiClient {
    baseUrl;
    reviewerId;
    fetchImpl;
    constructor(baseUrl, reviewerId, fetchImpl = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.reviewerId = reviewerId;
        this.fetchImpl = fetchImpl;
    }
    async request(path, init) {
        let response;
        try {
            response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
        }
        catch (err) {
            throw new ApiError(`service unreachable: ${String(err)}`, "unreachable", 0);
        }
        const body = await response.text();
        if (!response.ok) {
            try {
                const parsed = JSON.parse(body);
                const envelope = parsed?.error ?? {};
                throw new ApiError(envelope.message ?? `HTTP ${response.status}`, envelope.code ?? "http_error", response.status, envelope.field ?? null);
            }
            catch (err) {
                if (err instanceof ApiError)
                    throw err;
                throw new ApiError(`HTTP ${response.status}: ${body.slice(0, 200)}`, "http_error", response.status);
            }
        }
        return JSON.parse(body);
    }
    listEssays(assignmentId) {
        const query = assignmentId ? `?assignment_id=${encodeURIComponent(assignmentId)}` : "";
        return this.request(`/v1/essays${query}`).then((r) => r.essays);
    }
    getEssay(essayId) {
        return this.request(`/v1/essays/${encodeURIComponent(essayId)}`);
    }
    getComments(essayId, runId) {
        const query = runId ? `?run_id=${encodeURIComponent(runId)}` : "";
        return this.request(`/v1/essays/${encodeURIComponent(essayId)}/comments${query}`).then((r) => r.comments);
    }
    /** Merged highlight regions, straight from the server; the UI never does
     * its own text matching. */
    getRegions(essayId, runId) {
        const query = runId ? `?run_id=${encodeURIComponent(runId)}` : "";
        return this.request(`/v1/essays/${encodeURIComponent(essayId)}/regions${query}`).then((r) => r.regions);
    }
    postAction(action) {
        return this.request("/v1/actions", {
            method: "POST",
            headers: {
                "Content-Type": "application/json",
                "X-Reviewer-Id": this.reviewerId,
            },
            body: JSON.stringify(action),
        }).then((r) => r.action_id);
    }
    countActions(commentId) {
        return this.request(`/v1/comments/${encodeURIComponent(commentId)}/actions`).then((r) => r.actions.length);
    }
}
