import assert from "node:assert/strict";
import { test } from "node:test";
import { ApiClient, ApiError } from "../src/api.js";
function fakeFetch(status, body, captured = []) {
    return async (url, init) => {
        captured.push({ url, init });
        return new Response(JSON.stringify(body), {
            status,
            headers: { "Content-Type": "application/json" },
        });
    };
}
test("postAction sends the reviewer header and body", async () => {
    const captured = [];
    const client = new ApiClient("http://svc", "ta-9", fakeFetch(201, { action_id: 7 }, captured));
    const id = await client.postAction({ comment_id: "c1", action: "accept_ai" });
    assert.equal(id, 7);
    assert.equal(captured[0].url, "http://svc/v1/actions");
    const headers = captured[0].init?.headers;
    assert.equal(headers["X-Reviewer-Id"], "ta-9");
    assert.deepEqual(JSON.parse(String(captured[0].init?.body)), {
        comment_id: "c1",
        action: "accept_ai",
    });
});
test("error envelope is surfaced as ApiError", async () => {
    const client = new ApiClient("http://svc", "ta-1", fakeFetch(400, { error: { code: "invalid_action", message: "edit requires final_text", field: "action" } }));
    await assert.rejects(() => client.postAction({ comment_id: "c1", action: "edit" }), (err) => {
        assert.ok(err instanceof ApiError);
        assert.equal(err.code, "invalid_action");
        assert.equal(err.status, 400);
        assert.equal(err.field, "action");
        assert.match(err.message, /final_text/);
        return true;
    });
});
test("network failure becomes an unreachable ApiError", async () => {
    const client = new ApiClient("http://svc", "ta-1", async () => {
        throw new Error("connection refused");
    });
    await assert.rejects(() => client.listEssays(), (err) => err instanceof ApiError && err.code === "unreachable");
});
test("list and detail endpoints unwrap their payloads", async () => {
    const essays = [{ id: "e1", assignment_id: "a1", author_alias: "anon" }];
    let client = new ApiClient("", "ta", fakeFetch(200, { essays }));
    assert.deepEqual(await client.listEssays("a1"), essays);
    const regions = [{ start: 0, end: 5, comment_ids: ["c1"], match_qualities: ["exact"] }];
    client = new ApiClient("", "ta", fakeFetch(200, { regions }));
    assert.deepEqual(await client.getRegions("e1"), regions);
    client = new ApiClient("", "ta", fakeFetch(200, { actions: [1, 2, 3] }));
    assert.equal(await client.countActions("c1"), 3);
});
