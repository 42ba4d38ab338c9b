/** Contract tests against a live rating service.
 *
 * Spawns the Python service with a 20-item session and drives the full
 * rate / submit / reject / refetch cycle through the real HTTP client and
 * controller; assertions mirror the server's own accept/reject decisions.
 */
import assert from "node:assert/strict";
import { spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { after, before, test } from "node:test";
import { HttpRatingApi } from "../src/api.js";
import { BatchController } from "../src/state.js";
const SERVER_SNIPPET = `
import json, sys
from explainkit.server import make_server
httpd, service = make_server(port=0)
payload = json.load(open(sys.argv[1]))
sid = service.create_session(payload)
print(f"READY {httpd.server_address[1]} {sid}", flush=True)
httpd.serve_forever()
`;
function sessionPayload() {
    const items = Array.from({ length: 20 }, (_, i) => ({
        id: `item-${String(i).padStart(3, "0")}`,
        input: `sentiment: review number ${i} was something else`,
        label: i % 2 === 0 ? "positive" : "negative",
        explanation: i % 2 === 0
            ? { kind: "abstractive", text: `reason ${i}` }
            : { kind: "extractive", context: `review number ${i} was something else`, start: 0, end: 6 },
    }));
    const checks = Array.from({ length: 3 }, (_, i) => ({
        id: `check-${i}`,
        input: "sentiment: this product is clearly wonderful",
        label: "positive",
        explanation: { kind: "abstractive", text: "it says wonderful" },
        expected: true,
    }));
    return { session_id: "ui-contract", seed: 42, items, checks };
}
let server;
let base = "";
const sessionId = "ui-contract";
before(async () => {
    const dir = mkdtempSync(join(tmpdir(), "rating-ui-"));
    const itemsPath = join(dir, "items.json");
    writeFileSync(itemsPath, JSON.stringify(sessionPayload()));
    server = spawn("python3", ["-c", SERVER_SNIPPET, itemsPath], {
        stdio: ["ignore", "pipe", "inherit"],
    });
    base = await new Promise((resolve, reject) => {
        const timer = setTimeout(() => reject(new Error("server did not start")), 15000);
        server.stdout.on("data", (chunk) => {
            const match = chunk.toString().match(/READY (\d+)/);
            if (match) {
                clearTimeout(timer);
                resolve(`http://127.0.0.1:${match[1]}`);
            }
        });
        server.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
    });
});
after(() => {
    server.kill();
});
class CountingApi {
    inner;
    fetches = 0;
    submits = 0;
    constructor(inner) {
        this.inner = inner;
    }
    fetchBatch(rater) {
        this.fetches += 1;
        return this.inner.fetchBatch(rater);
    }
    submitBatch(batchId, rater, answers) {
        this.submits += 1;
        return this.inner.submitBatch(batchId, rater, answers);
    }
}
test("full rate-submit-reject-refetch cycle against the live service", async () => {
    const api = new CountingApi(new HttpRatingApi(base, sessionId));
    const controller = new BatchController(api, "rater-one");
    await controller.load();
    assert.equal(controller.phase, "rating");
    const firstBatch = controller.batch;
    assert.equal(firstBatch.cards.length, 10);
    for (const card of firstBatch.cards) {
        // The served cards never reveal which one is the attention check.
        assert.deepEqual(Object.keys(card).sort(), ["explanation", "input", "label"]);
    }
    // Submit is inert until all 10 cards are answered.
    for (let i = 0; i < 9; i++) {
        controller.answer(i, false);
    }
    assert.equal(controller.canSubmit, false);
    assert.equal(await controller.submit(), null);
    assert.equal(api.submits, 0);
    // All-no answers fail the attention check: server rejects, the banner
    // reflects it, and a fresh batch is fetched automatically.
    controller.answer(9, false);
    assert.equal(controller.canSubmit, true);
    const outcome = await controller.submit();
    assert.equal(outcome, "rejected");
    assert.equal(controller.banner?.outcome, "rejected");
    assert.equal(controller.phase, "rating");
    const secondBatch = controller.batch;
    assert.notEqual(secondBatch.batch_id, firstBatch.batch_id);
    // All-yes answers pass the check: accepted banner matches the server.
    secondBatch.cards.forEach((_, i) => controller.answer(i, true));
    assert.equal(await controller.submit(), "accepted");
    assert.equal(controller.banner?.outcome, "accepted");
    // Double-submit guard: the fresh batch is unanswered, so submit is inert.
    assert.equal(await controller.submit(), null);
});
test("a single rater drains the 20-item session after two accepted batches", async () => {
    const api = new CountingApi(new HttpRatingApi(base, sessionId));
    const controller = new BatchController(api, "rater-one");
    let guard = 0;
    if (controller.phase === "idle") {
        await controller.load();
    }
    while (controller.phase === "rating" && guard < 10) {
        guard += 1;
        controller.batch.cards.forEach((_, i) => controller.answer(i, true));
        await controller.submit();
    }
    // 20 items / 9 per batch: after two accepted batches only 2 unseen items
    // remain, which cannot fill a batch, so the rater is done.
    assert.equal(controller.phase, "drained");
    assert.equal(controller.batch, null);
});
test("network failure surfaces the retry state", async () => {
    const api = new HttpRatingApi("http://127.0.0.1:9", "nope");
    const controller = new BatchController(api, "rater-two");
    await controller.load();
    assert.equal(controller.phase, "error");
    assert.ok(controller.lastError);
});
