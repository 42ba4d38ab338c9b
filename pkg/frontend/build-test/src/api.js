/** Typed client for the rating service HTTP API. */
export class HttpRatingApi {
    base;
    sessionId;
    fetchFn;
    constructor(base, sessionId, fetchFn = fetch) {
        this.base = base;
        this.sessionId = sessionId;
        this.fetchFn = fetchFn;
    }
    async fetchBatch(rater) {
        const url = `${this.base}/sessions/${encodeURIComponent(this.sessionId)}/batch?rater=${encodeURIComponent(rater)}`;
        const resp = await this.fetchFn(url);
        if (!resp.ok) {
            throw new Error(`batch fetch failed: HTTP ${resp.status}`);
        }
        const body = await resp.json();
        if (body.drained) {
            return "drained";
        }
        return body;
    }
    async submitBatch(batchId, rater, answers) {
        const url = `${this.base}/sessions/${encodeURIComponent(this.sessionId)}/batch/${encodeURIComponent(batchId)}`;
        const resp = await this.fetchFn(url, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ rater, answers }),
        });
        if (!resp.ok) {
            throw new Error(`submit failed: HTTP ${resp.status}`);
        }
        const body = await resp.json();
        if (body.status !== "accepted" && body.status !== "rejected") {
            throw new Error(`unexpected submit response: ${JSON.stringify(body)}`);
        }
        return body.status;
    }
}
