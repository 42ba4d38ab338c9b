/** Typed client for the rating service HTTP API. */

export type Explanation =
  | { kind: "abstractive"; text: string }
  | { kind: "extractive"; context: string; start: number; end: number };

export interface Card {
  input: string;
  label: string;
  explanation: Explanation;
}

export interface BatchPayload {
  batch_id: string;
  cards: Card[];
}

export type Verdict = boolean | null;
export type SubmitOutcome = "accepted" | "rejected";

export interface RatingApi {
  fetchBatch(rater: string): Promise<BatchPayload | "drained">;
  submitBatch(batchId: string, rater: string, answers: Verdict[]): Promise<SubmitOutcome>;
}

export class HttpRatingApi implements RatingApi {
  constructor(
    private readonly base: string,
    private readonly sessionId: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  async fetchBatch(rater: string): Promise<BatchPayload | "drained"> {
    const url = `${this.base}/sessions/${encodeURIComponent(this.sessionId)}/batch?rater=${encodeURIComponent(rater)}`;
    const resp = await this.fetchFn(url);
    if (!resp.ok) {
      throw new Error(`batch fetch failed: HTTP ${resp.status}`);
    }
    const body = await resp.json();
    if (body.drained) {
      return "drained";
    }
    return body as BatchPayload;
  }

  async submitBatch(batchId: string, rater: string, answers: Verdict[]): Promise<SubmitOutcome> {
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
