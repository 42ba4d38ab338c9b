/** Batch rating state machine, independent of the DOM.
 *
 * One batch is in play at a time; submit stays inert until every card has
 * a verdict, a rejected submission surfaces a banner and immediately
 * fetches a fresh batch, and double submits are swallowed client-side
 * (the server rejects them too).
 */
export class BatchController {
    api;
    rater;
    phase = "idle";
    batch = null;
    answers = [];
    banner = null;
    lastError = null;
    constructor(api, rater) {
        this.api = api;
        this.rater = rater;
    }
    get canSubmit() {
        return (this.phase === "rating" &&
            this.answers.length > 0 &&
            this.answers.every((a) => a !== null));
    }
    async load() {
        this.phase = "loading";
        this.lastError = null;
        let result;
        try {
            result = await this.api.fetchBatch(this.rater);
        }
        catch (err) {
            this.phase = "error";
            this.lastError = err instanceof Error ? err.message : String(err);
            return;
        }
        if (result === "drained") {
            this.phase = "drained";
            this.batch = null;
            this.answers = [];
            return;
        }
        this.batch = result;
        this.answers = result.cards.map(() => null);
        this.phase = "rating";
    }
    answer(cardIndex, verdict) {
        if (this.phase !== "rating" || cardIndex < 0 || cardIndex >= this.answers.length) {
            return;
        }
        this.answers[cardIndex] = verdict;
    }
    /** Post the verdicts; inert unless every card is answered. */
    async submit() {
        if (!this.canSubmit || this.batch === null) {
            return null;
        }
        this.phase = "submitting";
        let outcome;
        try {
            outcome = await this.api.submitBatch(this.batch.batch_id, this.rater, this.answers);
        }
        catch (err) {
            this.phase = "error";
            this.lastError = err instanceof Error ? err.message : String(err);
            return null;
        }
        this.banner = { outcome, batchId: this.batch.batch_id };
        // Either way the rater moves on: a rejected batch is re-queued
        // server-side and a fresh one (often the same items) comes back.
        await this.load();
        return outcome;
    }
}
