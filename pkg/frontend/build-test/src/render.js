/** HTML-string renderers; pure functions so they are testable off-DOM. */
export function escapeHtml(text) {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;")
        .replace(/'/g, "&#39;");
}
/** Extracted spans render highlighted inside their context. */
export function renderExplanation(exp) {
    if (exp.kind === "extractive") {
        const before = escapeHtml(exp.context.slice(0, exp.start));
        const marked = escapeHtml(exp.context.slice(exp.start, exp.end));
        const after = escapeHtml(exp.context.slice(exp.end));
        return `<p class="explanation extractive">${before}<mark>${marked}</mark>${after}</p>`;
    }
    return `<p class="explanation abstractive">${escapeHtml(exp.text)}</p>`;
}
export function renderCard(card, index, verdict) {
    const yes = verdict === true ? " checked" : "";
    const no = verdict === false ? " checked" : "";
    return [
        `<section class="card" data-card="${index}">`,
        `<h3>Question ${index + 1} of 10</h3>`,
        `<p class="input-text">${escapeHtml(card.input)}</p>`,
        `<p class="label">Predicted label: <strong>${escapeHtml(card.label)}</strong></p>`,
        renderExplanation(card.explanation),
        `<fieldset><legend>Does the explanation support the label?</legend>`,
        `<label><input type="radio" name="card-${index}" value="yes"${yes}> Yes</label>`,
        `<label><input type="radio" name="card-${index}" value="no"${no}> No</label>`,
        `</fieldset>`,
        `</section>`,
    ].join("\n");
}
export function renderBanner(banner) {
    if (banner === null) {
        return "";
    }
    if (banner.outcome === "accepted") {
        return `<div class="banner accepted">Batch accepted. Thank you!</div>`;
    }
    return (`<div class="banner rejected">That batch could not be used ` +
        `(attention check failed or a question was left blank). ` +
        `Here is a fresh batch.</div>`);
}
export function renderBatch(cards, answers, banner, canSubmit) {
    const body = cards.map((c, i) => renderCard(c, i, answers[i] ?? null)).join("\n");
    const disabled = canSubmit ? "" : " disabled";
    return [
        renderBanner(banner),
        body,
        `<button id="submit"${disabled}>Submit all 10 answers</button>`,
    ].join("\n");
}
export function renderTerminal(phase, lastError, banner) {
    if (phase === "drained") {
        return renderBanner(banner) + `<div class="terminal">No more batches. You are done - thank you!</div>`;
    }
    if (phase === "error") {
        return (`<div class="terminal error">Could not reach the rating service` +
            (lastError ? `: ${escapeHtml(lastError)}` : "") +
            `.</div><button id="retry">Retry</button>`);
    }
    return `<div class="terminal">Loading...</div>`;
}
