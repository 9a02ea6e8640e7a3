/**
 * DOM rendering for the review workbench. Everything rendered here is a
 * projection of ViewState; highlight offsets come from the server's merged
 * regions, never from local text matching.
 */
import { anchoredComments, canShowAi, documentLevelComments, isReviewed, progress, } from "./state.js";
function el(tag, className, text) {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text !== undefined)
        node.textContent = text;
    return node;
}
export function renderEssayPane(state, container, callbacks) {
    container.textContent = "";
    const text = state.essayText;
    let cursor = 0;
    const ordered = [...state.regions].sort((a, b) => a.start - b.start);
    for (const region of ordered) {
        if (region.start > cursor) {
            container.appendChild(document.createTextNode(text.slice(cursor, region.start)));
        }
        container.appendChild(renderRegion(state, region, text, callbacks));
        cursor = region.end;
    }
    if (cursor < text.length) {
        container.appendChild(document.createTextNode(text.slice(cursor)));
    }
}
function renderRegion(state, region, text, callbacks) {
    const mark = el("mark", `region mq-${region.match_qualities[0]}`);
    mark.dataset.commentIds = region.comment_ids.join(" ");
    mark.textContent = text.slice(region.start, region.end);
    if (state.selection && region.comment_ids.includes(state.selection)) {
        mark.classList.add("focused");
    }
    mark.addEventListener("click", () => callbacks.onSelect(region.comment_ids[0]));
    return mark;
}
export function renderProgress(state, bar, label) {
    const p = progress(state);
    bar.style.width = `${Math.round(p.fraction * 100)}%`;
    label.textContent = `${p.reviewed}/${p.total} reviewed`;
}
export function renderBanner(state, banner) {
    banner.hidden = state.banner === null;
    banner.textContent = state.banner ?? "";
}
export function renderCards(state, container, callbacks) {
    container.textContent = "";
    for (const comment of anchoredComments(state)) {
        container.appendChild(renderCard(state, comment, callbacks, false));
    }
    const unlocalized = documentLevelComments(state);
    if (unlocalized.length) {
        const tray = el("section", "doc-tray");
        tray.appendChild(el("h3", undefined, "Document-level (could not be located in the essay - verify carefully)"));
        for (const comment of unlocalized) {
            tray.appendChild(renderCard(state, comment, callbacks, true));
        }
        container.appendChild(tray);
    }
}
function renderCard(state, comment, callbacks, documentLevel) {
    const card = el("article", "card");
    card.dataset.commentId = comment.id;
    if (comment.id === state.selection)
        card.classList.add("selected");
    if (documentLevel)
        card.classList.add("doc-level");
    card.addEventListener("click", () => callbacks.onSelect(comment.id));
    const head = el("header");
    head.appendChild(el("span", "rubric", comment.rubric_id));
    const badge = el("span", `badge mq-${comment.anchor.match_quality}`);
    badge.textContent =
        comment.anchor.match_quality +
            (comment.anchor.score !== null ? ` ${comment.anchor.score.toFixed(2)}` : "");
    head.appendChild(badge);
    head.appendChild(el("span", `badge status-${comment.effective.status}`, comment.effective.status));
    card.appendChild(head);
    const revealed = canShowAi(state, comment.id);
    if (!revealed) {
        const gate = el("div", "blind-gate");
        gate.appendChild(el("p", undefined, "Blind mode: record your own verdict to reveal the AI's."));
        const met = el("button", "provisional-met", "Looks met");
        met.addEventListener("click", (event) => {
            event.stopPropagation();
            callbacks.onProvisional(comment.id, "met");
        });
        const missed = el("button", "provisional-missed", "Looks missed");
        missed.addEventListener("click", (event) => {
            event.stopPropagation();
            callbacks.onProvisional(comment.id, "missed");
        });
        gate.append(met, missed);
        card.appendChild(gate);
        return card;
    }
    const body = el("div", "card-body");
    body.appendChild(el("div", `verdict ${comment.verdict}`, `AI judgment: ${comment.verdict}`));
    body.appendChild(el("p", "ai-feedback", comment.ai_feedback || "(no AI message in this mode)"));
    body.appendChild(el("p", "historic", `Historic: ${comment.historic_feedback ?? "—"}`));
    body.appendChild(el("p", "rationale", `Rationale: ${comment.rationale}`));
    if (isReviewed(comment)) {
        body.appendChild(el("p", "effective", `Current: [${comment.effective.verdict}] ${comment.effective.text}`));
    }
    card.appendChild(body);
    const actions = el("div", "actions");
    const acceptAi = el("button", "accept-ai", "Accept AI");
    acceptAi.addEventListener("click", (event) => {
        event.stopPropagation();
        callbacks.onAcceptAi(comment);
    });
    actions.appendChild(acceptAi);
    if (comment.historic_feedback) {
        const acceptHistoric = el("button", "accept-historic", "Accept historic");
        acceptHistoric.addEventListener("click", (event) => {
            event.stopPropagation();
            callbacks.onAcceptHistoric(comment);
        });
        actions.appendChild(acceptHistoric);
    }
    const flip = el("button", "flip", "Flip judgment");
    flip.addEventListener("click", (event) => {
        event.stopPropagation();
        callbacks.onFlip(comment);
    });
    const dismiss = el("button", "dismiss", "Dismiss");
    dismiss.addEventListener("click", (event) => {
        event.stopPropagation();
        callbacks.onDismiss(comment);
    });
    actions.append(flip, dismiss);
    card.appendChild(actions);
    // edit box prefilled with the AI text so reviewers can combine-and-tweak
    const editor = el("div", "editor");
    const textarea = el("textarea");
    textarea.value = comment.effective.status === "edited" ? comment.effective.text : comment.ai_feedback;
    const save = el("button", "save-edit", "Save edit");
    save.addEventListener("click", (event) => {
        event.stopPropagation();
        callbacks.onEdit(comment, textarea.value);
    });
    editor.append(textarea, save);
    card.appendChild(editor);
    return card;
}
export function renderEssayList(essays, completion, container, onOpen, currentId) {
    container.textContent = "";
    for (const essay of essays) {
        const row = el("li", essay.id === currentId ? "essay-row current" : "essay-row");
        const link = el("a", undefined, `${essay.id} (${essay.author_alias})`);
        link.href = "#";
        link.addEventListener("click", (event) => {
            event.preventDefault();
            onOpen(essay.id);
        });
        row.appendChild(link);
        const done = completion.get(essay.id);
        if (done) {
            row.appendChild(el("span", "completion", ` ${done.reviewed}/${done.total}`));
        }
        container.appendChild(row);
    }
}
