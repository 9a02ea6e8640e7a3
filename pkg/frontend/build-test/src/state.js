/**
 * Review workbench state: a pure projection of server responses plus the
 * reviewer's unsent local inputs. Nothing in here touches the DOM or the
 * network, so every rule (blind-mode gating, progress, selection) is unit
 * testable on its own.
 */
export function initialState() {
    return {
        essayId: null,
        essayText: "",
        comments: [],
        regions: [],
        blindMode: true,
        provisional: new Map(),
        selection: null,
        pending: new Set(),
        banner: null,
    };
}
export function loadEssay(state, essayId, essayText, comments, regions) {
    return {
        ...state,
        essayId,
        essayText,
        comments,
        regions,
        provisional: new Map(),
        selection: comments.length ? comments[0].id : null,
        pending: new Set(),
        banner: null,
    };
}
export function commentById(state, commentId) {
    return state.comments.find((c) => c.id === commentId);
}
/** Blind-mode invariant: AI verdict/feedback for a rubric are rendered only
 * once the reviewer has saved a provisional verdict for that rubric. */
export function canShowAi(state, commentId) {
    if (!state.blindMode)
        return true;
    const comment = commentById(state, commentId);
    if (!comment)
        return false;
    return state.provisional.has(comment.rubric_id);
}
export function recordProvisional(state, commentId, verdict) {
    const comment = commentById(state, commentId);
    if (!comment)
        return state;
    const provisional = new Map(state.provisional);
    provisional.set(comment.rubric_id, verdict);
    return { ...state, provisional };
}
export function setBlindMode(state, on) {
    return { ...state, blindMode: on };
}
export function isReviewed(comment) {
    return comment.effective.status !== "unreviewed";
}
export function progress(state) {
    const total = state.comments.length;
    const reviewed = state.comments.filter(isReviewed).length;
    return { reviewed, total, fraction: total === 0 ? 1 : reviewed / total };
}
/** Comments whose anchor could not be localized; shown in the
 * document-level tray as a possible-hallucination signal. */
export function documentLevelComments(state) {
    return state.comments.filter((c) => c.anchor.match_quality === "unresolved");
}
export function anchoredComments(state) {
    return state.comments.filter((c) => c.anchor.match_quality !== "unresolved");
}
export function select(state, commentId) {
    return { ...state, selection: commentId };
}
export function selectNext(state, step = 1) {
    if (!state.comments.length)
        return state;
    const ids = state.comments.map((c) => c.id);
    const at = state.selection ? ids.indexOf(state.selection) : -1;
    const next = ((at + step) % ids.length + ids.length) % ids.length;
    return { ...state, selection: ids[next] };
}
export function markPending(state, commentId) {
    const pending = new Set(state.pending);
    pending.add(commentId);
    return { ...state, pending };
}
/** Reconcile one comment with the server's authoritative view of it. */
export function applyServerComment(state, updated) {
    const comments = state.comments.map((c) => (c.id === updated.id ? updated : c));
    const pending = new Set(state.pending);
    pending.delete(updated.id);
    return { ...state, comments, pending };
}
export function showBanner(state, message) {
    return { ...state, banner: message };
}
export function clearBanner(state) {
    return { ...state, banner: null };
}
/** The verdict a flip action should propose: the opposite of the AI's. */
export function flippedVerdict(comment) {
    return comment.verdict === "met" ? "missed" : "met";
}
/** Keyboard map: next/previous comment, accept, flip. */
export function keyCommand(key) {
    switch (key) {
        case "j":
        case "ArrowDown":
            return { kind: "next" };
        case "k":
        case "ArrowUp":
            return { kind: "prev" };
        case "a":
            return { kind: "accept" };
        case "f":
            return { kind: "flip" };
        default:
            return null;
    }
}
