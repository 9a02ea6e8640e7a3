/** Bootstrap: wires the API client, state, and DOM together. */

import { ApiClient, ApiError } from "./api.js";
import {
  ViewState,
  applyServerComment,
  clearBanner,
  commentById,
  flippedVerdict,
  initialState,
  keyCommand,
  loadEssay,
  markPending,
  recordProvisional,
  select,
  selectNext,
  setBlindMode,
  showBanner,
} from "./state.js";
import type { ActionRequest, Comment } from "./types.js";
import {
  ViewCallbacks,
  renderBanner,
  renderCards,
  renderEssayList,
  renderEssayPane,
  renderProgress,
} from "./view.js";

const reviewerId = localStorage.getItem("reviewer_id") ?? "ta-1";
const api = new ApiClient("", reviewerId);

let state: ViewState = initialState();
const completion = new Map<string, { reviewed: number; total: number }>();

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function redraw(): void {
  renderEssayPane(state, byId("essay-pane"), callbacks);
  renderCards(state, byId("cards"), callbacks);
  renderProgress(state, byId("progress-bar"), byId("progress-label"));
  renderBanner(state, byId("banner"));
  const blind = byId("blind-toggle") as HTMLInputElement;
  blind.checked = state.blindMode;
  if (state.essayId) {
    const reviewed = state.comments.filter((c) => c.effective.status !== "unreviewed").length;
    completion.set(state.essayId, { reviewed, total: state.comments.length });
  }
  void refreshEssayList();
}

async function refreshEssayList(): Promise<void> {
  try {
    const essays = await api.listEssays();
    renderEssayList(essays, completion, byId("essay-list"), (id) => void openEssay(id), state.essayId);
  } catch {
    // the banner already reports interactive failures; the list is best-effort
  }
}

async function openEssay(essayId: string): Promise<void> {
  try {
    const [detail, comments, regions] = await Promise.all([
      api.getEssay(essayId),
      api.getComments(essayId),
      api.getRegions(essayId),
    ]);
    state = loadEssay(state, essayId, detail.text, comments, regions);
  } catch (err) {
    state = showBanner(state, err instanceof ApiError ? err.message : String(err));
  }
  redraw();
}

async function post(comment: Comment, action: ActionRequest): Promise<void> {
  state = markPending(state, comment.id);
  redraw();
  try {
    await api.postAction(action);
    const fresh = await api.getComments(comment.essay_id);
    const updated = fresh.find((c) => c.id === comment.id);
    if (updated) state = applyServerComment(state, updated);
    state = clearBanner(state);
  } catch (err) {
    // non-blocking: the action is never silently dropped, the banner says why
    state = showBanner(
      state,
      `action failed: ${err instanceof ApiError ? err.message : String(err)}`,
    );
  }
  redraw();
}

const callbacks: ViewCallbacks = {
  onSelect(commentId) {
    state = select(state, commentId);
    redraw();
  },
  onProvisional(commentId, verdict) {
    state = recordProvisional(state, commentId, verdict);
    redraw();
  },
  onAcceptAi(comment) {
    void post(comment, { comment_id: comment.id, action: "accept_ai" });
  },
  onAcceptHistoric(comment) {
    void post(comment, { comment_id: comment.id, action: "accept_historic" });
  },
  onEdit(comment, text) {
    void post(comment, { comment_id: comment.id, action: "edit", final_text: text });
  },
  onFlip(comment) {
    void post(comment, {
      comment_id: comment.id,
      action: "flip_judgment",
      final_verdict: flippedVerdict(comment),
    });
  },
  onDismiss(comment) {
    void post(comment, { comment_id: comment.id, action: "dismiss" });
  },
  onToggleBlind(on) {
    state = setBlindMode(state, on);
    redraw();
  },
};

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLTextAreaElement || event.target instanceof HTMLInputElement) {
    return;
  }
  const command = keyCommand(event.key);
  if (!command) return;
  event.preventDefault();
  if (command.kind === "next") state = selectNext(state, 1);
  if (command.kind === "prev") state = selectNext(state, -1);
  if (command.kind === "accept" || command.kind === "flip") {
    const comment = state.selection ? commentById(state, state.selection) : undefined;
    if (comment) {
      if (command.kind === "accept") callbacks.onAcceptAi(comment);
      else callbacks.onFlip(comment);
      return;
    }
  }
  redraw();
});

byId("blind-toggle").addEventListener("change", (event) => {
  callbacks.onToggleBlind((event.target as HTMLInputElement).checked);
});

void refreshEssayList();
redraw();
