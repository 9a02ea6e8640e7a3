/**
 * Review workbench state: a pure projection of server responses plus the
 * reviewer's unsent local inputs. Nothing in here touches the DOM or the
 * network, so every rule (blind-mode gating, progress, selection) is unit
 * testable on its own.
 */

import type { Comment, HighlightRegion, Verdict } from "./types.js";

export interface ViewState {
  essayId: string | null;
  essayText: string;
  comments: Comment[];
  regions: HighlightRegion[];
  /** AI outputs stay hidden per rubric until the reviewer records their own
   * provisional verdict (over-reliance guard). Default on. */
  blindMode: boolean;
  /** rubric_id -> the reviewer's own pre-AI verdict for the current essay */
  provisional: Map<string, Verdict>;
  /** focused comment id */
  selection: string | null;
  /** comment ids with an action posted but not yet acknowledged */
  pending: Set<string>;
  banner: string | null;
}

export function initialState(): ViewState {
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

export function loadEssay(
  state: ViewState,
  essayId: string,
  essayText: string,
  comments: Comment[],
  regions: HighlightRegion[],
): ViewState {
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

export function commentById(state: ViewState, commentId: string): Comment | undefined {
  return state.comments.find((c) => c.id === commentId);
}

/** Blind-mode invariant: AI verdict/feedback for a rubric are rendered only
 * once the reviewer has saved a provisional verdict for that rubric. */
export function canShowAi(state: ViewState, commentId: string): boolean {
  if (!state.blindMode) return true;
  const comment = commentById(state, commentId);
  if (!comment) return false;
  return state.provisional.has(comment.rubric_id);
}

export function recordProvisional(state: ViewState, commentId: string, verdict: Verdict): ViewState {
  const comment = commentById(state, commentId);
  if (!comment) return state;
  const provisional = new Map(state.provisional);
  provisional.set(comment.rubric_id, verdict);
  return { ...state, provisional };
}

export function setBlindMode(state: ViewState, on: boolean): ViewState {
  return { ...state, blindMode: on };
}

export function isReviewed(comment: Comment): boolean {
  return comment.effective.status !== "unreviewed";
}

export interface Progress {
  reviewed: number;
  total: number;
  fraction: number;
}

export function progress(state: ViewState): Progress {
  const total = state.comments.length;
  const reviewed = state.comments.filter(isReviewed).length;
  return { reviewed, total, fraction: total === 0 ? 1 : reviewed / total };
}

/** Comments whose anchor could not be localized; shown in the
 * document-level tray as a possible-hallucination signal. */
export function documentLevelComments(state: ViewState): Comment[] {
  return state.comments.filter((c) => c.anchor.match_quality === "unresolved");
}

export function anchoredComments(state: ViewState): Comment[] {
  return state.comments.filter((c) => c.anchor.match_quality !== "unresolved");
}

export function select(state: ViewState, commentId: string | null): ViewState {
  return { ...state, selection: commentId };
}

export function selectNext(state: ViewState, step: 1 | -1 = 1): ViewState {
  if (!state.comments.length) return state;
  const ids = state.comments.map((c) => c.id);
  const at = state.selection ? ids.indexOf(state.selection) : -1;
  const next = ((at + step) % ids.length + ids.length) % ids.length;
  return { ...state, selection: ids[next] };
}

export function markPending(state: ViewState, commentId: string): ViewState {
  const pending = new Set(state.pending);
  pending.add(commentId);
  return { ...state, pending };
}

/** Reconcile one comment with the server's authoritative view of it. */
export function applyServerComment(state: ViewState, updated: Comment): ViewState {
  const comments = state.comments.map((c) => (c.id === updated.id ? updated : c));
  const pending = new Set(state.pending);
  pending.delete(updated.id);
  return { ...state, comments, pending };
}

export function showBanner(state: ViewState, message: string): ViewState {
  return { ...state, banner: message };
}

export function clearBanner(state: ViewState): ViewState {
  return { ...state, banner: null };
}

/** The verdict a flip action should propose: the opposite of the AI's. */
export function flippedVerdict(comment: Comment): Verdict {
  return comment.verdict === "met" ? "missed" : "met";
}

export type KeyCommand =
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "accept" }
  | { kind: "flip" }
  | null;

/** Keyboard map: next/previous comment, accept, flip. */
export function keyCommand(key: string): KeyCommand {
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
