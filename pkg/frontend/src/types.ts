/** Payload shapes of the grading service API (see docs/schemas.md). */

export type Verdict = "met" | "missed";
export type MatchQuality = "exact" | "normalized" | "fuzzy" | "unresolved";
export type ActionKind = "accept_ai" | "accept_historic" | "edit" | "flip_judgment" | "dismiss";
export type ReviewStatus =
  | "unreviewed"
  | "accepted_ai"
  | "accepted_historic"
  | "edited"
  | "flipped"
  | "dismissed";

export interface Anchor {
  start: number;
  end: number;
  quoted_text: string;
  match_quality: MatchQuality;
  score: number | null;
}

export interface EffectiveState {
  verdict: Verdict;
  text: string;
  status: ReviewStatus;
  reviewer_id: string | null;
}

export interface Comment {
  id: string;
  essay_id: string;
  rubric_id: string;
  anchor: Anchor;
  supporting_spans: Anchor[];
  verdict: Verdict;
  rationale: string;
  ai_feedback: string;
  historic_feedback: string | null;
  pipeline_mode: "full_ai" | "judgment_plus_historic";
  provenance: unknown[];
  effective: EffectiveState;
}

export interface HighlightRegion {
  start: number;
  end: number;
  comment_ids: string[];
  match_qualities: MatchQuality[];
}

export interface EssaySummary {
  id: string;
  assignment_id: string;
  author_alias: string;
}

export interface EssayDetail extends EssaySummary {
  text: string;
  sentences: { index: number; start: number; end: number; text: string }[];
}

export interface ActionRequest {
  comment_id: string;
  action: ActionKind;
  final_text?: string;
  final_verdict?: Verdict;
}
