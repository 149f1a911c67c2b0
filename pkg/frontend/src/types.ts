/** Wire types mirroring the annotation service's JSON bodies. */

export interface TokenView {
  index: number;
  /** Surface string when revealed, null for hidden placeholders. */
  text: string | null;
  revealed: boolean;
  argument: boolean;
}

export interface EntityTypePair {
  type: string;
  subtype: string | null;
}

export interface EntityTypes {
  arg1: EntityTypePair;
  arg2: EntityTypePair;
}

export interface SessionView {
  session_id: string;
  annotator_id: string;
  done: boolean;
  progress: { done: number; total: number };
  sample_id?: string;
  tokens?: TokenView[];
  /** Per-token priority stages; used for consistency checks, never displayed. */
  stages?: string[];
  preselected?: string[];
  all_revealed?: boolean;
  entity_types?: EntityTypes | null;
}

export interface AnnotationRecord {
  sample_id: string;
  annotator_id: string;
  label: string;
  revealed_tokens: number[];
  semantic_class: string;
  preselected: string[];
  entity_types_revealed: boolean;
  started_at: string;
  decided_at: string;
}

export interface SubmitResponse {
  record: AnnotationRecord;
  view: SessionView;
}

export interface ServiceError {
  code: string;
  message: string;
}

export const REJECT = "REJECT";

/** Client-side view state: the latest server view plus local display flags. */
export interface ViewState {
  view: SessionView;
  selectedLabel: string | null;
  hint: string | null;
  glossaryOpen: boolean;
}
