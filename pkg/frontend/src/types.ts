/** Wire types of the four annotation endpoints. */

export type Label = "premise" | "non_premise";

/** Annotator-facing task; by protocol it never carries model provenance. */
export interface TaskView {
  task_id: string;
  claim: string;
  sentence: string;
}

export interface JudgmentSubmission {
  task_id: string;
  annotator_id: string;
  label: Label;
}

export interface ModelRow {
  premise: number;
  non_premise: number;
  unassigned: number;
  assigned: number;
  premise_pct: number;
  non_premise_pct: number;
}

export interface ProgressView {
  total_tasks: number;
  labels_total: number;
  per_annotator: Record<string, number>;
  n_annotators: number;
  complete: boolean;
  report: { models: Record<string, ModelRow>; overall: ModelRow & { assigned_pct: number } } | null;
}

export interface AgreementView {
  alpha: number;
  D_o: number;
  D_e: number;
  n_units_used: number;
  band: string;
}

export type SubmitOutcome = "created" | "conflict";
