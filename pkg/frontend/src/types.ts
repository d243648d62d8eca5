// Wire types for the workbench API (all responses carry schema_version).

export interface RetrievedChunk {
  doc: string;
  chunk: number;
  score: number;
}

export interface TraceEntry {
  round: number;
  stage: string;
  query: string | null;
  retrieved: RetrievedChunk[];
  prompt_tokens: number;
  reply: string;
  error?: string;
  budget?: number;
}

export interface SessionView {
  schema_version: number;
  session_id: string;
  stage: string;
  round: number;
  k: number;
  transcript: [string, string][];
  trace: TraceEntry[];
  failure_reason: string | null;
  facts_needed: string[];
  facts_collected: string[];
}

export interface MessageReply {
  schema_version: number;
  reply: string;
  stage: string;
  round: number;
  trace: TraceEntry;
}

export interface OversizeError {
  schema_version: number;
  error: string;
  error_kind: string;
  prompt_tokens: number;
  budget: number;
  stage: string;
  round: number;
  failure_reason: string;
}

export interface VariableView {
  name: string;
  domain: string;
  shape: string;
  description: string;
}

export interface ConstraintView {
  name: string;
  kind: string;
  expression: string;
}

export interface FormulationView {
  variables: VariableView[];
  sense: string;
  objective: { name: string; expression: string };
  constraints: ConstraintView[];
  text: string;
}

export interface DiffView {
  missing_kinds: string[];
  extra_kinds: string[];
  variable_mismatches: string[];
  objective_match: boolean;
}

export interface FormulationResponse {
  schema_version: number;
  formulation: FormulationView;
  diff_vs_ground_truth: DiffView;
}

export interface SweepRowView {
  chunk_size: number;
  k: number;
  outcome: string;
  rounds: number;
}

export interface SweepResult {
  schema_version: number;
  corpus_seed: number;
  rows: SweepRowView[];
}

export interface ComparisonResult {
  schema_version: number;
  seeds: number[];
  arms: Record<string, { scores: Record<string, number>; median: number }>;
  ordering: Record<string, boolean>;
  diffs: Record<string, DiffView>;
}

export interface RunView {
  schema_version: number;
  run_id: string;
  kind: string;
  status: "pending" | "running" | "finished" | "error";
  result: SweepResult | ComparisonResult | null;
  error: string | null;
}
