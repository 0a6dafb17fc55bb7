// Shapes of the /v1 API bodies. The UI never recomputes any of these
// numbers; it only formats what the server sends.

export interface RulePattern {
  doc_part: string[];
  query_part: string[] | null;
}

export interface CounterfactualExample {
  context_id: string;
  doc_text: string;
  doc_span: [number, number];
  query_text: string | null;
  query_span: [number, number] | null;
  probs: [number, number];
}

export interface Rule {
  id: string;
  pattern: RulePattern;
  consequent: number;
  support: number;
  npmi: number;
  coverage: number;
  mean_cf_prob: number;
  n_counterfactuals: number;
  argmax_agreement: number;
  cf_probs: number[];
  examples: CounterfactualExample[];
}

export type SortKey = "coverage" | "npmi" | "mean_cf_prob";

export interface HealthResponse {
  status: string;
  rules: number;
  contexts: number;
  model_fingerprint: string | null;
}

export interface RuleListResponse {
  rules: Rule[];
  total: number;
  sort: SortKey;
}

export interface RuleDetailResponse {
  rule: Rule;
  annotations: Record<string, string>;
}

export interface ContextRow {
  id: string;
  source_instance_id: string;
  doc_text: string;
  doc_insertion_index: number;
  query_text: string | null;
  query_insertion_index: number | null;
  neutrality: number;
  probs: [number, number];
}

export interface ContextListResponse {
  contexts: ContextRow[];
  page: number;
  page_size: number;
  total: number;
}

export interface RawContext {
  text: string;
  insertion_index: number;
  query_text?: string | null;
  query_insertion_index?: number | null;
}

export interface WhatIfRequest {
  doc_pattern: string[];
  query_pattern?: string[] | null;
  context_id?: string | null;
  raw_context?: RawContext | null;
}

export interface WhatIfResponse {
  counterfactual: {
    doc_text: string;
    doc_span: [number, number];
    query_text: string | null;
    query_span: [number, number] | null;
  };
  probs: [number, number];
  predicted: number;
  context_neutrality: number | null;
}

export type Verdict = "wrong_reason" | "right_reason" | "cannot_tell";

export interface AnnotationResponse {
  annotation: {
    rule_id: string;
    annotator: string;
    verdict: Verdict;
    ts: number;
  };
}

export interface KappaResponse {
  kappa: number | null;
  missing: [string, string][];
  n_rules: number;
  n_annotators: number;
  reason?: string;
}
