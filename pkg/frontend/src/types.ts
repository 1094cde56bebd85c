// Wire types mirroring the session API. The UI renders these verbatim;
// no recommendation math is re-implemented client-side.

export interface AgreementScores {
  homogeneity: number;
  completeness: number;
  v_measure: number;
}

export interface ContingencyPayload {
  counts: number[][];
  expert_ids: number[];
  cluster_ids: number[];
}

export interface SplitMatrixPayload {
  values: number[][];
  axis_mode: string;
}

export interface MergeMatrixPayload {
  values: number[][];
  sim: number[][];
}

export interface RecommendationBody {
  type: "split" | "merge";
  confidence: number;
  expert_label?: number;
  candidates?: number[];
  per_candidate_confidence?: number[];
  s_dec?: number | null;
  pair?: [number, number];
  target_cluster?: number;
  sim_term?: number;
  linkage_term?: number;
}

export interface ExplanationRulePayload {
  target_label: number;
  conditions: { feature: string; op: string; value: number | number[] }[];
  precision: number;
  coverage: number;
}

export interface PendingRecommendation {
  id: string;
  kind: "split" | "merge";
  recommendation: RecommendationBody;
  explanations: ExplanationRulePayload[];
  render_text: string;
}

export interface DecisionPayload {
  recommendation_id: string;
  verdict: "accept" | "reject";
  note?: string | null;
}

export interface SessionView {
  id: string;
  iteration: number;
  iteration_token: string;
  converged: boolean;
  kb_version: number;
  params: Record<string, number | string>;
  axis_mode: string;
  n_rows: number;
  feature_names: string[];
  expert_names: string[];
  cluster_names: string[];
  contingency: ContingencyPayload;
  h_split: SplitMatrixPayload;
  h_merge: MergeMatrixPayload;
  recommendations: PendingRecommendation[];
  staged: DecisionPayload[];
  metrics_history: AgreementScores[];
  has_reference: boolean;
}

export interface MaskPayload {
  n: number;
  b64: string;
}

export interface ExplanationDetail {
  id: string;
  kind: "split" | "merge";
  recommendation: RecommendationBody;
  render_text: string;
  rules: (ExplanationRulePayload & {
    target_name: string;
    text: string;
    confidence: number;
    conditions: { feature: string; op: string; value: number | number[]; match_mask: MaskPayload }[];
    rule_mask: MaskPayload;
  })[];
  bounding_boxes: {
    label: number;
    intervals: [number, number][];
    quantiles: [number, number];
    source: "expert" | "cluster";
    name: string;
  }[];
}

export interface PointsPayload {
  row_index: number[];
  x: number[];
  y: number[];
  expert: number[];
  cluster: number[];
}

export interface KbPayload {
  kb: {
    version: number;
    rules: unknown[];
    splits: { parent: number; rules: unknown[] }[];
    history: Record<string, unknown>[];
  };
  text: string;
}

export interface ApiFailure {
  code: string;
  message: string;
}
