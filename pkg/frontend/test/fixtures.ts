import type { SessionView } from "../src/types.js";

export function fixtureView(overrides: Partial<SessionView> = {}): SessionView {
  return {
    id: "fix",
    iteration: 0,
    iteration_token: "it0",
    converged: false,
    kb_version: 0,
    params: { epsilon_split: 0.8 },
    axis_mode: "column",
    n_rows: 8,
    feature_names: ["x0", "x1"],
    expert_names: ["E_0", "E_1"],
    cluster_names: ["C_0", "C_1", "C_2"],
    contingency: {
      counts: [
        [4, 0, 0],
        [0, 2, 2],
      ],
      expert_ids: [0, 1],
      cluster_ids: [0, 1, 2],
    },
    h_split: {
      values: [
        [1, 0, 0],
        [0, 1, 1],
      ],
      axis_mode: "column",
    },
    h_merge: {
      values: [
        [1, 0, 0],
        [0, 0.707, 0.707],
      ],
      sim: [
        [1, 0],
        [0, 1],
      ],
    },
    recommendations: [
      {
        id: "i0-split-e1",
        kind: "split",
        recommendation: {
          type: "split",
          confidence: 0.96,
          expert_label: 1,
          candidates: [1, 2],
          per_candidate_confidence: [0.96, 0.96],
          s_dec: 0.58,
        },
        explanations: [
          {
            target_label: 1,
            conditions: [{ feature: "x0", op: "<=", value: 0.0 }],
            precision: 1.0,
            coverage: 0.5,
          },
          {
            target_label: 2,
            conditions: [{ feature: "x0", op: ">", value: 0.0 }],
            precision: 1.0,
            coverage: 0.5,
          },
        ],
        render_text:
          "SPLIT\n    EXPERT CLUSTER E_1\nINTO\n    CLUSTERS [(C_1, C_2)] (Confidence 0.96)",
      },
    ],
    staged: [],
    metrics_history: [{ homogeneity: 0.9, completeness: 0.8, v_measure: 0.85 }],
    has_reference: true,
    ...overrides,
  };
}

export class MemoryStorage {
  private map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
}
