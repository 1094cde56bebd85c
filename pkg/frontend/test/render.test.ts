import { describe, expect, it } from "vitest";

import { renderCards } from "../src/cards.js";
import { renderHeatmap } from "../src/heatmap.js";
import { renderTimeline } from "../src/timeline.js";
import { renderExplanation } from "../src/explanation.js";
import { newState, setDraft } from "../src/state.js";
import { fixtureView } from "./fixtures.js";
import type { ExplanationDetail, PointsPayload } from "../src/types.js";

describe("heatmap", () => {
  it("renders one cell per expert/cluster pair with evidence tooltips", () => {
    const state = newState(fixtureView());
    const el = renderHeatmap(state, () => {});
    const cells = el.querySelectorAll(".cell");
    expect(cells.length).toBe(2 * 3);
    const title = (cells[0] as HTMLElement).title;
    expect(title).toContain("count: 4");
    expect(title).toContain("split evidence: 1.000");
    expect(title).toContain("merge evidence: 1.000");
  });

  it("switches between counts and evidence modes", () => {
    const state = newState(fixtureView());
    let mode: string | null = null;
    const el = renderHeatmap(state, (m) => (mode = m));
    (el.querySelector("button[data-mode=h_split]") as HTMLButtonElement).click();
    expect(mode).toBe("h_split");
  });
});

describe("cards", () => {
  it("shows a split card with candidate chips and the text block", () => {
    const state = newState(fixtureView());
    const el = renderCards(state, () => {}, () => {});
    const cards = el.querySelectorAll("[data-testid=card-split]");
    expect(cards.length).toBe(1);
    const chips = cards[0].querySelectorAll(".chip");
    expect([...chips].map((c) => c.textContent)).toEqual(["C_1", "C_2"]);
    expect(cards[0].querySelector("pre")?.textContent).toContain("SPLIT");
  });

  it("reflects and toggles draft verdicts", () => {
    const state = newState(fixtureView());
    const drafted: Array<[string, string | null]> = [];
    let el = renderCards(state, (id, v) => drafted.push([id, v]), () => {});
    (el.querySelector("button[data-verdict=accept]") as HTMLButtonElement).click();
    expect(drafted).toEqual([["i0-split-e1", "accept"]]);

    setDraft(state, "i0-split-e1", "accept");
    el = renderCards(state, () => {}, () => {});
    const btn = el.querySelector("button[data-verdict=accept]") as HTMLButtonElement;
    expect(btn.className).toContain("active");
  });

  it("announces convergence when nothing is pending", () => {
    const state = newState(fixtureView({ recommendations: [], converged: true }));
    const el = renderCards(state, () => {}, () => {});
    expect(el.textContent).toContain("converged");
  });
});

describe("timeline", () => {
  it("draws one point per iteration and all three series", () => {
    const view = fixtureView({
      metrics_history: [
        { homogeneity: 0.5, completeness: 0.5, v_measure: 0.5 },
        { homogeneity: 0.9, completeness: 0.8, v_measure: 0.85 },
      ],
    });
    const el = renderTimeline(newState(view));
    expect(el.dataset.points).toBe("2");
    expect(el.querySelectorAll("polyline").length).toBe(3);
  });
});

describe("explanation", () => {
  const detail: ExplanationDetail = {
    id: "i0-split-e1",
    kind: "split",
    recommendation: { type: "split", confidence: 0.96 },
    render_text: "SPLIT ...",
    rules: [
      {
        target_label: 1,
        target_name: "C_1",
        text: "C_1: x0 <= 0.00 (Precision: 1.00, Coverage: 0.50)",
        precision: 1,
        coverage: 0.5,
        confidence: 0.5,
        conditions: [
          { feature: "x0", op: "<=", value: 0, match_mask: { n: 8, b64: "AA==" } },
        ],
        rule_mask: { n: 8, b64: "AA==" },
      },
    ],
    bounding_boxes: [
      {
        label: 1,
        intervals: [[-1, 0], [0, 1]],
        quantiles: [0.05, 0.95],
        source: "cluster",
        name: "C_1",
      },
    ],
  };
  const points: PointsPayload = {
    row_index: [0, 1, 2],
    x: [-0.5, 0.5, 1.0],
    y: [0.1, 0.4, 0.9],
    expert: [0, 1, 1],
    cluster: [0, 1, 2],
  };

  it("lists rules with metrics and draws the scatter with boxes", () => {
    const state = newState(fixtureView());
    const el = renderExplanation(state, detail, points, () => {});
    expect(el.querySelectorAll("[data-testid=rule]").length).toBe(1);
    expect(el.textContent).toContain("precision 1.00");
    expect(el.querySelectorAll("circle").length).toBe(3);
    expect(el.querySelectorAll("[data-testid=bounding-box]").length).toBe(1);
  });

  it("prompts for a selection when no detail is loaded", () => {
    const state = newState(fixtureView());
    const el = renderExplanation(state, null, null, () => {});
    expect(el.textContent).toContain("Select a recommendation");
  });

  it("offers a feature-pair picker when d > 2", () => {
    const view = fixtureView({ feature_names: ["x0", "x1", "x2"] });
    const state = newState(view);
    let pair: [number, number] | null = null;
    const el = renderExplanation(state, detail, points, (fx, fy) => (pair = [fx, fy]));
    const selects = el.querySelectorAll("select");
    expect(selects.length).toBe(2);
    (selects[0] as HTMLSelectElement).value = "2";
    selects[0].dispatchEvent(new Event("change"));
    expect(pair).toEqual([2, 1]);
  });
});
