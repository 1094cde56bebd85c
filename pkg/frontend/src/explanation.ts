// Explanation panel: the selected recommendation's rules (conditions,
// precision, coverage, confidence) plus a 2-D scatter of the data with the
// relevant bounding boxes. With more than two features the expert picks the
// plotted pair; explanations stay in the original feature space.

import type { UiSessionState } from "./state.js";
import type { ExplanationDetail, PointsPayload } from "./types.js";

const COLORS = [
  "#1f63ab", "#d1495b", "#66a182", "#edae49", "#8d5a97",
  "#00798c", "#b5651d", "#3d5a80", "#9a8c98", "#2a9d8f",
];

export function renderExplanation(
  state: UiSessionState,
  detail: ExplanationDetail | null,
  points: PointsPayload | null,
  onFeaturePair: (fx: number, fy: number) => void,
): HTMLElement {
  const root = document.createElement("section");
  root.className = "panel explanation";
  root.dataset.testid = "explanation";
  const title = document.createElement("h2");
  title.textContent = "Explanation";
  root.appendChild(title);

  if (!detail) {
    const hint = document.createElement("p");
    hint.className = "empty";
    hint.textContent = "Select a recommendation card to inspect its rules.";
    root.appendChild(hint);
    return root;
  }

  const pre = document.createElement("pre");
  pre.textContent = detail.render_text;
  root.appendChild(pre);

  const list = document.createElement("ul");
  list.className = "rules";
  for (const rule of detail.rules) {
    const item = document.createElement("li");
    item.dataset.testid = "rule";
    const text = document.createElement("code");
    text.textContent = rule.text;
    item.appendChild(text);
    const meta = document.createElement("span");
    meta.className = "rule-meta";
    meta.textContent =
      ` precision ${rule.precision.toFixed(2)} · coverage ${rule.coverage.toFixed(2)}` +
      ` · confidence ${rule.confidence.toFixed(2)}`;
    item.appendChild(meta);
    list.appendChild(item);
  }
  root.appendChild(list);

  const { feature_names } = state.view;
  if (feature_names.length > 2) {
    const picker = document.createElement("div");
    picker.className = "feature-picker";
    for (const axis of ["x", "y"] as const) {
      const select = document.createElement("select");
      select.dataset.axis = axis;
      feature_names.forEach((name, idx) => {
        const opt = document.createElement("option");
        opt.value = String(idx);
        opt.textContent = name;
        if (idx === (axis === "x" ? state.prefs.featureX : state.prefs.featureY)) {
          opt.selected = true;
        }
        select.appendChild(opt);
      });
      select.addEventListener("change", () => {
        const fx = axis === "x" ? Number(select.value) : state.prefs.featureX;
        const fy = axis === "y" ? Number(select.value) : state.prefs.featureY;
        onFeaturePair(fx, fy);
      });
      picker.appendChild(select);
    }
    root.appendChild(picker);
  }

  if (points) {
    root.appendChild(renderScatter(state, detail, points));
  }
  return root;
}

function renderScatter(
  state: UiSessionState,
  detail: ExplanationDetail,
  points: PointsPayload,
): SVGSVGElement {
  const { featureX, featureY } = state.prefs;
  const width = 420;
  const height = 320;
  const pad = 28;
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "scatter");
  svg.dataset.testid = "scatter";

  const boxes = detail.bounding_boxes.filter(
    (b) => b.intervals.length > Math.max(featureX, featureY),
  );
  const xs = [...points.x, ...boxes.flatMap((b) => b.intervals[featureX])];
  const ys = [...points.y, ...boxes.flatMap((b) => b.intervals[featureY])];
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (v: number) =>
    pad + ((v - xMin) / Math.max(xMax - xMin, 1e-12)) * (width - 2 * pad);
  const sy = (v: number) =>
    height - pad - ((v - yMin) / Math.max(yMax - yMin, 1e-12)) * (height - 2 * pad);

  points.x.forEach((x, i) => {
    const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
    dot.setAttribute("cx", sx(x).toFixed(1));
    dot.setAttribute("cy", sy(points.y[i]).toFixed(1));
    dot.setAttribute("r", "2.5");
    const group = detail.kind === "split" ? points.cluster[i] : points.expert[i];
    dot.setAttribute("fill", COLORS[group % COLORS.length]);
    dot.setAttribute("fill-opacity", "0.55");
    svg.appendChild(dot);
  });

  boxes.forEach((box, i) => {
    const [x0, x1] = box.intervals[featureX];
    const [y0, y1] = box.intervals[featureY];
    const rect = document.createElementNS("http://www.w3.org/2000/svg", "rect");
    rect.setAttribute("x", Math.min(sx(x0), sx(x1)).toFixed(1));
    rect.setAttribute("y", Math.min(sy(y0), sy(y1)).toFixed(1));
    rect.setAttribute("width", Math.abs(sx(x1) - sx(x0)).toFixed(1));
    rect.setAttribute("height", Math.abs(sy(y1) - sy(y0)).toFixed(1));
    rect.setAttribute("fill", "none");
    rect.setAttribute("stroke", COLORS[i % COLORS.length]);
    rect.setAttribute("stroke-dasharray", "5 3");
    rect.setAttribute("stroke-width", "1.5");
    rect.dataset.testid = "bounding-box";
    const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
    label.setAttribute("x", (Math.min(sx(x0), sx(x1)) + 3).toFixed(1));
    label.setAttribute("y", (Math.min(sy(y0), sy(y1)) - 3).toFixed(1));
    label.setAttribute("class", "box-label");
    label.textContent = box.name;
    svg.appendChild(rect);
    svg.appendChild(label);
  });
  return svg;
}
