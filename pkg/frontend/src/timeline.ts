// Metrics timeline: homogeneity, completeness, and v-measure per iteration.

import type { UiSessionState } from "./state.js";

const SERIES: { key: "homogeneity" | "completeness" | "v_measure"; color: string }[] = [
  { key: "homogeneity", color: "#1f63ab" },
  { key: "completeness", color: "#66a182" },
  { key: "v_measure", color: "#d1495b" },
];

export function renderTimeline(state: UiSessionState): HTMLElement {
  const root = document.createElement("section");
  root.className = "panel timeline";
  root.dataset.testid = "timeline";
  const title = document.createElement("h2");
  const against = state.view.has_reference ? "reference labels" : "auto clustering";
  title.textContent = `Metrics per iteration (vs ${against})`;
  root.appendChild(title);

  const history = state.view.metrics_history;
  root.dataset.points = String(history.length);
  const width = 420;
  const height = 160;
  const pad = 24;
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  const sx = (i: number) =>
    pad + (history.length > 1 ? (i / (history.length - 1)) * (width - 2 * pad) : 0);
  const sy = (v: number) => height - pad - v * (height - 2 * pad);

  for (const { key, color } of SERIES) {
    const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute(
      "points",
      history.map((m, i) => `${sx(i).toFixed(1)},${sy(m[key]).toFixed(1)}`).join(" "),
    );
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", color);
    line.setAttribute("stroke-width", "2");
    line.dataset.series = key;
    svg.appendChild(line);
    history.forEach((m, i) => {
      const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      dot.setAttribute("cx", sx(i).toFixed(1));
      dot.setAttribute("cy", sy(m[key]).toFixed(1));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", color);
      svg.appendChild(dot);
    });
  }
  root.appendChild(svg);

  const legend = document.createElement("div");
  legend.className = "legend";
  const latest = history[history.length - 1];
  for (const { key, color } of SERIES) {
    const item = document.createElement("span");
    item.style.color = color;
    item.textContent = `${key.replace("_", "-")} ${latest ? latest[key].toFixed(3) : "-"}`;
    legend.appendChild(item);
  }
  root.appendChild(legend);
  return root;
}
