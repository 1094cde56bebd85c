// Contingency heatmap: expert rows x auto-cluster columns, with toggles for
// the raw counts and the split/merge evidence matrices. Every cell tooltip
// shows all three numbers so the evidence behind a recommendation is visible
// at a glance.

import type { HeatmapMode, UiSessionState } from "./state.js";

const MODES: { key: HeatmapMode; label: string }[] = [
  { key: "counts", label: "counts" },
  { key: "h_split", label: "split evidence" },
  { key: "h_merge", label: "merge evidence" },
];

function matrixFor(state: UiSessionState, mode: HeatmapMode): number[][] {
  if (mode === "counts") return state.view.contingency.counts;
  if (mode === "h_split") return state.view.h_split.values;
  return state.view.h_merge.values;
}

function cellColor(value: number, max: number): string {
  const t = max > 0 ? value / max : 0;
  return `rgba(31, 99, 171, ${(0.08 + 0.92 * t).toFixed(3)})`;
}

export function renderHeatmap(
  state: UiSessionState,
  onMode: (mode: HeatmapMode) => void,
): HTMLElement {
  const { view, prefs } = state;
  const root = document.createElement("section");
  root.className = "panel heatmap";
  root.dataset.testid = "heatmap";

  const header = document.createElement("div");
  header.className = "panel-header";
  const title = document.createElement("h2");
  title.textContent = "Contingency";
  header.appendChild(title);
  const toggles = document.createElement("div");
  toggles.className = "toggle-group";
  for (const { key, label } of MODES) {
    const btn = document.createElement("button");
    btn.textContent = label;
    btn.dataset.mode = key;
    btn.className = prefs.heatmapMode === key ? "toggle active" : "toggle";
    btn.addEventListener("click", () => onMode(key));
    toggles.appendChild(btn);
  }
  header.appendChild(toggles);
  root.appendChild(header);

  const matrix = matrixFor(state, prefs.heatmapMode);
  const max = Math.max(...matrix.flat(), 0);
  const grid = document.createElement("div");
  grid.className = "heatmap-grid";
  grid.style.gridTemplateColumns = `auto repeat(${view.cluster_names.length}, 1fr)`;

  grid.appendChild(document.createElement("div"));
  for (const name of view.cluster_names) {
    const cell = document.createElement("div");
    cell.className = "axis-label";
    cell.textContent = name;
    grid.appendChild(cell);
  }
  matrix.forEach((row, i) => {
    const label = document.createElement("div");
    label.className = "axis-label row-label";
    label.textContent = view.expert_names[i];
    grid.appendChild(label);
    row.forEach((value, j) => {
      const cell = document.createElement("div");
      cell.className = "cell";
      cell.dataset.row = String(i);
      cell.dataset.col = String(j);
      cell.style.backgroundColor = cellColor(value, max);
      cell.title = [
        `${view.expert_names[i]} x ${view.cluster_names[j]}`,
        `count: ${view.contingency.counts[i][j]}`,
        `split evidence: ${view.h_split.values[i][j].toFixed(3)}`,
        `merge evidence: ${view.h_merge.values[i][j].toFixed(3)}`,
      ].join("\n");
      const text = document.createElement("span");
      text.textContent =
        prefs.heatmapMode === "counts" ? String(value) : value.toFixed(2);
      cell.appendChild(text);
      grid.appendChild(cell);
    });
  });
  root.appendChild(grid);
  return root;
}
