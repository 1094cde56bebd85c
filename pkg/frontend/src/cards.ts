// Recommendation cards, sorted by confidence, each with accept/reject draft
// toggles and the canonical text block. Clicking a card selects it for the
// explanation panel.

import type { UiSessionState } from "./state.js";
import type { PendingRecommendation } from "./types.js";

function chip(text: string): HTMLElement {
  const el = document.createElement("span");
  el.className = "chip";
  el.textContent = text;
  return el;
}

function cardChips(state: UiSessionState, rec: PendingRecommendation): HTMLElement[] {
  const { view } = state;
  const body = rec.recommendation;
  if (rec.kind === "split") {
    return (body.candidates ?? []).map((c) => chip(view.cluster_names[c]));
  }
  const [j, k] = body.pair ?? [0, 0];
  return [chip(view.expert_names[j]), chip(view.expert_names[k])];
}

export function renderCards(
  state: UiSessionState,
  onDraft: (recId: string, verdict: "accept" | "reject" | null) => void,
  onSelect: (recId: string) => void,
): HTMLElement {
  const root = document.createElement("section");
  root.className = "panel cards";
  root.dataset.testid = "cards";
  const title = document.createElement("h2");
  title.textContent = `Recommendations (${state.view.recommendations.length})`;
  root.appendChild(title);

  const sorted = [...state.view.recommendations].sort(
    (a, b) => b.recommendation.confidence - a.recommendation.confidence,
  );
  for (const rec of sorted) {
    const card = document.createElement("article");
    card.className = "card";
    card.dataset.testid = `card-${rec.kind}`;
    card.dataset.recId = rec.id;
    if (state.prefs.selectedRecommendation === rec.id) {
      card.classList.add("selected");
    }
    card.addEventListener("click", () => onSelect(rec.id));

    const head = document.createElement("div");
    head.className = "card-head";
    const kind = document.createElement("strong");
    kind.textContent = rec.kind.toUpperCase();
    head.appendChild(kind);
    const conf = document.createElement("span");
    conf.className = "confidence";
    conf.textContent = `confidence ${rec.recommendation.confidence.toFixed(2)}`;
    head.appendChild(conf);
    card.appendChild(head);

    const chips = document.createElement("div");
    chips.className = "chips";
    for (const el of cardChips(state, rec)) {
      chips.appendChild(el);
    }
    card.appendChild(chips);

    const pre = document.createElement("pre");
    pre.textContent = rec.render_text;
    card.appendChild(pre);

    const actions = document.createElement("div");
    actions.className = "card-actions";
    const current = state.drafts.get(rec.id) ?? null;
    for (const verdict of ["accept", "reject"] as const) {
      const btn = document.createElement("button");
      btn.textContent = verdict;
      btn.dataset.verdict = verdict;
      btn.className = current === verdict ? `verdict ${verdict} active` : `verdict ${verdict}`;
      btn.addEventListener("click", (ev) => {
        ev.stopPropagation();
        onDraft(rec.id, current === verdict ? null : verdict);
      });
      actions.appendChild(btn);
    }
    card.appendChild(actions);
    root.appendChild(card);
  }
  if (!sorted.length) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = state.view.converged
      ? "No recommendations; the loop has converged."
      : "No recommendations at the current thresholds.";
    root.appendChild(empty);
  }
  return root;
}
