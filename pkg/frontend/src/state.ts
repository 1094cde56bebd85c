// Client-side session state: the latest API view plus local draft decisions
// and view preferences. Drafts reference currently pending recommendations
// only, survive page reloads until submitted, and are cleared by iterate.

import type { DecisionPayload, SessionView } from "./types.js";

export type HeatmapMode = "counts" | "h_split" | "h_merge";

export interface ViewPrefs {
  heatmapMode: HeatmapMode;
  featureX: number;
  featureY: number;
  selectedRecommendation: string | null;
}

export interface UiSessionState {
  view: SessionView;
  drafts: Map<string, "accept" | "reject">;
  prefs: ViewPrefs;
}

const DRAFT_KEY = (id: string) => `knac-drafts:${id}`;

export interface DraftStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export function newState(view: SessionView, storage?: DraftStorage): UiSessionState {
  const state: UiSessionState = {
    view,
    drafts: new Map(),
    prefs: {
      heatmapMode: "counts",
      featureX: 0,
      featureY: Math.min(1, view.feature_names.length - 1),
      selectedRecommendation: view.recommendations[0]?.id ?? null,
    },
  };
  if (storage) {
    restoreDrafts(state, storage);
  }
  return state;
}

/** Replace the view after a refresh/iterate; drafts that no longer reference
 * a pending recommendation are dropped. */
export function applyView(state: UiSessionState, view: SessionView, storage?: DraftStorage): void {
  state.view = view;
  const pending = new Set(view.recommendations.map((r) => r.id));
  for (const id of [...state.drafts.keys()]) {
    if (!pending.has(id)) {
      state.drafts.delete(id);
    }
  }
  if (
    state.prefs.selectedRecommendation !== null &&
    !pending.has(state.prefs.selectedRecommendation)
  ) {
    state.prefs.selectedRecommendation = view.recommendations[0]?.id ?? null;
  }
  if (storage) {
    persistDrafts(state, storage);
  }
}

export function setDraft(
  state: UiSessionState,
  recId: string,
  verdict: "accept" | "reject" | null,
  storage?: DraftStorage,
): void {
  if (!state.view.recommendations.some((r) => r.id === recId)) {
    throw new Error(`draft for unknown recommendation ${recId}`);
  }
  if (verdict === null) {
    state.drafts.delete(recId);
  } else {
    state.drafts.set(recId, verdict);
  }
  if (storage) {
    persistDrafts(state, storage);
  }
}

export function draftDecisions(state: UiSessionState): DecisionPayload[] {
  return [...state.drafts.entries()].map(([recommendation_id, verdict]) => ({
    recommendation_id,
    verdict,
  }));
}

export function clearDrafts(state: UiSessionState, storage?: DraftStorage): void {
  state.drafts.clear();
  if (storage) {
    storage.removeItem(DRAFT_KEY(state.view.id));
  }
}

export function persistDrafts(state: UiSessionState, storage: DraftStorage): void {
  storage.setItem(
    DRAFT_KEY(state.view.id),
    JSON.stringify([...state.drafts.entries()]),
  );
}

export function restoreDrafts(state: UiSessionState, storage: DraftStorage): void {
  const raw = storage.getItem(DRAFT_KEY(state.view.id));
  if (!raw) {
    return;
  }
  const pending = new Set(state.view.recommendations.map((r) => r.id));
  try {
    for (const [id, verdict] of JSON.parse(raw) as [string, "accept" | "reject"][]) {
      if (pending.has(id)) {
        state.drafts.set(id, verdict);
      }
    }
  } catch {
    storage.removeItem(DRAFT_KEY(state.view.id));
  }
}

/** Iterate is allowed only on a live, non-converged session. */
export function canIterate(state: UiSessionState): boolean {
  return !state.view.converged;
}
