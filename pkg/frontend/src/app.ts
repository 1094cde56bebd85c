// Screen composition and the interaction loop: render the heatmap, cards,
// explanation, timeline, and KB panels from the latest view; stage draft
// decisions locally; submit drafts + iterate; surface API failures with a
// retry action, and stale-token conflicts with a refresh prompt.

import { ApiClient, ApiError } from "./api.js";
import { renderCards } from "./cards.js";
import { renderExplanation } from "./explanation.js";
import { renderHeatmap } from "./heatmap.js";
import { renderKb } from "./kbview.js";
import {
  applyView,
  canIterate,
  clearDrafts,
  draftDecisions,
  newState,
  setDraft,
  type DraftStorage,
  type UiSessionState,
} from "./state.js";
import { renderTimeline } from "./timeline.js";
import type { ExplanationDetail, KbPayload, PointsPayload } from "./types.js";

interface Banner {
  message: string;
  action: "retry" | "refresh";
  run: () => Promise<void>;
}

export class App {
  state: UiSessionState | null = null;
  explanation: ExplanationDetail | null = null;
  points: PointsPayload | null = null;
  kb: KbPayload | null = null;
  banner: Banner | null = null;
  busy = false;

  constructor(
    public api: ApiClient,
    public root: HTMLElement,
    public storage?: DraftStorage,
  ) {}

  async connect(sessionId: string): Promise<void> {
    await this.guard(async () => {
      const view = await this.api.getSession(sessionId);
      this.state = newState(view, this.storage);
      await this.loadPanels();
    }, () => this.connect(sessionId));
  }

  async refresh(): Promise<void> {
    if (!this.state) return;
    const id = this.state.view.id;
    await this.guard(async () => {
      const view = await this.api.getSession(id);
      applyView(this.state!, view, this.storage);
      await this.loadPanels();
    }, () => this.refresh());
  }

  async iterate(): Promise<void> {
    if (!this.state || !canIterate(this.state)) return;
    const { id, iteration_token } = this.state.view;
    await this.guard(async () => {
      const drafts = draftDecisions(this.state!);
      if (drafts.length) {
        await this.api.postDecisions(id, iteration_token, drafts);
      }
      const view = await this.api.iterate(id, iteration_token);
      clearDrafts(this.state!, this.storage);
      applyView(this.state!, view, this.storage);
      await this.loadPanels();
    }, () => this.refresh());
  }

  draft(recId: string, verdict: "accept" | "reject" | null): void {
    if (!this.state) return;
    setDraft(this.state, recId, verdict, this.storage);
    this.render();
  }

  async select(recId: string): Promise<void> {
    if (!this.state) return;
    this.state.prefs.selectedRecommendation = recId;
    await this.guard(async () => this.loadExplanation(), () => this.select(recId));
  }

  async setFeaturePair(fx: number, fy: number): Promise<void> {
    if (!this.state) return;
    this.state.prefs.featureX = fx;
    this.state.prefs.featureY = fy;
    await this.guard(async () => {
      this.points = await this.api.getPoints(this.state!.view.id, fx, fy);
    }, () => this.setFeaturePair(fx, fy));
  }

  private async loadPanels(): Promise<void> {
    if (!this.state) return;
    const { view, prefs } = this.state;
    this.kb = await this.api.getKb(view.id);
    this.points = view.feature_names.length >= 2
      ? await this.api.getPoints(view.id, prefs.featureX, prefs.featureY)
      : null;
    await this.loadExplanation();
  }

  private async loadExplanation(): Promise<void> {
    if (!this.state) return;
    const recId = this.state.prefs.selectedRecommendation;
    this.explanation = recId
      ? await this.api.getExplanation(this.state.view.id, recId)
      : null;
  }

  /** Run an API interaction; on failure surface a banner whose action either
   * retries the same call or (stale token / stale recommendation) refreshes
   * the view. Always re-renders. */
  private async guard(work: () => Promise<void>, retry: () => Promise<void>): Promise<void> {
    this.busy = true;
    this.banner = null;
    this.render();
    try {
      await work();
    } catch (err) {
      if (err instanceof ApiError && (err.code === "stale_token" || err.code === "stale_recommendation")) {
        this.banner = {
          message: `Session moved on (${err.code}); refresh to continue.`,
          action: "refresh",
          run: () => this.refresh(),
        };
      } else {
        const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        this.banner = { message, action: "retry", run: retry };
      }
    } finally {
      this.busy = false;
      this.render();
    }
  }

  render(): void {
    this.root.replaceChildren();
    if (this.banner) {
      const bar = document.createElement("div");
      bar.className = "banner";
      bar.dataset.testid = "error-banner";
      const text = document.createElement("span");
      text.textContent = this.banner.message;
      bar.appendChild(text);
      const btn = document.createElement("button");
      btn.textContent = this.banner.action;
      btn.dataset.testid = "banner-action";
      btn.addEventListener("click", () => void this.banner?.run());
      bar.appendChild(btn);
      this.root.appendChild(bar);
    }
    if (!this.state) {
      return;
    }
    const view = this.state.view;

    const status = document.createElement("header");
    status.className = "status";
    status.dataset.testid = "status";
    const label = document.createElement("span");
    label.textContent = `session ${view.id} · iteration ${view.iteration} · KB v${view.kb_version}`;
    status.appendChild(label);
    if (view.converged) {
      const badge = document.createElement("span");
      badge.className = "badge converged";
      badge.dataset.testid = "converged-badge";
      badge.textContent = "converged";
      status.appendChild(badge);
    }
    const iterateBtn = document.createElement("button");
    iterateBtn.textContent = `Submit ${this.state.drafts.size} decision(s) + iterate`;
    iterateBtn.dataset.testid = "iterate";
    iterateBtn.disabled = view.converged || this.busy;
    iterateBtn.addEventListener("click", () => void this.iterate());
    status.appendChild(iterateBtn);
    this.root.appendChild(status);

    const grid = document.createElement("main");
    grid.className = "layout";
    grid.appendChild(
      renderHeatmap(this.state, (mode) => {
        this.state!.prefs.heatmapMode = mode;
        this.render();
      }),
    );
    grid.appendChild(
      renderCards(
        this.state,
        (recId, verdict) => this.draft(recId, verdict),
        (recId) => void this.select(recId),
      ),
    );
    grid.appendChild(
      renderExplanation(this.state, this.explanation, this.points, (fx, fy) =>
        void this.setFeaturePair(fx, fy).then(() => this.render()),
      ),
    );
    grid.appendChild(renderTimeline(this.state));
    grid.appendChild(renderKb(this.kb));
    this.root.appendChild(grid);
  }
}
