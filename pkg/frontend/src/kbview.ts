// Knowledge-base browser: current rules as text plus the version history.

import type { KbPayload } from "./types.js";

export function renderKb(payload: KbPayload | null): HTMLElement {
  const root = document.createElement("section");
  root.className = "panel kb";
  root.dataset.testid = "kb";
  const title = document.createElement("h2");
  title.textContent = payload ? `Knowledge base v${payload.kb.version}` : "Knowledge base";
  root.appendChild(title);
  if (!payload) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = "Loading...";
    root.appendChild(empty);
    return root;
  }
  const pre = document.createElement("pre");
  pre.textContent = payload.text;
  root.appendChild(pre);

  const historyTitle = document.createElement("h3");
  historyTitle.textContent = "History";
  root.appendChild(historyTitle);
  const list = document.createElement("ol");
  list.className = "kb-history";
  for (const event of payload.kb.history) {
    const item = document.createElement("li");
    const { op, version, ...rest } = event as { op: string; version: number };
    item.textContent = `v${version}: ${op} ${JSON.stringify(rest)}`;
    list.appendChild(item);
  }
  if (!payload.kb.history.length) {
    const item = document.createElement("li");
    item.textContent = "v0: initial knowledge";
    list.appendChild(item);
  }
  root.appendChild(list);
  return root;
}
