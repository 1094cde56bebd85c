// Bootstrap: connect screen listing available sessions, then the app.

import { ApiClient } from "./api.js";
import { App } from "./app.js";

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const rootEl = document.getElementById("app");
  if (!rootEl) {
    return;
  }
  const app = new App(api, rootEl, window.localStorage);
  (window as unknown as { knacApp: App }).knacApp = app;

  const hash = window.location.hash.replace(/^#/, "");
  if (hash) {
    await app.connect(hash);
    return;
  }

  const picker = document.createElement("div");
  picker.className = "connect";
  const title = document.createElement("h1");
  title.textContent = "knac review";
  picker.appendChild(title);
  const select = document.createElement("select");
  try {
    const { sessions } = await api.listSessions();
    for (const id of sessions) {
      const opt = document.createElement("option");
      opt.value = id;
      opt.textContent = id;
      select.appendChild(opt);
    }
  } catch {
    // empty list; the input below still allows a manual id
  }
  picker.appendChild(select);
  const btn = document.createElement("button");
  btn.textContent = "Open session";
  btn.addEventListener("click", () => {
    if (select.value) {
      window.location.hash = select.value;
      picker.remove();
      void app.connect(select.value);
    }
  });
  picker.appendChild(btn);
  rootEl.appendChild(picker);
}

void boot();
