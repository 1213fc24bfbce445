import { Api } from "./api.js";
import { App } from "./app.js";

// The API origin can be overridden with ?api=http://host:port when the UI
// is served from somewhere other than the service itself.
function apiBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? "";
}

function uploadScreen(root: HTMLElement, api: Api): void {
  root.textContent = "";
  const input = document.createElement("input");
  input.type = "file";
  input.accept = ".csv,text/csv";
  const button = document.createElement("button");
  button.textContent = "Start session";
  const error = document.createElement("p");
  error.className = "upload-error";

  button.addEventListener("click", async () => {
    const file = input.files?.[0];
    if (!file) {
      error.textContent = "Choose a CSV file first.";
      return;
    }
    button.disabled = true;
    try {
      const created = await api.createSession(file, file.name);
      window.location.hash = created.session_id;
      boot(root);
    } catch (err) {
      error.textContent = String(err);
      button.disabled = false;
    }
  });

  const box = document.createElement("div");
  box.id = "upload";
  box.append(input, button, error);
  root.append(box);
}

function boot(root: HTMLElement): void {
  const api = new Api(apiBase());
  const sessionId = window.location.hash.replace(/^#/, "");
  if (!sessionId) {
    uploadScreen(root, api);
    return;
  }
  const app = new App(api, sessionId, root);
  void app.init().then(() => app.start());
}

const root = document.getElementById("app");
if (root !== null) {
  boot(root);
  window.addEventListener("hashchange", () => boot(root));
}
