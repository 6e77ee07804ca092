// App shell: login, hash routing, screen lifecycle.
//
// The token lives in memory for the session only; a refresh returns to the
// login screen. All state changes flow through the engine API.

import { ApiClient, ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import { mountQueue } from "./views/queue.js";
import { mountReview } from "./views/review.js";
import { mountStudio } from "./views/studio.js";

interface Session {
  client: ApiClient;
}

let session: Session | null = null;
let activeDispose: (() => void) | null = null;

function navBar(): HTMLElement {
  const jobInput = el("input", {
    type: "text",
    placeholder: "job id for studio",
    "aria-label": "job id for studio",
  }) as HTMLInputElement;
  const openStudio = el("button", { text: "Open studio" });
  openStudio.addEventListener("click", () => {
    if (jobInput.value.trim()) {
      location.hash = `#/studio/${encodeURIComponent(jobInput.value.trim())}`;
    }
  });
  const logout = el("button", { text: "Sign out" });
  logout.addEventListener("click", () => {
    session = null;
    location.hash = "#/login";
  });
  return el("nav", { class: "top-nav" }, [
    el("a", { href: "#/queue", text: "Queue" }),
    jobInput,
    openStudio,
    logout,
  ]);
}

function loginScreen(root: HTMLElement, message = ""): void {
  clear(root);
  const url = el("input", {
    type: "text",
    value: "http://127.0.0.1:8100",
    "aria-label": "engine url",
  }) as HTMLInputElement;
  const token = el("input", {
    type: "password",
    placeholder: "bearer token",
    "aria-label": "bearer token",
  }) as HTMLInputElement;
  const problem = el("p", { class: "error-banner", role: "alert", text: message });
  problem.hidden = !message;
  const connect = el("button", { class: "primary", text: "Sign in" });

  const attempt = async () => {
    const client = new ApiClient(url.value, token.value);
    try {
      await client.queue(); // proves the token before entering
      session = { client };
      location.hash = "#/queue";
    } catch (err) {
      problem.hidden = false;
      problem.textContent =
        err instanceof ApiError && err.status === 401
          ? "Token rejected."
          : `Cannot reach the engine: ${String(err)}`;
    }
  };
  connect.addEventListener("click", () => void attempt());
  token.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void attempt();
  });

  root.append(
    el("div", { class: "login-box" }, [
      el("h1", { text: "docpipe review portal" }),
      el("label", {}, ["Engine URL", url]),
      el("label", {}, ["Token", token]),
      connect,
      problem,
    ]),
  );
}

export function route(root: HTMLElement): void {
  activeDispose?.();
  activeDispose = null;

  const hash = location.hash || "#/queue";
  if (!session) {
    loginScreen(root, hash === "#/login" ? "" : "Sign in to continue.");
    return;
  }
  const parts = hash.replace(/^#\//, "").split("/");
  clear(root);
  root.append(navBar());
  const screen = el("main", { class: "screen" });
  root.append(screen);

  if (parts[0] === "review" && parts[1]) {
    void mountReview(screen, {
      client: session.client,
      jobId: decodeURIComponent(parts[1]),
      onDone: () => {
        location.hash = "#/queue";
      },
    });
  } else if (parts[0] === "studio" && parts[1]) {
    const view = mountStudio(screen, session.client, decodeURIComponent(parts[1]));
    activeDispose = view.dispose;
  } else {
    const view = mountQueue(screen, {
      client: session.client,
      onAuthFailure: () => {
        session = null;
        location.hash = "#/login";
        route(root);
      },
    });
    activeDispose = view.dispose;
  }
}

export function start(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app root");
  window.addEventListener("hashchange", () => route(root));
  route(root);
}
