// Review queue: awaiting-review jobs, newest first, refreshed by polling.

import type { EngineApi } from "../api.js";
import { ApiError } from "../api.js";
import { clear, el } from "../dom.js";
import { formatConfidence } from "../format.js";
import { Poller } from "../poller.js";
import type { QueueItem } from "../types.js";

export interface QueueView {
  poller: Poller;
  dispose(): void;
}

export interface QueueDeps {
  client: EngineApi;
  /** Called when the session's token stops being accepted. */
  onAuthFailure?: () => void;
}

export function renderQueueItems(container: HTMLElement, items: QueueItem[]): void {
  clear(container);
  if (items.length === 0) {
    container.append(
      el("p", { class: "empty-state", text: "No documents are waiting for review." }),
    );
    return;
  }
  const table = el("table", { class: "queue-table" });
  table.append(
    el("thead", {}, [
      el("tr", {}, [
        el("th", { text: "Packet" }),
        el("th", { text: "Job" }),
        el("th", { text: "Flagged attributes" }),
        el("th", { text: "Min confidence" }),
        el("th", { text: "" }),
      ]),
    ]),
  );
  const body = el("tbody");
  for (const item of items) {
    const confidences = item.flagged
      .map((f) => f.confidence)
      .filter((c): c is number => c !== null);
    const minConf = confidences.length ? Math.min(...confidences) : null;
    const open = el("a", {
      href: `#/review/${encodeURIComponent(item.job_id)}`,
      class: "button",
      text: "Review",
    });
    body.append(
      el("tr", {}, [
        el("td", { text: item.packet_id }),
        el("td", { class: "mono", text: item.job_id }),
        el("td", {
          text: `${item.flagged.length}: ${item.flagged.map((f) => f.name).join(", ")}`,
        }),
        el("td", { text: formatConfidence(minConf) }),
        el("td", {}, [open]),
      ]),
    );
  }
  table.append(body);
  container.append(table);
}

export function mountQueue(root: HTMLElement, deps: EngineApi | QueueDeps): QueueView {
  const { client, onAuthFailure } = "client" in deps ? deps : { client: deps, onAuthFailure: undefined };
  clear(root);
  const heading = el("h2", { text: "Review queue" });
  const status = el("p", { class: "status-line", text: "Loading…" });
  const container = el("div");
  root.append(heading, status, container);

  const poller = new Poller(async () => {
    try {
      const items = await client.queue();
      items.sort((a, b) => b.created_at - a.created_at);
      status.textContent = `${items.length} job(s) awaiting review`;
      renderQueueItems(container, items);
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        // Expired or revoked token: back to the login prompt, no data shown.
        poller.stop();
        clear(container);
        status.textContent = "Session rejected; sign in again.";
        onAuthFailure?.();
        return;
      }
      status.textContent = `Cannot reach the engine: ${String(err)}`;
    }
  });
  poller.start();
  return { poller, dispose: () => poller.stop() };
}
