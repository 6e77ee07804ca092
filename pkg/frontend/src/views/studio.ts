// Studio: read-only browser over a job's intermediate outputs.

import type { EngineApi } from "../api.js";
import { clear, el } from "../dom.js";
import { bioLabelText, formatConfidence, formatStage, formatValue } from "../format.js";
import { Poller } from "../poller.js";
import type { Intermediates } from "../types.js";

const TABS = ["OCR", "Labels", "Sections", "Extraction", "Determinations", "Errors"] as const;
type TabName = (typeof TABS)[number];

function placeholder(): HTMLElement {
  return el("p", { class: "empty-state", text: "stage not yet run" });
}

function ocrTab(data: Intermediates): HTMLElement {
  if (!data.ocr) return placeholder();
  const container = el("div");
  for (const page of data.ocr) {
    container.append(el("h4", { text: `page ${page.index}` }));
    const table = el("table", { class: "detail-table" });
    for (const line of page.lines) {
      table.append(
        el("tr", {}, [
          el("td", { class: "mono", text: line.text }),
          el("td", { text: formatConfidence(line.confidence / 100) }),
        ]),
      );
    }
    container.append(table);
  }
  return container;
}

function labelsTab(data: Intermediates): HTMLElement {
  if (!data.bio_labels) return placeholder();
  const table = el("table", { class: "detail-table" });
  data.bio_labels.forEach((label, page) => {
    table.append(
      el("tr", {}, [
        el("td", { text: `page ${page}` }),
        el("td", { class: "mono", text: bioLabelText(label) }),
      ]),
    );
  });
  return table;
}

function sectionsTab(data: Intermediates): HTMLElement {
  if (!data.sections) return placeholder();
  const table = el("table", { class: "detail-table" });
  for (const section of data.sections) {
    table.append(
      el("tr", {}, [
        el("td", { class: "mono", text: section.section_id }),
        el("td", { text: section.class_name }),
        el("td", { text: `pages ${section.page_indices.join(", ")}` }),
      ]),
    );
  }
  return table;
}

function extractionTab(data: Intermediates): HTMLElement {
  if (!data.extraction) return placeholder();
  const container = el("div");
  for (const entry of data.extraction) {
    container.append(
      el("h4", { text: `${entry.section_id} (${entry.class_name}) — ${entry.status}` }),
    );
    if (entry.status === "failed") {
      container.append(
        el("p", { class: "error-banner", text: entry.failure_reason ?? "failed" }),
      );
      continue;
    }
    const table = el("table", { class: "detail-table" });
    for (const attr of entry.attributes) {
      table.append(
        el("tr", {}, [
          el("td", { text: attr.name }),
          el("td", { class: "mono", text: formatValue(attr.value) }),
          el("td", { text: formatConfidence(attr.confidence) }),
          el("td", { text: attr.provenance }),
        ]),
      );
    }
    container.append(table);
    if (data.raw_outputs) {
      const raw = data.raw_outputs.find((r) => r.section_id === entry.section_id);
      if (raw?.raw_response) {
        const details = el("details", {}, [
          el("summary", { text: "raw backend output" }),
          el("pre", { class: "mono", text: raw.raw_response }),
        ]);
        container.append(details);
      }
    }
  }
  return container;
}

function determinationsTab(data: Intermediates): HTMLElement {
  if (!data.determinations) return placeholder();
  const container = el("div");
  for (const det of data.determinations) {
    container.append(
      el("section", { class: `determination ${det.status}` }, [
        el("h4", { text: `${det.rule_id}: ${det.status.replace(/_/g, " ")}` }),
        el("p", { class: "mono", text: det.reasoning }),
        det.recommendations.length
          ? el("p", { text: `recommendations: ${det.recommendations.join("; ")}` })
          : "",
      ]),
    );
  }
  return container;
}

function errorsTab(data: Intermediates): HTMLElement {
  if (data.error_log.length === 0) {
    return el("p", { class: "empty-state", text: "no errors recorded" });
  }
  const list = el("ul", { class: "error-list" });
  for (const line of data.error_log) {
    list.append(el("li", { class: "mono", text: line }));
  }
  return list;
}

export function renderTab(name: TabName, data: Intermediates): HTMLElement {
  switch (name) {
    case "OCR":
      return ocrTab(data);
    case "Labels":
      return labelsTab(data);
    case "Sections":
      return sectionsTab(data);
    case "Extraction":
      return extractionTab(data);
    case "Determinations":
      return determinationsTab(data);
    case "Errors":
      return errorsTab(data);
  }
}

export interface StudioView {
  poller: Poller;
  dispose(): void;
}

const TERMINAL = new Set(["complete", "failed", "dead_lettered", "awaiting_review"]);

export function mountStudio(root: HTMLElement, client: EngineApi, jobId: string): StudioView {
  clear(root);
  const heading = el("h2", { text: `Studio — ${jobId}` });
  const status = el("p", { class: "status-line", text: "Loading…" });
  const tabBar = el("div", { class: "tab-bar", role: "tablist" });
  const panel = el("div", { class: "tab-panel" });
  root.append(heading, status, tabBar, panel);

  let current: TabName = "OCR";
  let latest: Intermediates | null = null;

  const buttons = new Map<TabName, HTMLButtonElement>();
  for (const name of TABS) {
    const button = el("button", { role: "tab", text: name }) as HTMLButtonElement;
    button.addEventListener("click", () => {
      current = name;
      paint();
    });
    buttons.set(name, button);
    tabBar.append(button);
  }

  const paint = () => {
    for (const [name, button] of buttons) {
      button.setAttribute("aria-selected", String(name === current));
      button.classList.toggle("active", name === current);
    }
    clear(panel);
    if (latest) panel.append(renderTab(current, latest));
  };

  const poller = new Poller(async () => {
    try {
      latest = await client.intermediates(jobId);
      status.textContent = `stage: ${formatStage(latest.stage)}`;
      paint();
      if (TERMINAL.has(latest.stage)) poller.stop();
    } catch (err) {
      status.textContent = `not found or unreachable: ${String(err)}`;
      poller.stop();
    }
  });
  poller.start();
  return { poller, dispose: () => poller.stop() };
}
