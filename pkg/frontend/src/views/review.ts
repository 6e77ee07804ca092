// Review screen: flagged attributes next to their source text, one
// accept/override decision each, submit gated on completeness.

import type { EngineApi } from "../api.js";
import { ApiError } from "../api.js";
import { clear, el } from "../dom.js";
import { DecisionDraft, draftKey } from "../draft.js";
import { bboxToCss, formatConfidence, formatValue, highlightSegments } from "../format.js";
import type { FlaggedAttribute, QueueItem } from "../types.js";

function evidencePanel(attr: FlaggedAttribute): HTMLElement {
  // Rectangle overlay when a page image exists; text highlight otherwise.
  if (attr.bbox && attr.image_refs.length > 0) {
    const page = el("div", { class: "page-box", role: "img" });
    page.title = `page image: ${attr.image_refs[0]}`;
    const overlay = el("div", { class: "bbox-overlay" });
    const css = bboxToCss(attr.bbox);
    overlay.style.left = css.left;
    overlay.style.top = css.top;
    overlay.style.width = css.width;
    overlay.style.height = css.height;
    page.append(overlay);
    return page;
  }
  const pre = el("pre", { class: "section-text" });
  for (const segment of highlightSegments(attr.section_text, formatValue(attr.value))) {
    if (segment.highlight) {
      pre.append(el("mark", { text: segment.text }));
    } else {
      pre.append(segment.text);
    }
  }
  return pre;
}

function attributeCard(
  attr: FlaggedAttribute,
  draft: DecisionDraft,
  onChange: () => void,
): HTMLElement {
  const key = draftKey(attr);
  const name = `decision-${key}`;

  const acceptRadio = el("input", {
    type: "radio",
    name,
    id: `${name}-accept`,
    "aria-label": `accept ${attr.name}`,
  }) as HTMLInputElement;
  const overrideRadio = el("input", {
    type: "radio",
    name,
    id: `${name}-override`,
    "aria-label": `override ${attr.name}`,
  }) as HTMLInputElement;
  const overrideInput = el("input", {
    type: "text",
    class: "override-value",
    placeholder: attr.value_kind === "number" ? "new numeric value" : "new value",
    "aria-label": `override value for ${attr.name}`,
  }) as HTMLInputElement;
  overrideInput.disabled = true;
  const problem = el("span", { class: "problem", role: "alert" });

  const sync = () => {
    if (overrideRadio.checked) {
      overrideInput.disabled = false;
      draft.setOverride(key, overrideInput.value);
    } else if (acceptRadio.checked) {
      overrideInput.disabled = true;
      draft.setAccept(key);
    }
    const error = draft.validationError(attr);
    problem.textContent = error ?? "";
    onChange();
  };
  acceptRadio.addEventListener("change", sync);
  overrideRadio.addEventListener("change", sync);
  overrideInput.addEventListener("input", sync);

  return el("section", { class: "attribute-card" }, [
    el("h3", { text: `${attr.class_name} · ${attr.name}` }),
    el("p", {}, [
      el("span", { class: "label", text: "value " }),
      el("code", { text: formatValue(attr.value) }),
      el("span", {
        class: "confidence",
        text: ` confidence ${formatConfidence(attr.confidence)}`,
      }),
    ]),
    attr.justification ? el("p", { class: "justification", text: attr.justification }) : "",
    evidencePanel(attr),
    el("fieldset", { class: "decision-controls" }, [
      el("legend", { text: "decision" }),
      el("label", { for: `${name}-accept` }, [acceptRadio, " accept"]),
      el("label", { for: `${name}-override` }, [overrideRadio, " override"]),
      overrideInput,
      problem,
    ]),
  ]);
}

export interface ReviewDeps {
  client: EngineApi;
  jobId: string;
  onDone: () => void;
}

export async function mountReview(root: HTMLElement, deps: ReviewDeps): Promise<void> {
  const { client, jobId, onDone } = deps;
  clear(root);
  root.append(el("h2", { text: "Review" }), el("p", { class: "status-line", text: "Loading…" }));

  let item: QueueItem | undefined;
  try {
    const queue = await client.queue();
    item = queue.find((q) => q.job_id === jobId);
  } catch (err) {
    clear(root);
    root.append(el("p", { class: "error-banner", text: `Cannot load job: ${String(err)}` }));
    return;
  }
  clear(root);
  if (!item) {
    root.append(
      el("h2", { text: "Review" }),
      el("p", {
        class: "error-banner",
        text: "This job is not awaiting review (already reviewed, or still processing).",
      }),
      el("a", { href: "#/queue", text: "Back to queue" }),
    );
    return;
  }

  const draft = new DecisionDraft(item.flagged);
  const banner = el("p", { class: "error-banner", role: "alert" });
  banner.hidden = true;
  const submit = el("button", { class: "primary", text: "Submit decision" }) as HTMLButtonElement;
  submit.disabled = true;
  const hint = el("span", { class: "submit-hint", text: "decide every flagged attribute to submit" });

  const refresh = () => {
    submit.disabled = !draft.isComplete();
    hint.hidden = !submit.disabled;
  };

  const cards = item.flagged.map((attr) => attributeCard(attr, draft, refresh));

  submit.addEventListener("click", async () => {
    submit.disabled = true;
    try {
      await client.submitReview(jobId, draft.toActions());
      onDone();
    } catch (err) {
      banner.hidden = false;
      if (err instanceof ApiError && err.status === 409) {
        banner.textContent = "Already reviewed by someone else; nothing was changed.";
      } else {
        banner.textContent = `Submission failed: ${String(err)}`;
        submit.disabled = !draft.isComplete();
      }
    }
  });

  root.append(
    el("h2", { text: `Review ${item.packet_id}` }),
    el("p", {
      class: "status-line",
      text: `${item.flagged.length} flagged attribute(s), threshold ${item.threshold}`,
    }),
    banner,
    ...cards,
    el("div", { class: "submit-row" }, [submit, hint, el("a", { href: "#/queue", text: "cancel" })]),
  );
  refresh();
}
