import { describe, expect, it } from "vitest";

import { DecisionDraft, draftKey, parseOverride } from "../src/draft.js";
import type { FlaggedAttribute } from "../src/types.js";

function flagged(name: string, valueKind: FlaggedAttribute["value_kind"] = "string"): FlaggedAttribute {
  return {
    section_id: "s0",
    class_name: "invoice",
    name,
    value_kind: valueKind,
    value: "old",
    confidence: 0.5,
    justification: null,
    bbox: null,
    section_text: "text",
    image_refs: [],
  };
}

describe("parseOverride", () => {
  it("accepts plain strings and trims them", () => {
    expect(parseOverride("  PO-8  ", "string")).toEqual({ ok: true, value: "PO-8" });
  });

  it("rejects empty overrides", () => {
    expect(parseOverride("   ", "string").ok).toBe(false);
  });

  it("parses numbers with currency and separators", () => {
    expect(parseOverride("$1,284.50", "number")).toEqual({ ok: true, value: 1284.5 });
    expect(parseOverride("12", "number")).toEqual({ ok: true, value: 12 });
  });

  it("rejects non-numeric values for number kinds", () => {
    const outcome = parseOverride("twelve", "number");
    expect(outcome.ok).toBe(false);
    if (!outcome.ok) expect(outcome.error).toMatch(/number/);
  });

  it("expects JSON arrays for list kinds", () => {
    expect(parseOverride('[{"amount": 5}]', "list-of-records").ok).toBe(true);
    expect(parseOverride('{"amount": 5}', "list-of-records").ok).toBe(false);
    expect(parseOverride("nope", "list-of-records").ok).toBe(false);
  });
});

describe("DecisionDraft", () => {
  it("is incomplete until every flagged attribute has an action", () => {
    const attrs = [flagged("po_number"), flagged("total", "number")];
    const draft = new DecisionDraft(attrs);
    expect(draft.isComplete()).toBe(false);
    draft.setAccept(draftKey(attrs[0]));
    expect(draft.isComplete()).toBe(false);
    draft.setAccept(draftKey(attrs[1]));
    expect(draft.isComplete()).toBe(true);
  });

  it("blocks kind-invalid overrides with a message", () => {
    const attr = flagged("total", "number");
    const draft = new DecisionDraft([attr]);
    draft.setOverride(draftKey(attr), "words");
    expect(draft.isComplete()).toBe(false);
    expect(draft.validationError(attr)).toMatch(/number/);
    draft.setOverride(draftKey(attr), "120.0");
    expect(draft.validationError(attr)).toBeNull();
    expect(draft.isComplete()).toBe(true);
  });

  it("clearing an action re-blocks submission", () => {
    const attr = flagged("po_number");
    const draft = new DecisionDraft([attr]);
    draft.setAccept(draftKey(attr));
    expect(draft.isComplete()).toBe(true);
    draft.clear(draftKey(attr));
    expect(draft.isComplete()).toBe(false);
  });

  it("builds the decision payload with coerced values", () => {
    const attrs = [flagged("po_number"), flagged("total", "number")];
    const draft = new DecisionDraft(attrs);
    draft.setAccept(draftKey(attrs[0]));
    draft.setOverride(draftKey(attrs[1]), "$99.50");
    expect(draft.toActions()).toEqual([
      { section_id: "s0", name: "po_number", action: "accept" },
      { section_id: "s0", name: "total", action: "override", value: 99.5 },
    ]);
  });

  it("refuses to build payloads from incomplete drafts", () => {
    const draft = new DecisionDraft([flagged("po_number")]);
    expect(() => draft.toActions()).toThrow(/no action/);
  });
});
