// Decision draft: one action per flagged attribute, submit gated on
// completeness and on client-side kind checks for overrides.

import type { FlaggedAttribute, ReviewActionPayload } from "./types.js";

export type DraftAction =
  | { kind: "accept" }
  | { kind: "override"; raw: string };

export function draftKey(attr: Pick<FlaggedAttribute, "section_id" | "name">): string {
  return `${attr.section_id}/${attr.name}`;
}

const NUMBER_RE = /^[+-]?(\d+(\.\d*)?|\.\d+)$/;

export function parseOverride(
  raw: string,
  valueKind: FlaggedAttribute["value_kind"],
): { ok: true; value: unknown } | { ok: false; error: string } {
  const trimmed = raw.trim();
  if (trimmed === "") {
    return { ok: false, error: "override value required" };
  }
  if (valueKind === "number") {
    const cleaned = trimmed.replace(/^[$€£]/, "").replace(/,/g, "");
    if (!NUMBER_RE.test(cleaned)) {
      return { ok: false, error: "must be a number" };
    }
    return { ok: true, value: Number(cleaned) };
  }
  if (valueKind === "list-of-records") {
    try {
      const parsed = JSON.parse(trimmed) as unknown;
      if (!Array.isArray(parsed)) {
        return { ok: false, error: "must be a JSON array of records" };
      }
      return { ok: true, value: parsed };
    } catch {
      return { ok: false, error: "must be valid JSON" };
    }
  }
  return { ok: true, value: trimmed };
}

export class DecisionDraft {
  private actions = new Map<string, DraftAction>();

  constructor(private flagged: FlaggedAttribute[]) {}

  setAccept(key: string): void {
    this.actions.set(key, { kind: "accept" });
  }

  setOverride(key: string, raw: string): void {
    this.actions.set(key, { kind: "override", raw });
  }

  clear(key: string): void {
    this.actions.delete(key);
  }

  action(key: string): DraftAction | undefined {
    return this.actions.get(key);
  }

  /** Validation message for one attribute, or null when fine. */
  validationError(attr: FlaggedAttribute): string | null {
    const action = this.actions.get(draftKey(attr));
    if (!action) return "choose accept or override";
    if (action.kind === "accept") return null;
    const parsed = parseOverride(action.raw, attr.value_kind);
    return parsed.ok ? null : parsed.error;
  }

  /** Submit is enabled iff every flagged attribute has a valid action. */
  isComplete(): boolean {
    return this.flagged.every((attr) => this.validationError(attr) === null);
  }

  toActions(): ReviewActionPayload[] {
    return this.flagged.map((attr) => {
      const action = this.actions.get(draftKey(attr));
      if (!action) {
        throw new Error(`no action for ${draftKey(attr)}`);
      }
      if (action.kind === "accept") {
        return { section_id: attr.section_id, name: attr.name, action: "accept" };
      }
      const parsed = parseOverride(action.raw, attr.value_kind);
      if (!parsed.ok) {
        throw new Error(`invalid override for ${draftKey(attr)}: ${parsed.error}`);
      }
      return {
        section_id: attr.section_id,
        name: attr.name,
        action: "override",
        value: parsed.value,
      };
    });
  }
}
