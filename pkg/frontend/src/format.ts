// Presentation helpers kept pure so they are trivially testable.

import type { Bbox } from "./types.js";

/** Confidences render to exactly two decimals everywhere. */
export function formatConfidence(value: number | null | undefined): string {
  if (value === null || value === undefined) return "–";
  return value.toFixed(2);
}

export function formatValue(value: unknown): string {
  if (value === null || value === undefined) return "(absent)";
  if (typeof value === "string") return value;
  if (typeof value === "number") return String(value);
  return JSON.stringify(value);
}

/** Normalized box corners to CSS percent geometry for an overlay div. */
export function bboxToCss(bbox: Bbox): {
  left: string;
  top: string;
  width: string;
  height: string;
} {
  const [x0, y0, x1, y1] = bbox;
  const pct = (v: number) => `${(v * 100).toFixed(2)}%`;
  return {
    left: pct(x0),
    top: pct(y0),
    width: pct(Math.max(0, x1 - x0)),
    height: pct(Math.max(0, y1 - y0)),
  };
}

export interface TextSegment {
  text: string;
  highlight: boolean;
}

/**
 * Split text into segments with the needle's occurrences marked, for the
 * text-line highlight fallback when no page image exists.
 */
export function highlightSegments(text: string, needle: string): TextSegment[] {
  if (!needle) return [{ text, highlight: false }];
  const segments: TextSegment[] = [];
  let rest = text;
  for (;;) {
    const at = rest.indexOf(needle);
    if (at < 0) break;
    if (at > 0) segments.push({ text: rest.slice(0, at), highlight: false });
    segments.push({ text: needle, highlight: true });
    rest = rest.slice(at + needle.length);
  }
  if (rest) segments.push({ text: rest, highlight: false });
  return segments.length ? segments : [{ text, highlight: false }];
}

export function formatStage(stage: string): string {
  return stage.replace(/_/g, " ");
}

export function bioLabelText(label: { tag: string; class_name: string }): string {
  return label.tag === "O" ? "O" : `${label.tag}-${label.class_name}`;
}
