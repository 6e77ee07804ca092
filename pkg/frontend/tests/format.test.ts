import { describe, expect, it } from "vitest";

import { bboxToCss, bioLabelText, formatConfidence, highlightSegments } from "../src/format.js";

describe("formatConfidence", () => {
  it("renders two decimals", () => {
    expect(formatConfidence(0.5)).toBe("0.50");
    expect(formatConfidence(0.954)).toBe("0.95");
    expect(formatConfidence(1)).toBe("1.00");
  });

  it("handles missing values", () => {
    expect(formatConfidence(null)).toBe("–");
  });
});

describe("bboxToCss", () => {
  it("converts normalized corners to percent geometry", () => {
    expect(bboxToCss([0.1, 0.2, 0.5, 0.6])).toEqual({
      left: "10.00%",
      top: "20.00%",
      width: "40.00%",
      height: "40.00%",
    });
  });
});

describe("highlightSegments", () => {
  it("marks every occurrence of the needle", () => {
    const segments = highlightSegments("a PO-7 and PO-7 again", "PO-7");
    expect(segments).toEqual([
      { text: "a ", highlight: false },
      { text: "PO-7", highlight: true },
      { text: " and ", highlight: false },
      { text: "PO-7", highlight: true },
      { text: " again", highlight: false },
    ]);
  });

  it("returns the whole text unhighlighted when absent", () => {
    expect(highlightSegments("nothing here", "PO-9")).toEqual([
      { text: "nothing here", highlight: false },
    ]);
  });

  it("tolerates empty needles", () => {
    expect(highlightSegments("text", "")).toEqual([{ text: "text", highlight: false }]);
  });
});

describe("bioLabelText", () => {
  it("renders tags with and without classes", () => {
    expect(bioLabelText({ tag: "B", class_name: "invoice" })).toBe("B-invoice");
    expect(bioLabelText({ tag: "O", class_name: "" })).toBe("O");
  });
});
