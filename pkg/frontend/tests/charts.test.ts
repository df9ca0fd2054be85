import { describe, expect, it } from "vitest";

import { histogramBars, labelCountRows, perDocumentScoreBars } from "../src/charts.js";
import type { LabelCounts } from "../src/types.js";

describe("histogram bars", () => {
  it("one bar per bin, counts preserved exactly", () => {
    const bars = histogramBars({
      bin_edges: [0, 0.25, 0.5, 0.75, 1],
      counts: [4, 0, 1, 7],
    });
    expect(bars).toHaveLength(4);
    expect(bars.map((b) => b.value)).toEqual(["4", "0", "1", "7"]);
    expect(bars.map((b) => Number(b.value)).reduce((a, b) => a + b)).toBe(12);
    expect(bars[3].heightPct).toBe(100);
  });
});

describe("per-document score bars", () => {
  it("labels by filename and scales by mean score", () => {
    const bars = perDocumentScoreBars([
      { doc_id: "d001", filename: "a.txt", candidate_count: 5, mean_score: 0.5 },
      { doc_id: "d002", filename: "b.txt", candidate_count: 2, mean_score: 0.25 },
    ]);
    expect(bars[0]).toEqual({ label: "a.txt", value: "0.500", heightPct: 50 });
    expect(bars[1].heightPct).toBe(25);
  });
});

describe("per-document label counts", () => {
  it("displayed values equal the API payload byte for byte", () => {
    const payload: LabelCounts[] = [
      { doc_id: "d001", filename: "alpha.txt", relevant: 7, irrelevant: 12, unlabeled: 81 },
      { doc_id: "d002", filename: "beta.txt", relevant: 0, irrelevant: 3, unlabeled: 97 },
    ];
    const rows = labelCountRows(payload);
    for (let i = 0; i < payload.length; i++) {
      expect(rows[i].filename).toBe(payload[i].filename);
      expect(rows[i].relevant).toBe(String(payload[i].relevant));
      expect(rows[i].irrelevant).toBe(String(payload[i].irrelevant));
      expect(rows[i].unlabeled).toBe(String(payload[i].unlabeled));
    }
  });
});
