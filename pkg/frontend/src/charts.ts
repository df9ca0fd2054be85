/** Pure data-to-geometry transforms for the bar plots, plus tiny DOM
 * renderers. Displayed numbers are the API's values verbatim. */

import type { Histogram, LabelCounts, PerDocumentScore } from "./types.js";

export interface Bar {
  label: string;
  value: string;
  heightPct: number;
}

export function histogramBars(histogram: Histogram): Bar[] {
  const max = Math.max(...histogram.counts, 1);
  return histogram.counts.map((count, i) => ({
    label: `${histogram.bin_edges[i].toFixed(2)}–${histogram.bin_edges[i + 1].toFixed(2)}`,
    value: String(count),
    heightPct: (count / max) * 100,
  }));
}

export function perDocumentScoreBars(scores: PerDocumentScore[]): Bar[] {
  return scores.map((doc) => ({
    label: doc.filename,
    value: doc.mean_score.toFixed(3),
    heightPct: Math.max(0, Math.min(1, doc.mean_score)) * 100,
  }));
}

export interface CountRow {
  filename: string;
  relevant: string;
  irrelevant: string;
  unlabeled: string;
}

/** Per-document label counts, stringified straight from the payload. */
export function labelCountRows(counts: LabelCounts[]): CountRow[] {
  return counts.map((c) => ({
    filename: c.filename,
    relevant: String(c.relevant),
    irrelevant: String(c.irrelevant),
    unlabeled: String(c.unlabeled),
  }));
}

export function renderBars(container: HTMLElement, bars: Bar[], title: string): void {
  container.innerHTML = "";
  const heading = document.createElement("h4");
  heading.textContent = title;
  container.appendChild(heading);
  if (bars.length === 0 || bars.every((b) => b.value === "0")) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "nothing to plot yet";
    container.appendChild(empty);
    return;
  }
  const row = document.createElement("div");
  row.className = "bars";
  for (const bar of bars) {
    const wrapper = document.createElement("div");
    wrapper.className = "bar-wrapper";
    wrapper.title = `${bar.label}: ${bar.value}`;
    const value = document.createElement("span");
    value.className = "bar-value";
    value.textContent = bar.value;
    const column = document.createElement("div");
    column.className = "bar";
    column.style.height = `${Math.max(bar.heightPct, 2)}%`;
    wrapper.appendChild(value);
    wrapper.appendChild(column);
    row.appendChild(wrapper);
  }
  container.appendChild(row);
}

export function renderCountTable(container: HTMLElement, rows: CountRow[]): void {
  container.innerHTML = "";
  const table = document.createElement("table");
  table.className = "count-table";
  table.innerHTML =
    "<thead><tr><th>document</th><th>relevant</th><th>irrelevant</th><th>unlabeled</th></tr></thead>";
  const body = document.createElement("tbody");
  for (const row of rows) {
    const tr = document.createElement("tr");
    for (const cell of [row.filename, row.relevant, row.irrelevant, row.unlabeled]) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    body.appendChild(tr);
  }
  table.appendChild(body);
  container.appendChild(table);
}
