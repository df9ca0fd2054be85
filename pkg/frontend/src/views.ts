/** Tab renderers. Each render function repaints its tab from the store
 * state; wiring of events happens here, data lives in the store. */

import {
  histogramBars,
  labelCountRows,
  perDocumentScoreBars,
  renderBars,
  renderCountTable,
} from "./charts.js";
import { labelClass, toggleLabel } from "./labels.js";
import type { AppStore, BatchCard } from "./store.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

// ---------------------------------------------------------------------------
// Upload

export function renderUpload(store: AppStore): void {
  const list = byId("upload-list");
  list.innerHTML = "";
  for (const upload of store.state.uploads) {
    list.appendChild(
      el("li", undefined, `${upload.filename} — ${upload.sentence_count} sentences (${upload.doc_id})`),
    );
  }
  const status = byId("upload-status");
  status.textContent = store.state.processed
    ? "Documents processed. Head to the Search tab."
    : store.state.uploads.length
      ? "Ready to process."
      : "Upload up to five documents to begin.";
  const endpointRow = byId("provider-endpoint-row");
  const embedding = byId("setting-embedding") as HTMLSelectElement;
  endpointRow.style.display = embedding.value === "external-dense" ? "" : "none";
}

export function wireUpload(store: AppStore): void {
  const input = byId("file-input") as HTMLInputElement;
  input.addEventListener("change", async () => {
    for (const file of Array.from(input.files ?? [])) {
      const bytes = new Uint8Array(await file.arrayBuffer());
      await store.uploadFile(file.name, bytes);
    }
    input.value = "";
  });
  (byId("setting-embedding") as HTMLSelectElement).addEventListener("change", () =>
    renderUpload(store),
  );
  byId("process-button").addEventListener("click", async () => {
    const embedding = (byId("setting-embedding") as HTMLSelectElement).value;
    const endpoint = (byId("setting-endpoint") as HTMLInputElement).value.trim();
    await store.processDocuments({
      embedding,
      classifier: (byId("setting-classifier") as HTMLSelectElement).value,
      batch_size: Number((byId("setting-batch-size") as HTMLInputElement).value) || 10,
      stop_threshold: Number((byId("setting-stop") as HTMLInputElement).value) || 3,
      ...(embedding === "external-dense" && endpoint
        ? { provider_endpoint: endpoint }
        : {}),
    });
  });
}

// ---------------------------------------------------------------------------
// Batch cards (shared by Search and Explore)

function renderCards(container: HTMLElement, store: AppStore): void {
  container.innerHTML = "";
  const cards = store.state.batch;
  if (store.state.exhausted) {
    container.appendChild(
      el("p", "empty-state", "Every sentence has been shown — review your Results."),
    );
    return;
  }
  if (!cards) {
    container.appendChild(el("p", "empty-state", "No batch yet."));
    return;
  }
  for (const card of cards) {
    container.appendChild(buildCard(card, store));
  }
}

function buildCard(card: BatchCard, store: AppStore): HTMLElement {
  const node = el("div", `sentence-card ${labelClass(card.pending)}`);
  node.appendChild(el("p", "sentence-text", card.text));
  node.appendChild(
    el("span", "sentence-meta", `${card.document}, sentence ${card.index} · score ${card.score.toFixed(3)}`),
  );
  node.addEventListener("click", () => store.toggleCard(card.docId, card.index));
  return node;
}

// ---------------------------------------------------------------------------
// Search

export function renderSearch(store: AppStore): void {
  renderCards(byId("search-batch"), store);
  byId("search-submit").toggleAttribute("disabled", store.state.batch === null);
}

export function wireSearch(store: AppStore): void {
  byId("search-button").addEventListener("click", () => {
    const query = (byId("query-input") as HTMLTextAreaElement).value;
    void store.runSearch(query);
  });
  byId("search-submit").addEventListener("click", () => void store.submitBatch());
}

// ---------------------------------------------------------------------------
// Explore

export function renderExplore(store: AppStore): void {
  const indicator = byId("stop-indicator");
  const { state, counter } = store.indicator();
  indicator.className = `indicator indicator-${state}`;
  indicator.textContent =
    state === "stop"
      ? `Nothing relevant in ${counter} straight turns — consider stopping`
      : `Turns without anything relevant: ${counter}`;

  const explore = store.state.explore;
  if (explore) {
    renderBars(
      byId("explore-histogram"), histogramBars(explore.score_histogram),
      "Recommendation score distribution",
    );
    renderBars(
      byId("explore-per-doc"), perDocumentScoreBars(explore.per_document_scores),
      "Mean score by document",
    );
  }
  renderCards(byId("explore-batch"), store);
  byId("explore-submit").toggleAttribute("disabled", store.state.batch === null);
}

export function wireExplore(store: AppStore): void {
  byId("explore-button").addEventListener("click", () => void store.runExplore());
  byId("explore-submit").addEventListener("click", () => void store.submitBatch());
}

// ---------------------------------------------------------------------------
// Documents

export function renderDocuments(store: AppStore): void {
  const select = byId("documents-select") as HTMLSelectElement;
  const previous = select.value;
  select.innerHTML = "";
  for (const doc of store.state.documents) {
    const option = el("option", undefined, doc.filename);
    option.value = doc.doc_id;
    select.appendChild(option);
  }
  if (previous) select.value = previous;
  const container = byId("documents-sentences");
  container.innerHTML = "";
  const doc = store.state.documents.find((d) => d.doc_id === select.value);
  if (!doc) {
    container.appendChild(el("p", "empty-state", "Upload and process documents first."));
    return;
  }
  for (const sentence of doc.sentences) {
    const node = el("div", `sentence-card ${labelClass(sentence.label)}`);
    node.appendChild(el("p", "sentence-text", `${sentence.index}. ${sentence.text}`));
    if (sentence.label) {
      node.addEventListener("click", () =>
        void store.relabel(doc.doc_id, sentence.index, toggleLabel(sentence.label!)),
      );
    } else if (sentence.shown) {
      node.addEventListener("click", () =>
        void store.relabel(doc.doc_id, sentence.index, "relevant"),
      );
    } else {
      node.classList.add("not-shown");
      node.title = "Not yet recommended; label it from Search or Explore.";
    }
    container.appendChild(node);
  }
}

export function wireDocuments(store: AppStore): void {
  byId("documents-select").addEventListener("change", () => renderDocuments(store));
}

// ---------------------------------------------------------------------------
// History

export function renderHistory(store: AppStore): void {
  const container = byId("history-list");
  container.innerHTML = "";
  if (store.state.history.length === 0) {
    container.appendChild(el("p", "empty-state", "No labels submitted yet."));
    return;
  }
  for (const event of store.state.history) {
    const node = el("div", `sentence-card ${labelClass(event.label)}`);
    node.appendChild(el("p", "sentence-text", event.text));
    node.appendChild(
      el(
        "span", "sentence-meta",
        `#${event.position} · ${event.document}, sentence ${event.sentence_index} · ${event.phase} batch ${event.batch}`,
      ),
    );
    node.addEventListener("click", () =>
      void store.relabel(event.doc_id, event.sentence_index, toggleLabel(event.label)),
    );
    container.appendChild(node);
  }
}

export function wireHistory(store: AppStore): void {
  byId("history-clear").addEventListener("click", async () => {
    await store.clearLabels();
    await store.refreshHistory();
  });
  byId("history-download").addEventListener("click", () => {
    window.location.href = store.downloadUrl("history-csv");
  });
}

// ---------------------------------------------------------------------------
// Results

export function renderResults(store: AppStore): void {
  const results = store.state.results;
  const container = byId("results-sentences");
  container.innerHTML = "";
  if (!results) {
    container.appendChild(el("p", "empty-state", "Nothing here yet — label some sentences first."));
    return;
  }
  renderCountTable(byId("results-counts"), labelCountRows(results.label_counts));
  const relevantBars = results.label_counts.map((c) => ({
    label: c.filename,
    value: String(c.relevant),
    heightPct:
      (c.relevant / Math.max(...results.label_counts.map((x) => x.relevant), 1)) * 100,
  }));
  renderBars(byId("results-plot"), relevantBars, "Relevant sentences by document");
  byId("results-query").textContent = results.query || "(no query yet)";
  for (const sentence of results.relevant_sentences) {
    const node = el("div", "sentence-card label-green");
    node.appendChild(el("p", "sentence-text", sentence.text));
    node.appendChild(
      el("span", "sentence-meta", `${sentence.document}, sentence ${sentence.index}`),
    );
    container.appendChild(node);
  }
}

export function wireResults(store: AppStore): void {
  byId("results-download-txt").addEventListener("click", () => {
    window.location.href = store.downloadUrl("summary-txt");
  });
  byId("results-download-json").addEventListener("click", () => {
    window.location.href = store.downloadUrl("state-json");
  });
}

// ---------------------------------------------------------------------------
// Error banner

export function renderError(store: AppStore): void {
  const banner = byId("error-banner");
  if (!store.state.error) {
    banner.style.display = "none";
    return;
  }
  banner.style.display = "";
  banner.innerHTML = "";
  banner.appendChild(el("span", undefined, store.state.error));
  if (store.state.errorRetryable) {
    const retry = el("button", "retry-button", "Retry");
    retry.addEventListener("click", () => void store.submitBatch());
    banner.appendChild(retry);
  }
  const dismiss = el("button", "dismiss-button", "Dismiss");
  dismiss.addEventListener("click", () => store.clearError());
  banner.appendChild(dismiss);
}
