/** Bootstrap: tab switching plus store wiring. One session per tab. */

import { ApiClient } from "./api.js";
import { AppStore } from "./store.js";
import {
  renderDocuments,
  renderError,
  renderExplore,
  renderHistory,
  renderResults,
  renderSearch,
  renderUpload,
  wireDocuments,
  wireExplore,
  wireHistory,
  wireResults,
  wireSearch,
  wireUpload,
} from "./views.js";

const TABS = ["tutorial", "upload", "documents", "search", "explore", "history", "results"];

const store = new AppStore(new ApiClient());
let activeTab = "upload";

function renderActiveTab(): void {
  renderError(store);
  switch (activeTab) {
    case "upload":
      renderUpload(store);
      break;
    case "documents":
      renderDocuments(store);
      break;
    case "search":
      renderSearch(store);
      break;
    case "explore":
      renderExplore(store);
      break;
    case "history":
      renderHistory(store);
      break;
    case "results":
      renderResults(store);
      break;
  }
}

async function activateTab(name: string): Promise<void> {
  activeTab = name;
  for (const tab of TABS) {
    document.getElementById(`tab-${tab}`)?.classList.toggle("active", tab === name);
    const panel = document.getElementById(`panel-${tab}`);
    if (panel) panel.style.display = tab === name ? "" : "none";
  }
  // pull fresh views from the backend when entering read-mostly tabs
  if (name === "documents") await store.refreshDocuments();
  if (name === "history") await store.refreshHistory();
  if (name === "results") await store.refreshResults();
  renderActiveTab();
}

function boot(): void {
  for (const tab of TABS) {
    document
      .getElementById(`tab-${tab}`)
      ?.addEventListener("click", () => void activateTab(tab));
  }
  wireUpload(store);
  wireSearch(store);
  wireExplore(store);
  wireDocuments(store);
  wireHistory(store);
  wireResults(store);
  store.subscribe(() => renderActiveTab());
  void activateTab("upload");
}

document.addEventListener("DOMContentLoaded", boot);
