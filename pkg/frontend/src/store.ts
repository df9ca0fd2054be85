/** Application state and the submit workflow.
 *
 * The store is the single source of truth for the UI, and the backend is
 * the single source of truth for the store: counters, labels, and scores
 * shown anywhere come from API payloads. The only client-side state is the
 * label buffer on the current batch (pending clicks before Submit Labels),
 * which survives tab switches and is kept intact when a submission fails.
 */

import { ApiClient, ApiError } from "./api.js";
import { cycleLabel } from "./labels.js";
import type {
  BatchPayload,
  DocumentView,
  ExplorePayload,
  HistoryEvent,
  Label,
  LabelEventBody,
  ProcessSettings,
  ResultsPayload,
  UploadResult,
} from "./types.js";

export interface BatchCard {
  docId: string;
  document: string;
  index: number;
  text: string;
  score: number;
  pending: Label | null;
}

export interface AppState {
  sessionId: string | null;
  uploads: UploadResult[];
  processed: boolean;
  query: string;
  batch: BatchCard[] | null;
  batchNumber: number;
  batchPhase: "search" | "explore" | null;
  explore: ExplorePayload | null;
  stopCounter: number;
  shouldStop: boolean;
  documents: DocumentView[];
  history: HistoryEvent[];
  results: ResultsPayload | null;
  exhausted: boolean;
  busy: boolean;
  error: string | null;
  errorRetryable: boolean;
}

export type Listener = (state: AppState) => void;

function freshState(): AppState {
  return {
    sessionId: null,
    uploads: [],
    processed: false,
    query: "",
    batch: null,
    batchNumber: 0,
    batchPhase: null,
    explore: null,
    stopCounter: 0,
    shouldStop: false,
    documents: [],
    history: [],
    results: null,
    exhausted: false,
    busy: false,
    error: null,
    errorRetryable: false,
  };
}

export class AppStore {
  state: AppState = freshState();
  private listeners: Listener[] = [];

  constructor(private api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private setError(err: unknown, retryable = false): void {
    this.state.error = err instanceof Error ? err.message : String(err);
    this.state.errorRetryable = retryable;
    this.emit();
  }

  clearError(): void {
    this.state.error = null;
    this.state.errorRetryable = false;
    this.emit();
  }

  private async guard<T>(work: () => Promise<T>, retryable = false): Promise<T | null> {
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    try {
      return await work();
    } catch (err) {
      this.setError(err, retryable);
      return null;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  private requireSession(): string {
    if (!this.state.sessionId) throw new Error("no session yet; upload documents first");
    return this.state.sessionId;
  }

  async ensureSession(): Promise<void> {
    if (this.state.sessionId) return;
    await this.guard(async () => {
      this.state.sessionId = await this.api.createSession();
    });
  }

  async uploadFile(filename: string, content: Uint8Array): Promise<void> {
    await this.ensureSession();
    await this.guard(async () => {
      const result = await this.api.uploadDocument(
        this.requireSession(), filename, content,
      );
      this.state.uploads.push(result);
    });
  }

  async processDocuments(settings: ProcessSettings): Promise<void> {
    await this.guard(async () => {
      await this.api.process(this.requireSession(), settings);
      this.state.processed = true;
      this.state.exhausted = false;
    });
  }

  private adoptBatch(batch: BatchPayload): void {
    this.state.batch = batch.items.map((item) => ({
      docId: item.doc_id,
      document: item.document,
      index: item.index,
      text: item.text,
      score: item.score,
      pending: null,
    }));
    this.state.batchNumber = batch.batch_number;
    this.state.batchPhase = batch.phase;
  }

  async runSearch(query: string): Promise<void> {
    await this.guard(async () => {
      this.state.query = query;
      const batch = await this.api.search(this.requireSession(), query);
      this.adoptBatch(batch);
      this.state.explore = null;
    });
  }

  async runExplore(): Promise<void> {
    await this.guard(async () => {
      try {
        const payload = await this.api.explore(this.requireSession());
        this.state.explore = payload;
        this.state.stopCounter = payload.stop_counter;
        this.state.shouldStop = payload.should_stop;
        this.adoptBatch(payload.batch);
      } catch (err) {
        if (err instanceof ApiError && err.code === "exhausted") {
          this.state.exhausted = true;
          this.state.batch = null;
          return;
        }
        throw err;
      }
    });
  }

  /** Click handler for batch cards: cycle the buffered label locally.
   * Nothing is sent until Submit Labels. */
  toggleCard(docId: string, index: number): void {
    const card = this.state.batch?.find((c) => c.docId === docId && c.index === index);
    if (!card) return;
    card.pending = cycleLabel(card.pending);
    this.emit();
  }

  pendingEvents(): LabelEventBody[] {
    return (this.state.batch ?? [])
      .filter((card) => card.pending !== null)
      .map((card) => ({
        doc_id: card.docId,
        index: card.index,
        label: card.pending as Label,
      }));
  }

  /** Submit the current batch's buffered labels, then fetch the next batch
   * of the same phase. On failure the buffer stays intact so nothing the
   * user clicked is lost; the action is retryable. */
  async submitBatch(): Promise<void> {
    const phase = this.state.batchPhase;
    await this.guard(async () => {
      const result = await this.api.submitLabels(
        this.requireSession(), this.pendingEvents(),
      );
      this.state.stopCounter = result.stop_counter;
      this.state.shouldStop = result.should_stop;
      this.state.batch = null;
      this.state.batchPhase = null;
    }, true);
    if (this.state.error) return;
    if (phase === "search") await this.runSearch(this.state.query);
    else if (phase === "explore") await this.runExplore();
  }

  /** Immediate relabel from the History or Documents tabs. */
  async relabel(docId: string, index: number, label: Label): Promise<void> {
    await this.guard(async () => {
      const result = await this.api.submitLabels(this.requireSession(), [
        { doc_id: docId, index, label },
      ]);
      this.state.stopCounter = result.stop_counter;
      this.state.shouldStop = result.should_stop;
    });
    await this.refreshDocuments();
    await this.refreshHistory();
    await this.refreshResults();
  }

  async refreshDocuments(): Promise<void> {
    if (!this.state.sessionId) return;
    await this.guard(async () => {
      this.state.documents = (await this.api.getDocuments(this.requireSession())).documents;
    });
  }

  async refreshHistory(): Promise<void> {
    if (!this.state.sessionId) return;
    await this.guard(async () => {
      this.state.history = (await this.api.getHistory(this.requireSession())).events;
    });
  }

  async refreshResults(): Promise<void> {
    if (!this.state.sessionId) return;
    await this.guard(async () => {
      const results = await this.api.getResults(this.requireSession());
      this.state.results = results;
      this.state.stopCounter = results.stop_counter;
      this.state.shouldStop = results.should_stop;
    });
  }

  async clearLabels(): Promise<void> {
    await this.guard(async () => {
      await this.api.clear(this.requireSession());
      this.state.batch = null;
      this.state.batchPhase = null;
      this.state.explore = null;
      this.state.history = [];
      this.state.results = null;
      this.state.stopCounter = 0;
      this.state.shouldStop = false;
      this.state.exhausted = false;
    });
  }

  downloadUrl(kind: "state-json" | "history-csv" | "summary-txt"): string {
    return this.api.downloadUrl(this.requireSession(), kind);
  }

  /** Indicator state for the colored box: "stop" once the backend says the
   * stop rule fired, "go" otherwise. */
  indicator(): { state: "go" | "stop"; counter: number } {
    return {
      state: this.state.shouldStop ? "stop" : "go",
      counter: this.state.stopCounter,
    };
  }
}
