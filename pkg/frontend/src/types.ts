/** Payload shapes of the backend API. The UI renders these verbatim; it
 * never derives scores or labels on its own. */

export type Label = "relevant" | "irrelevant";

export interface BatchItem {
  doc_id: string;
  document: string;
  index: number;
  text: string;
  score: number;
}

export interface BatchPayload {
  batch_number: number;
  phase: "search" | "explore";
  items: BatchItem[];
}

export interface Histogram {
  bin_edges: number[];
  counts: number[];
}

export interface PerDocumentScore {
  doc_id: string;
  filename: string;
  candidate_count: number;
  mean_score: number;
}

export interface ExplorePayload {
  batch: BatchPayload;
  used_classifier: boolean;
  score_histogram: Histogram;
  per_document_scores: PerDocumentScore[];
  stop_counter: number;
  should_stop: boolean;
}

export interface SubmitResult {
  stop_counter: number;
  should_stop: boolean;
}

export interface UploadResult {
  doc_id: string;
  filename: string;
  sentence_count: number;
}

export interface SentenceView {
  index: number;
  text: string;
  label: Label | null;
  shown: boolean;
}

export interface DocumentView {
  doc_id: string;
  filename: string;
  sentence_count: number;
  sentences: SentenceView[];
}

export interface HistoryEvent {
  position: number;
  doc_id: string;
  document: string;
  sentence_index: number;
  phase: string;
  batch: number;
  label: Label;
  text: string;
}

export interface LabelCounts {
  doc_id: string;
  filename: string;
  relevant: number;
  irrelevant: number;
  unlabeled: number;
}

export interface RelevantSentence {
  doc_id: string;
  document: string;
  index: number;
  text: string;
}

export interface ResultsPayload {
  query: string;
  label_counts: LabelCounts[];
  relevant_sentences: RelevantSentence[];
  shown_count: number;
  total_sentences: number;
  stop_counter: number;
  should_stop: boolean;
}

export interface ProcessSettings {
  embedding: string;
  classifier: string;
  batch_size: number;
  stop_threshold: number;
  provider_endpoint?: string;
}

export interface LabelEventBody {
  doc_id: string;
  index: number;
  label: Label;
}
