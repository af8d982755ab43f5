/** Payload shapes of the detection service API (snake_case mirrors the wire format). */

export interface DetectOptions {
  ner: boolean;
  llm: boolean;
}

export interface Annotation {
  term_id: string;
  issue_id: string;
  surface: string;
  char_start: number;
  char_end: number;
  ambiguous: boolean;
  via_compound: boolean;
  llm_verdict: string;
  suggestion_note: string;
  suggested_terms: string[];
  categories: string[];
}

export interface AnnotatedDocument {
  document_id: string;
  language: string;
  text_sha256: string;
  annotations: Annotation[];
  diagnostics: unknown[];
  timing_ms: Record<string, number>;
}

export interface ManifestEntry {
  name: string;
  size: number;
}

export interface SkippedEntry {
  name: string;
  reason: string;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobInfo {
  job_id: string;
  state: JobState;
  submitted_at: string;
  completed_at: string;
  input_manifest: ManifestEntry[];
  skipped: SkippedEntry[];
  config: { language: string; ner: boolean; llm: boolean };
  error: string;
  result_url: string;
}

export interface BatchReport {
  documents: number;
  annotations: number;
  term_frequencies: Record<string, number>;
  category_counts: Record<string, number>;
  total_characters: number;
  wall_time_ms: number;
  chars_per_second: number;
  failures: { document_id: string; error: string }[];
  skipped: SkippedEntry[];
}

export interface VocabularyInfo {
  format_version: string;
  total_terms: number;
  total_issues: number;
  per_language: Record<string, number>;
  ambiguous_fraction: number;
  languages: string[];
}

export interface IssuePayload {
  id: string;
  description: string;
  suggestion_note: string;
  suggested_terms: string[];
  categories: string[];
}

export interface TermListItem {
  id: string;
  label: string;
  language: string;
  ambiguous: boolean;
  issue: IssuePayload;
}

export interface TermListPage {
  total: number;
  page: number;
  page_size: number;
  items: TermListItem[];
}

export interface HealthInfo {
  status: string;
  vocabulary_loaded: boolean;
  llm_reachable: boolean;
}
