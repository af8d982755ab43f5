/**
 * Browser UI for the contentious-term detection service.
 *
 * Everything shown here originates from API responses; the page never
 * computes detections on its own. Highlights come from /api/v1/detect
 * annotations, the job list from /api/v1/jobs polling, and the batch
 * report from report.json inside the result archive.
 */

import {
  ApiError,
  detect,
  fetchResultZip,
  getHealth,
  getJob,
  getVocabulary,
  listTerms,
  submitBatch,
} from "./api.js";
import { renderAnnotatedText } from "./highlights.js";
import { renderReport, surfacesByTerm } from "./report.js";
import { entryText, readZip } from "./zip.js";
import type {
  AnnotatedDocument,
  Annotation,
  BatchReport,
  DetectOptions,
  JobInfo,
  TermListItem,
} from "./types.js";

const DEFAULT_POLL_INTERVAL_MS = 2000;

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (element === null) {
    throw new Error(`missing element #${id}`);
  }
  return element as T;
}

// DOM elements
const healthStatus = byId<HTMLSpanElement>("health-status");
const languageSelect = byId<HTMLSelectElement>("language-select");
const textInput = byId<HTMLTextAreaElement>("text-input");
const nerToggle = byId<HTMLInputElement>("toggle-ner");
const llmToggle = byId<HTMLInputElement>("toggle-llm");
const analyzeButton = byId<HTMLButtonElement>("analyze-btn");
const analyzeError = byId<HTMLDivElement>("analyze-error");
const resultStatus = byId<HTMLParagraphElement>("result-status");
const highlightView = byId<HTMLDivElement>("highlight-view");
const detailPanel = byId<HTMLElement>("detail-panel");
const detailTerm = byId<HTMLElement>("detail-term");
const detailVerdict = byId<HTMLElement>("detail-verdict");
const detailDescription = byId<HTMLElement>("detail-description");
const detailNote = byId<HTMLElement>("detail-note");
const detailSuggestions = byId<HTMLElement>("detail-suggestions");
const detailCategories = byId<HTMLElement>("detail-categories");
const batchFile = byId<HTMLInputElement>("batch-file");
const uploadButton = byId<HTMLButtonElement>("batch-upload-btn");
const batchError = byId<HTMLDivElement>("batch-error");
const jobsList = byId<HTMLDivElement>("jobs-list");

// State
let lastResult: AnnotatedDocument | null = null;
let analyzeController: AbortController | null = null;
const jobs = new Map<string, JobInfo>();
const reportedJobs = new Set<string>();
let pollTimer: ReturnType<typeof setInterval> | null = null;
const catalogCache = new Map<string, Map<string, TermListItem>>();

function currentOptions(): DetectOptions {
  return { ner: nerToggle.checked, llm: llmToggle.checked };
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.code}: ${error.message}`;
  }
  if (error instanceof Error) {
    return error.message;
  }
  return String(error);
}

// Single-text analysis

async function analyze(): Promise<void> {
  const text = textInput.value;
  if (text.trim() === "") {
    analyzeError.textContent = "enter some text to analyze";
    return;
  }
  // newer requests supersede older ones; at most one in flight
  analyzeController?.abort();
  const controller = new AbortController();
  analyzeController = controller;
  try {
    const result = await detect(text, languageSelect.value, currentOptions(), controller.signal);
    if (controller !== analyzeController) {
      return;
    }
    lastResult = result;
    renderResult(text, result);
    analyzeError.textContent = "";
  } catch (error) {
    if (controller.signal.aborted) {
      return;
    }
    // the previous result stays on screen
    analyzeError.textContent = describeError(error);
  }
}

function renderResult(text: string, result: AnnotatedDocument): void {
  highlightView.replaceChildren(renderAnnotatedText(text, result.annotations));
  const count = result.annotations.length;
  resultStatus.textContent =
    count === 0
      ? "no contentious terms detected"
      : `${count} contentious term${count === 1 ? "" : "s"} flagged`;
  detailPanel.hidden = true;
}

function onHighlightClick(event: Event): void {
  const target = event.target as HTMLElement | null;
  const mark = target?.closest<HTMLElement>("mark[data-annotation-index]");
  if (!mark || lastResult === null) {
    return;
  }
  const annotation = lastResult.annotations[Number(mark.dataset.annotationIndex)];
  if (annotation) {
    void openDetail(annotation, lastResult.language);
  }
}

async function openDetail(annotation: Annotation, language: string): Promise<void> {
  detailTerm.textContent = `${annotation.surface} (${annotation.term_id})`;
  detailVerdict.textContent = verdictLine(annotation);
  detailNote.textContent = annotation.suggestion_note;
  detailSuggestions.textContent = annotation.suggested_terms.join(", ") || "(none)";
  detailCategories.textContent = annotation.categories.join(", ") || "(none)";
  detailPanel.hidden = false;
  detailDescription.textContent = "loading description ...";
  try {
    const catalog = await termCatalog(language);
    detailDescription.textContent =
      catalog.get(annotation.term_id)?.issue.description ?? "(description unavailable)";
  } catch {
    detailDescription.textContent = "(description unavailable)";
  }
}

function verdictLine(annotation: Annotation): string {
  const parts: string[] = [];
  if (annotation.via_compound) {
    parts.push("matched inside a compound");
  }
  if (annotation.ambiguous) {
    parts.push(`llm verdict: ${annotation.llm_verdict}`);
  }
  return parts.join("; ");
}

/** Full term listing for one language, cached; keyed by term id. */
async function termCatalog(language: string): Promise<Map<string, TermListItem>> {
  const cached = catalogCache.get(language);
  if (cached) {
    return cached;
  }
  const catalog = new Map<string, TermListItem>();
  let page = 1;
  for (;;) {
    const batch = await listTerms({ language, page, pageSize: 500 });
    for (const item of batch.items) {
      catalog.set(item.id, item);
    }
    if (batch.items.length === 0 || page * batch.page_size >= batch.total) {
      break;
    }
    page++;
  }
  catalogCache.set(language, catalog);
  return catalog;
}

// Batch jobs

async function uploadBatch(): Promise<void> {
  const file = batchFile.files?.[0];
  if (!file) {
    batchError.textContent = "choose a ZIP file first";
    return;
  }
  batchError.textContent = "";
  try {
    const job = await submitBatch(file, languageSelect.value, currentOptions());
    jobs.set(job.job_id, job);
    renderJob(job);
    ensurePolling();
  } catch (error) {
    // the API's machine-readable code is surfaced verbatim
    batchError.textContent = describeError(error);
  }
}

function ensurePolling(): void {
  if (pollTimer !== null) {
    return;
  }
  const interval = Number(jobsList.dataset.pollInterval ?? "") || DEFAULT_POLL_INTERVAL_MS;
  pollTimer = setInterval(() => {
    void pollJobs();
  }, interval);
}

function stopPolling(): void {
  if (pollTimer !== null) {
    clearInterval(pollTimer);
    pollTimer = null;
  }
}

async function pollJobs(): Promise<void> {
  const pending = Array.from(jobs.values()).filter(
    (job) => job.state === "queued" || job.state === "running",
  );
  if (pending.length === 0) {
    stopPolling();
    return;
  }
  for (const job of pending) {
    try {
      const updated = await getJob(job.job_id);
      jobs.set(updated.job_id, updated);
      renderJob(updated);
      if (updated.state === "done" && !reportedJobs.has(updated.job_id)) {
        reportedJobs.add(updated.job_id);
        await showReport(updated);
      }
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        const card = jobCard(job.job_id);
        const state = card.querySelector<HTMLElement>(".job-state");
        if (state) {
          state.textContent = "not found on server";
        }
        jobs.delete(job.job_id);
      }
      // other poll failures are transient; retry on the next tick
    }
  }
}

async function showReport(job: JobInfo): Promise<void> {
  const entries = await readZip(await fetchResultZip(job.job_id));
  const reportJson = entryText(entries, "report.json");
  if (reportJson === null) {
    return;
  }
  const report = JSON.parse(reportJson) as BatchReport;
  const jsonl = entryText(entries, "annotations.jsonl") ?? "";
  const documents = jsonl
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line) as AnnotatedDocument);

  const labels = surfacesByTerm(documents);
  try {
    // canonical vocabulary labels win over inflected surfaces
    const catalog = await termCatalog(job.config.language);
    for (const [id, item] of catalog) {
      labels.set(id, item.label);
    }
  } catch {
    // catalog unavailable, surfaces are good enough
  }
  const slot = jobCard(job.job_id).querySelector(".job-report-slot");
  if (slot) {
    slot.replaceChildren(renderReport(report, labels));
  }
}

function jobCard(jobId: string): HTMLElement {
  const existing = jobsList.querySelector<HTMLElement>(
    `.job-card[data-job-id="${jobId}"]`,
  );
  if (existing) {
    return existing;
  }
  const card = document.createElement("article");
  card.className = "job-card";
  card.dataset.jobId = jobId;
  card.innerHTML =
    '<header><code class="job-id"></code> <span class="job-state"></span></header>' +
    '<p class="job-files"></p><p class="job-error"></p>' +
    '<a class="job-download" hidden download>download result</a>' +
    '<div class="job-report-slot"></div>';
  jobsList.prepend(card);
  return card;
}

function renderJob(job: JobInfo): void {
  const card = jobCard(job.job_id);
  const setText = (selector: string, value: string) => {
    const element = card.querySelector<HTMLElement>(selector);
    if (element) {
      element.textContent = value;
    }
  };
  setText(".job-id", job.job_id);
  setText(".job-state", job.state);
  const state = card.querySelector<HTMLElement>(".job-state");
  if (state) {
    state.dataset.state = job.state;
  }
  const skippedSuffix =
    job.skipped.length > 0 ? `, ${job.skipped.length} skipped` : "";
  setText(".job-files", `${job.input_manifest.length} files${skippedSuffix}`);
  setText(".job-error", job.state === "failed" ? job.error : "");
  const download = card.querySelector<HTMLAnchorElement>(".job-download");
  if (download && job.state === "done" && job.result_url !== "") {
    download.href = job.result_url;
    download.hidden = false;
  }
}

// Initialization

async function refreshHealth(): Promise<void> {
  try {
    const health = await getHealth();
    const llmNote = health.llm_reachable ? "llm reachable" : "llm offline";
    healthStatus.textContent = `service ${health.status}, ${llmNote}`;
  } catch {
    healthStatus.textContent = "service unreachable";
  }
}

async function init(): Promise<void> {
  analyzeButton.addEventListener("click", () => {
    void analyze();
  });
  uploadButton.addEventListener("click", () => {
    void uploadBatch();
  });
  highlightView.addEventListener("click", onHighlightClick);

  void refreshHealth();
  try {
    const vocabulary = await getVocabulary();
    languageSelect.replaceChildren(
      ...vocabulary.languages.map((language) => {
        const option = document.createElement("option");
        option.value = language;
        option.textContent = language;
        return option;
      }),
    );
    if (vocabulary.languages.includes("en")) {
      languageSelect.value = "en";
    }
  } catch (error) {
    analyzeError.textContent = describeError(error);
  }
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", () => {
    void init();
  });
} else {
  void init();
}
