/** Thin typed client over the detection service HTTP API. */

import type {
  AnnotatedDocument,
  DetectOptions,
  HealthInfo,
  JobInfo,
  TermListPage,
  VocabularyInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Raise the service's {code, message} error shape as an ApiError. */
async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) {
    return;
  }
  let code = `http_${response.status}`;
  let message = response.statusText || "request failed";
  try {
    const body: unknown = await response.json();
    if (body && typeof body === "object") {
      const record = body as Record<string, unknown>;
      if (typeof record.code === "string") {
        code = record.code;
      }
      if (typeof record.message === "string") {
        message = record.message;
      }
    }
  } catch {
    // non-JSON error body, keep the HTTP fallback
  }
  throw new ApiError(response.status, code, message);
}

export async function detect(
  text: string,
  language: string,
  options: DetectOptions,
  signal?: AbortSignal,
): Promise<AnnotatedDocument> {
  const response = await fetch("/api/v1/detect", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ text, language, options }),
    signal,
  });
  await raiseForStatus(response);
  return (await response.json()) as AnnotatedDocument;
}

export async function submitBatch(
  file: Blob,
  language: string,
  options: DetectOptions,
): Promise<JobInfo> {
  const params = new URLSearchParams({
    language,
    ner: String(options.ner),
    llm: String(options.llm),
  });
  const form = new FormData();
  form.append("file", file, file instanceof File ? file.name : "upload.zip");
  const response = await fetch(`/api/v1/batch?${params.toString()}`, {
    method: "POST",
    body: form,
  });
  await raiseForStatus(response);
  return (await response.json()) as JobInfo;
}

export async function getJob(jobId: string): Promise<JobInfo> {
  const response = await fetch(`/api/v1/jobs/${encodeURIComponent(jobId)}`);
  await raiseForStatus(response);
  return (await response.json()) as JobInfo;
}

export async function fetchResultZip(jobId: string): Promise<ArrayBuffer> {
  const response = await fetch(`/api/v1/jobs/${encodeURIComponent(jobId)}/result`);
  await raiseForStatus(response);
  return await response.arrayBuffer();
}

export async function getVocabulary(): Promise<VocabularyInfo> {
  const response = await fetch("/api/v1/vocabulary");
  await raiseForStatus(response);
  return (await response.json()) as VocabularyInfo;
}

export interface TermListQuery {
  language?: string;
  query?: string;
  page?: number;
  pageSize?: number;
}

export async function listTerms(options: TermListQuery = {}): Promise<TermListPage> {
  const params = new URLSearchParams();
  if (options.language) {
    params.set("language", options.language);
  }
  if (options.query) {
    params.set("query", options.query);
  }
  params.set("page", String(options.page ?? 1));
  params.set("page_size", String(options.pageSize ?? 50));
  const response = await fetch(`/api/v1/vocabulary/terms?${params.toString()}`);
  await raiseForStatus(response);
  return (await response.json()) as TermListPage;
}

export async function getHealth(): Promise<HealthInfo> {
  const response = await fetch("/healthz");
  await raiseForStatus(response);
  return (await response.json()) as HealthInfo;
}
