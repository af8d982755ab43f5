/** Shared scaffolding: page markup, fetch interception, ZIP building, payloads. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { vi } from "vitest";
import type {
  AnnotatedDocument,
  Annotation,
  BatchReport,
  JobInfo,
  JobState,
  VocabularyInfo,
} from "../src/types.js";

const HERE = dirname(fileURLToPath(import.meta.url));

/** Body markup of the real page, so tests exercise the shipped structure. */
export function pageMarkup(): string {
  const html = readFileSync(join(HERE, "..", "index.html"), "utf-8");
  const body = html.match(/<body>([\s\S]*)<\/body>/);
  if (!body || body[1] === undefined) {
    throw new Error("index.html has no body");
  }
  return body[1].replace(/<script[\s\S]*?<\/script>/g, "");
}

export interface RecordedCall {
  url: string;
  method: string;
  body: BodyInit | null | undefined;
  signal: AbortSignal | null | undefined;
}

export type FetchHandler = (
  url: string,
  init: RequestInit,
  call: RecordedCall,
) => Response | Promise<Response>;

/** Replace global fetch with a recording handler. Undo with vi.unstubAllGlobals(). */
export function installFetch(handler: FetchHandler): RecordedCall[] {
  const calls: RecordedCall[] = [];
  vi.stubGlobal(
    "fetch",
    async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
      const url = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
      const effective = init ?? {};
      const call: RecordedCall = {
        url,
        method: effective.method ?? "GET",
        body: effective.body,
        signal: effective.signal,
      };
      calls.push(call);
      if (effective.signal?.aborted) {
        throw new DOMException("The operation was aborted.", "AbortError");
      }
      return handler(url, effective, call);
    },
  );
  return calls;
}

export function jsonResponse(data: unknown, status = 200): Response {
  return new Response(JSON.stringify(data), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function binaryResponse(data: Uint8Array, status = 200): Response {
  return new Response(data.slice().buffer as ArrayBuffer, {
    status,
    headers: { "Content-Type": "application/zip" },
  });
}

/** A promise plus its resolve handle, for fetches a test keeps pending. */
export function deferred<T>(): { promise: Promise<T>; resolve: (value: T) => void } {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}

export async function flush(rounds = 8): Promise<void> {
  for (let i = 0; i < rounds; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 2000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) {
      throw new Error("condition not met in time");
    }
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}

// ZIP construction (stored or deflated entries, enough for reader tests
// and for faking job result archives)

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(data: Uint8Array): number {
  let crc = 0xffffffff;
  for (const byte of data) {
    crc = CRC_TABLE[(crc ^ byte) & 0xff]! ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

async function deflateRaw(data: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([data as BlobPart])
    .stream()
    .pipeThrough(new CompressionStream("deflate-raw"));
  return new Uint8Array(await new Response(stream).arrayBuffer());
}

class ByteWriter {
  private chunks: Uint8Array[] = [];
  length = 0;

  bytes(data: Uint8Array): void {
    this.chunks.push(data);
    this.length += data.length;
  }

  u16(value: number): void {
    const buffer = new Uint8Array(2);
    new DataView(buffer.buffer).setUint16(0, value, true);
    this.bytes(buffer);
  }

  u32(value: number): void {
    const buffer = new Uint8Array(4);
    new DataView(buffer.buffer).setUint32(0, value >>> 0, true);
    this.bytes(buffer);
  }

  output(): Uint8Array {
    const out = new Uint8Array(this.length);
    let offset = 0;
    for (const chunk of this.chunks) {
      out.set(chunk, offset);
      offset += chunk.length;
    }
    return out;
  }
}

export interface ZipBuildOptions {
  deflate?: boolean;
}

/** Assemble a ZIP archive from name -> content pairs. */
export async function makeZip(
  entries: Record<string, string | Uint8Array>,
  options: ZipBuildOptions = {},
): Promise<Uint8Array> {
  const encoder = new TextEncoder();
  const writer = new ByteWriter();
  const central: {
    name: Uint8Array;
    method: number;
    crc: number;
    compressedSize: number;
    size: number;
    offset: number;
  }[] = [];

  for (const [name, content] of Object.entries(entries)) {
    const nameBytes = encoder.encode(name);
    const data = typeof content === "string" ? encoder.encode(content) : content;
    const method = options.deflate && data.length > 0 ? 8 : 0;
    const payload = method === 8 ? await deflateRaw(data) : data;
    const record = {
      name: nameBytes,
      method,
      crc: crc32(data),
      compressedSize: payload.length,
      size: data.length,
      offset: writer.length,
    };
    central.push(record);
    writer.u32(0x04034b50);
    writer.u16(20); // version needed
    writer.u16(0); // flags
    writer.u16(method);
    writer.u16(0); // mod time
    writer.u16(0); // mod date
    writer.u32(record.crc);
    writer.u32(record.compressedSize);
    writer.u32(record.size);
    writer.u16(nameBytes.length);
    writer.u16(0); // extra length
    writer.bytes(nameBytes);
    writer.bytes(payload);
  }

  const centralOffset = writer.length;
  for (const record of central) {
    writer.u32(0x02014b50);
    writer.u16(20); // version made by
    writer.u16(20); // version needed
    writer.u16(0); // flags
    writer.u16(record.method);
    writer.u16(0); // mod time
    writer.u16(0); // mod date
    writer.u32(record.crc);
    writer.u32(record.compressedSize);
    writer.u32(record.size);
    writer.u16(record.name.length);
    writer.u16(0); // extra length
    writer.u16(0); // comment length
    writer.u16(0); // disk number
    writer.u16(0); // internal attrs
    writer.u32(0); // external attrs
    writer.u32(record.offset);
    writer.bytes(record.name);
  }
  const centralSize = writer.length - centralOffset;

  writer.u32(0x06054b50);
  writer.u16(0); // disk number
  writer.u16(0); // central directory disk
  writer.u16(central.length);
  writer.u16(central.length);
  writer.u32(centralSize);
  writer.u32(centralOffset);
  writer.u16(0); // comment length
  return writer.output();
}

// Payload factories

export function annotation(
  text: string,
  start: number,
  end: number,
  overrides: Partial<Annotation> = {},
): Annotation {
  return {
    term_id: "term:0004",
    issue_id: "issue:0003",
    surface: text.slice(start, end),
    char_start: start,
    char_end: end,
    ambiguous: false,
    via_compound: false,
    llm_verdict: "skipped",
    suggestion_note: "prefer a neutral description",
    suggested_terms: ["Indigenous peoples"],
    categories: ["Ethnicity"],
    ...overrides,
  };
}

export function annotatedDocument(
  text: string,
  annotations: Annotation[],
  overrides: Partial<AnnotatedDocument> = {},
): AnnotatedDocument {
  return {
    document_id: "doc",
    language: "en",
    text_sha256: "0".repeat(64),
    annotations,
    diagnostics: [],
    timing_ms: { preprocess: 0, match: 0, ner: 0, llm: 0 },
    ...overrides,
  };
}

export function vocabularyInfo(overrides: Partial<VocabularyInfo> = {}): VocabularyInfo {
  return {
    format_version: "1.0",
    total_terms: 12,
    total_issues: 9,
    per_language: { en: 5, de: 3, nl: 2, fr: 1, it: 1 },
    ambiguous_fraction: 0.25,
    languages: ["de", "en", "fr", "it", "nl"],
    ...overrides,
  };
}

export function jobInfo(state: JobState, overrides: Partial<JobInfo> = {}): JobInfo {
  const jobId = overrides.job_id ?? "testjob_0123456789abcdef";
  return {
    job_id: jobId,
    state,
    submitted_at: "2026-08-19T00:00:00Z",
    completed_at: state === "done" || state === "failed" ? "2026-08-19T00:00:05Z" : "",
    input_manifest: [
      { name: "a.txt", size: 29 },
      { name: "b.txt", size: 27 },
    ],
    skipped: [],
    config: { language: "en", ner: false, llm: false },
    error: "",
    result_url: state === "done" ? `/api/v1/jobs/${jobId}/result` : "",
    ...overrides,
  };
}

export function batchReport(overrides: Partial<BatchReport> = {}): BatchReport {
  return {
    documents: 2,
    annotations: 3,
    term_frequencies: { "term:0002": 1, "term:0004": 2 },
    category_counts: { Ethnicity: 2, Eurocentrism: 1 },
    total_characters: 56,
    wall_time_ms: 4.2,
    chars_per_second: 13333.3,
    failures: [],
    skipped: [],
    ...overrides,
  };
}
