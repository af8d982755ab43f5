/** Batch report rendering: term frequency table and category counts. */

import type { AnnotatedDocument, BatchReport } from "./types.js";

export interface FrequencyRow {
  termId: string;
  label: string;
  count: number;
}

/**
 * Frequency table rows from report.json, sorted by count descending
 * (term id breaks ties). Labels come from the surfaces map when one is
 * known; otherwise the raw term id is shown.
 */
export function frequencyRows(
  report: BatchReport,
  surfaces: Map<string, string>,
): FrequencyRow[] {
  return Object.entries(report.term_frequencies)
    .map(([termId, count]) => ({
      termId,
      label: surfaces.get(termId) ?? termId,
      count,
    }))
    .sort((a, b) => b.count - a.count || (a.termId < b.termId ? -1 : 1));
}

/** First surface seen per term id across the batch's annotated documents. */
export function surfacesByTerm(documents: AnnotatedDocument[]): Map<string, string> {
  const surfaces = new Map<string, string>();
  for (const doc of documents) {
    for (const annotation of doc.annotations) {
      if (!surfaces.has(annotation.term_id)) {
        surfaces.set(annotation.term_id, annotation.surface);
      }
    }
  }
  return surfaces;
}

export function renderReport(
  report: BatchReport,
  surfaces: Map<string, string>,
  doc: Document = document,
): HTMLElement {
  const root = doc.createElement("div");
  root.className = "job-report";

  const summary = doc.createElement("p");
  summary.className = "report-summary";
  summary.textContent =
    `${report.documents} documents, ${report.annotations} annotations, ` +
    `${report.skipped.length} skipped`;
  root.appendChild(summary);

  const table = doc.createElement("table");
  table.className = "freq-table";
  const head = doc.createElement("tr");
  for (const title of ["Term", "Count"]) {
    const cell = doc.createElement("th");
    cell.textContent = title;
    head.appendChild(cell);
  }
  table.appendChild(head);
  for (const row of frequencyRows(report, surfaces)) {
    const tr = doc.createElement("tr");
    tr.dataset.termId = row.termId;
    const labelCell = doc.createElement("td");
    labelCell.textContent = row.label;
    const countCell = doc.createElement("td");
    countCell.className = "freq-count";
    countCell.textContent = String(row.count);
    tr.appendChild(labelCell);
    tr.appendChild(countCell);
    table.appendChild(tr);
  }
  root.appendChild(table);

  if (Object.keys(report.category_counts).length > 0) {
    const categories = doc.createElement("p");
    categories.className = "report-categories";
    categories.textContent = Object.entries(report.category_counts)
      .sort((a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1))
      .map(([category, count]) => `${category}: ${count}`)
      .join(", ");
    root.appendChild(categories);
  }

  if (report.failures.length > 0) {
    const failures = doc.createElement("p");
    failures.className = "report-failures";
    failures.textContent = report.failures
      .map((item) => `${item.document_id}: ${item.error}`)
      .join("; ");
    root.appendChild(failures);
  }

  return root;
}
