/** Render annotation spans as nested <mark> elements over the source text. */

import type { Annotation } from "./types.js";

interface Span {
  index: number;
  start: number;
  end: number;
}

/**
 * Build a fragment where every annotation becomes a highlight.
 *
 * Overlapping spans nest with the longest span outermost. A span that only
 * partially overlaps an earlier one is emitted as several <mark> segments
 * sharing one data-annotation-index, so the concatenated text of all
 * segments with the same index always equals the annotation's surface.
 */
export function renderAnnotatedText(
  text: string,
  annotations: Annotation[],
  doc: Document = document,
): DocumentFragment {
  const spans: Span[] = [];
  annotations.forEach((annotation, index) => {
    const start = Math.max(0, Math.min(annotation.char_start, text.length));
    const end = Math.max(start, Math.min(annotation.char_end, text.length));
    if (end > start) {
      spans.push({ index, start, end });
    }
  });

  const boundarySet = new Set<number>([0, text.length]);
  for (const span of spans) {
    boundarySet.add(span.start);
    boundarySet.add(span.end);
  }
  const boundaries = Array.from(boundarySet).sort((a, b) => a - b);

  const fragment = doc.createDocumentFragment();
  const open: { span: Span; element: HTMLElement }[] = [];
  const container = (): Node => {
    const last = open[open.length - 1];
    return last ? last.element : fragment;
  };

  for (let i = 0; i + 1 < boundaries.length; i++) {
    const from = boundaries[i]!;
    const to = boundaries[i + 1]!;
    if (to <= from) {
      continue;
    }
    const covering = spans
      .filter((span) => span.start <= from && span.end >= to)
      .sort(
        (a, b) =>
          b.end - b.start - (a.end - a.start) || a.start - b.start || a.index - b.index,
      );

    // keep the still-covering prefix of open marks, close the rest
    let common = 0;
    while (
      common < open.length &&
      common < covering.length &&
      open[common]!.span.index === covering[common]!.index
    ) {
      common++;
    }
    open.length = common;

    for (let k = common; k < covering.length; k++) {
      const span = covering[k]!;
      const mark = doc.createElement("mark");
      mark.className = "hl";
      mark.dataset.annotationIndex = String(span.index);
      container().appendChild(mark);
      open.push({ span, element: mark });
    }

    container().appendChild(doc.createTextNode(text.slice(from, to)));
  }

  return fragment;
}

/**
 * Concatenated text of every segment rendered for one annotation index.
 * Nested marks sit inside the annotation's span, so their text counts too.
 */
export function highlightedText(root: ParentNode, index: number): string {
  const parts: string[] = [];
  root
    .querySelectorAll(`mark[data-annotation-index="${index}"]`)
    .forEach((mark) => {
      parts.push(mark.textContent ?? "");
    });
  return parts.join("");
}
