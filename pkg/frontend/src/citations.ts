/**
 * Inline citation rendering: every [n] marker in assistant text becomes a
 * link to its reference entry; markers without a matching reference are
 * kept literal and flagged with a warning badge (the UI never invents a
 * target that the API payload did not supply).
 */

import type { Reference } from "./api.js";

const MARKER = /\[(\d+)\]/g;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderCitations(text: string, references: Reference[]): string {
  const byNumber = new Map(references.map((ref) => [ref.n, ref]));
  return escapeHtml(text).replace(MARKER, (whole, digits: string) => {
    const n = Number(digits);
    const ref = byNumber.get(n);
    if (!ref) {
      return (
        `<span class="cite-unknown" title="no matching reference">` +
        `${whole}<span class="badge">!</span></span>`
      );
    }
    return (
      `<a class="cite" href="#ref-${n}" title="${escapeHtml(ref.display)}">` +
      `[${n}]</a>`
    );
  });
}

export function renderReferenceList(references: Reference[]): string {
  if (references.length === 0) return "";
  const items = references
    .map(
      (ref) =>
        `<li id="ref-${ref.n}" data-doc-id="${escapeHtml(ref.doc_id)}">` +
        `${escapeHtml(ref.display)}</li>`,
    )
    .join("");
  return `<ol class="references">${items}</ol>`;
}
