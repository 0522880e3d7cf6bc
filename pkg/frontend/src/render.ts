// Pure rendering: answer payload -> HTML string. No state, no fetch, no
// DOM reads, so every visual decision is unit-testable against recorded
// payloads. The fallback banner is derivable from the payload alone:
// it renders if and only if fallback_warning is set.

import type { ChatAnswer, RowsPage } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderCell(cell: string | number | boolean | null): string {
  if (cell === null) return "";
  if (typeof cell === "boolean") return cell ? "true" : "false";
  return escapeHtml(String(cell));
}

export function renderRowsTable(page: RowsPage): string {
  const head = page.columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = page.rows
    .map((row) => `<tr>${row.map((c) => `<td>${renderCell(c)}</td>`).join("")}</tr>`)
    .join("");
  const caption =
    page.rows.length < page.total_row_count
      ? `<caption>${page.offset + 1}-${page.offset + page.rows.length} of ${page.total_row_count} rows</caption>`
      : `<caption>${page.total_row_count} rows</caption>`;
  return `<table class="result">${caption}<thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export function renderChips(replies: string[]): string {
  if (replies.length === 0) return "";
  const chips = replies
    .map((r) => `<button class="chip" data-reply="${escapeHtml(r)}">${escapeHtml(r)}</button>`)
    .join("");
  return `<div class="chips">${chips}</div>`;
}

export function renderNotes(notes: string[]): string {
  if (notes.length === 0) return "";
  return `<div class="notes">${notes.map(escapeHtml).join(" · ")}</div>`;
}

export function fallbackBanner(answer: Pick<ChatAnswer, "fallback_warning">): string {
  return answer.fallback_warning
    ? `<div class="banner warning">approximate answer - translated to SQL by the fallback model</div>`
    : "";
}

export function renderAnswerHtml(answer: ChatAnswer): string {
  const parts: string[] = [];
  parts.push(fallbackBanner(answer));
  const textClass = answer.kind === "error" ? "text error-text" : "text";
  parts.push(`<div class="${textClass}">${escapeHtml(answer.text).replace(/\n/g, "<br>")}</div>`);
  if (answer.rows && answer.rows.columns.length > 0) {
    parts.push(renderRowsTable(answer.rows));
  }
  parts.push(renderNotes(answer.interpretation_notes));
  parts.push(renderChips(answer.suggested_replies));
  const rate =
    answer.kind === "error"
      ? ""
      : `<div class="rate" data-turn="${answer.turn_index}">` +
        `<button class="rate-up" title="good answer">&#128077;</button>` +
        `<button class="rate-down" title="bad answer">&#128078;</button></div>`;
  parts.push(rate);
  return `<div class="bubble bot kind-${answer.kind}">${parts.filter(Boolean).join("")}</div>`;
}

export function renderUserHtml(text: string): string {
  return `<div class="bubble user">${escapeHtml(text)}</div>`;
}

export function renderPendingHtml(text: string): string {
  return (
    `<div class="bubble user pending">${escapeHtml(text)}` +
    `<button class="retry">retry</button></div>`
  );
}
