/** Pure HTML-string renderers; no DOM access, so they run under plain node. */

import { BAND_LABELS, BANDS } from "./types.js";
import type { Band } from "./types.js";
import type { ExplanationPanel, UiState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function badge(loe: string): string {
  return `<span class="badge badge-${escapeHtml(loe)}">${escapeHtml(loe)}</span>`;
}

/** Ranked result list, one row per hit, in the order the service returned. */
export function renderResults(state: UiState): string {
  if (state.resultsFor === null) {
    return `<p class="hint">Search the corpus to see ranked abstracts.</p>`;
  }
  if (state.results.length === 0 && !state.stale) {
    return `<p class="hint">No documents matched.</p>`;
  }
  const rows = state.results
    .map((hit) => {
      const title = escapeHtml(hit.title ?? hit.doc_id);
      const snippet = hit.snippet ? `<p class="snippet">${escapeHtml(hit.snippet)}</p>` : "";
      return (
        `<li class="hit">` +
        `${badge(hit.loe)}<span class="title">${title}</span>` +
        `<span class="score">${hit.score.toFixed(3)}</span>` +
        `<button class="explain" data-doc-id="${escapeHtml(hit.doc_id)}">why?</button>` +
        snippet +
        `</li>`
      );
    })
    .join("");
  return `<ol class="hits">${rows}</ol>`;
}

/** Error banner; notes when the listed results predate the failure. */
export function renderBanner(state: UiState): string {
  if (state.error === null) {
    return "";
  }
  const note = state.stale ? ` <span class="stale">(showing previous results)</span>` : "";
  return `<div class="banner" role="alert">${escapeHtml(state.error)}${note}</div>`;
}

/** Radio group with exactly the four evidence filters. */
export function renderBandControl(band: Band): string {
  const options = BANDS.map((value) => {
    const checked = value === band ? " checked" : "";
    return (
      `<label><input type="radio" name="band" value="${value}"${checked}>` +
      `${escapeHtml(BAND_LABELS[value])}</label>`
    );
  }).join("");
  return `<fieldset class="bands">${options}</fieldset>`;
}

function formatWeight(weight: number): string {
  const fixed = weight.toFixed(4);
  return weight > 0 ? `+${fixed}` : fixed;
}

/** Term panel for one hit: which words pushed it toward its band. */
export function renderExplanation(panel: ExplanationPanel): string {
  const heading = `<h3>Why ${escapeHtml(panel.band)} for ${escapeHtml(panel.docId)}?</h3>`;
  if (panel.error !== null) {
    return `${heading}<div class="banner" role="alert">${escapeHtml(panel.error)}</div>`;
  }
  const tiny = 1e-9;
  if (panel.terms.every(([, weight]) => Math.abs(weight) < tiny)) {
    return `${heading}<p class="hint">no discriminative terms</p>`;
  }
  const rows = panel.terms
    .map(
      ([term, weight]) =>
        `<tr><td class="term">${escapeHtml(term)}</td>` +
        `<td class="weight">${formatWeight(weight)}</td></tr>`,
    )
    .join("");
  const seed = panel.seed === null ? "" : `<p class="seed">seed ${panel.seed}</p>`;
  return `${heading}<table class="terms">${rows}</table>${seed}`;
}

export function renderSearchingNote(state: UiState): string {
  return state.searching ? `<p class="hint searching">searching…</p>` : "";
}
