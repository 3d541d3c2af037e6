/** UI state and transitions, kept free of DOM access so they test directly.
 *
 * Results always belong to the most recent (query, band) request: one request
 * is in flight at a time and responses carry a sequence ticket, so a response
 * that was superseded while pending is discarded. A failed request keeps the
 * previous results and flags them stale instead of clearing them.
 */

import type { Api, Band, Loe, SearchHit } from "./types.js";

export interface UiState {
  query: string;
  band: Band;
  results: SearchHit[];
  /** The (query, band) pair the current results answer, if any. */
  resultsFor: { query: string; band: Band } | null;
  error: string | null;
  /** True when results are shown but no longer match the requested state. */
  stale: boolean;
  searching: boolean;
}

export function initialState(): UiState {
  return {
    query: "",
    band: "all",
    results: [],
    resultsFor: null,
    error: null,
    stale: false,
    searching: false,
  };
}

export interface ExplanationPanel {
  docId: string;
  band: Loe;
  terms: [string, number][];
  seed: number | null;
  error: string | null;
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

export class SearchController {
  state: UiState = initialState();
  private seq = 0;

  constructor(
    private readonly api: Api,
    private readonly k: number = 10,
    private readonly onChange: (state: UiState) => void = () => {},
  ) {}

  private update(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  /** Submit the query box; an empty query is inline validation, no request. */
  async submit(query: string): Promise<void> {
    this.update({ query });
    if (!query.trim()) {
      this.update({ error: "enter a query" });
      return;
    }
    await this.request(query.trim(), this.state.band);
  }

  /** Switch the evidence filter; the query is preserved and re-run. */
  async setBand(band: Band): Promise<void> {
    this.update({ band });
    const query = this.state.query.trim();
    if (!query) {
      return;
    }
    await this.request(query, band);
  }

  private async request(query: string, band: Band): Promise<void> {
    const ticket = ++this.seq;
    this.update({ searching: true });
    try {
      const results = await this.api.search(query, band, this.k);
      if (ticket !== this.seq) {
        return; // a newer request owns the state now
      }
      this.update({
        results,
        resultsFor: { query, band },
        error: null,
        stale: false,
        searching: false,
      });
    } catch (err) {
      if (ticket !== this.seq) {
        return;
      }
      this.update({
        error: describe(err),
        stale: this.state.results.length > 0,
        searching: false,
      });
    }
  }
}

/** Fetch the term panel for one result row; failures stay inside the panel. */
export async function loadExplanation(
  api: Api,
  hit: SearchHit,
  seed?: number,
): Promise<ExplanationPanel> {
  try {
    const response = await api.explain(
      { title: hit.title ?? "", abstract: hit.snippet ?? "" },
      seed,
    );
    return {
      docId: hit.doc_id,
      band: hit.loe,
      terms: response.terms[hit.loe] ?? [],
      seed: response.seed,
      error: null,
    };
  } catch (err) {
    return {
      docId: hit.doc_id,
      band: hit.loe,
      terms: [],
      seed: seed ?? null,
      error: describe(err),
    };
  }
}
