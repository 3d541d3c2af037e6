/** Shared types mirroring the service's JSON API. */

/** The four evidence filters exposed by the search endpoint. */
export type Band = "all" | "loe3" | "loe2" | "loe1";

export const BANDS: readonly Band[] = ["all", "loe3", "loe2", "loe1"];

export const BAND_LABELS: Record<Band, string> = {
  all: "All evidence",
  loe3: "LoE 3 and up",
  loe2: "LoE 2 and up",
  loe1: "LoE 1 only",
};

/** The seven Level-of-Evidence bands, strongest first. */
export type Loe = "1a" | "1b" | "2a" | "2b" | "3a" | "3b" | "4";

export const LOE_BANDS: readonly Loe[] = ["1a", "1b", "2a", "2b", "3a", "3b", "4"];

export interface SearchHit {
  doc_id: string;
  title: string | null;
  snippet: string | null;
  score: number;
  loe: Loe;
}

export interface Classification {
  band: Loe;
  ordinal: number;
  confidences: Record<Loe, number>;
}

export interface ExplainResponse {
  seed: number;
  n_samples: number;
  terms: Record<Loe, [string, number][]>;
}

export interface DocText {
  title: string;
  abstract: string;
}

/** Client surface over the service; injectable so tests can fake it. */
export interface Api {
  search(query: string, band: Band, k: number): Promise<SearchHit[]>;
  classify(doc: DocText): Promise<Classification>;
  explain(doc: DocText, seed?: number): Promise<ExplainResponse>;
}
