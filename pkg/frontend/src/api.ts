/** fetch-based client for the service; base URL is the only configuration. */

import type { Api, Band, Classification, DocText, ExplainResponse, SearchHit } from "./types.js";

async function readError(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    // fall through to the status line
  }
  return `service error (HTTP ${response.status})`;
}

async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  if (!response.ok) {
    throw new Error(await readError(response));
  }
  return (await response.json()) as T;
}

async function postJson<T>(url: string, payload: unknown): Promise<T> {
  const response = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
  if (!response.ok) {
    throw new Error(await readError(response));
  }
  return (await response.json()) as T;
}

export function createApi(baseUrl: string): Api {
  const base = baseUrl.replace(/\/+$/, "");
  return {
    search(query: string, band: Band, k: number): Promise<SearchHit[]> {
      const params = new URLSearchParams({ q: query, band, k: String(k) });
      return getJson(`${base}/search?${params}`);
    },
    classify(doc: DocText): Promise<Classification> {
      return postJson(`${base}/classify`, doc);
    },
    explain(doc: DocText, seed?: number): Promise<ExplainResponse> {
      const payload = seed === undefined ? { ...doc } : { ...doc, seed };
      return postJson(`${base}/explain`, payload);
    },
  };
}
