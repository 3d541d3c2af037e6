/** Browser bootstrap: wires the controller and renderers to the page. */

import { createApi } from "./api.js";
import { loadExplanation, SearchController } from "./state.js";
import type { UiState } from "./state.js";
import {
  renderBandControl,
  renderBanner,
  renderExplanation,
  renderResults,
  renderSearchingNote,
} from "./render.js";
import type { Band, SearchHit } from "./types.js";

declare global {
  interface Window {
    LOESEARCH_BASE_URL?: string;
  }
}

function element(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function main(): void {
  const api = createApi(window.LOESEARCH_BASE_URL ?? "");
  const banner = element("banner");
  const status = element("status");
  const results = element("results");
  const bands = element("bands");
  const panel = element("panel");
  const form = element("search-form") as HTMLFormElement;
  const input = element("query") as HTMLInputElement;

  const render = (state: UiState): void => {
    banner.innerHTML = renderBanner(state);
    status.innerHTML = renderSearchingNote(state);
    results.innerHTML = renderResults(state);
    bands.innerHTML = renderBandControl(state.band);
  };

  const controller = new SearchController(api, 10, render);
  render(controller.state);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    panel.innerHTML = "";
    void controller.submit(input.value);
  });

  bands.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.name === "band") {
      panel.innerHTML = "";
      void controller.setBand(target.value as Band);
    }
  });

  results.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (!target.classList.contains("explain")) {
      return;
    }
    const docId = target.getAttribute("data-doc-id");
    const hit = controller.state.results.find((h: SearchHit) => h.doc_id === docId);
    if (hit === undefined) {
      return;
    }
    panel.innerHTML = `<p class="hint">explaining…</p>`;
    void loadExplanation(api, hit).then((explanation) => {
      panel.innerHTML = renderExplanation(explanation);
    });
  });
}

main();
