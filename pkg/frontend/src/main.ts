/** Browser entry point: wires the three screens to the API client. */

import { ApiError, HubApi } from "./api.js";
import {
  clearFilters,
  emptyQuery,
  facetSidebar,
  resultRows,
  resultSummary,
  toggleFacetValue,
  type QueryState,
} from "./search.js";
import { ReviewQueueController, highlightSegments } from "./review.js";
import {
  cooccurrenceHeatmap,
  growthBars,
  overviewCards,
  trendingList,
} from "./dashboard.js";
import {
  renderBanner,
  renderFacetSidebar,
  renderGrowthBars,
  renderHeatmap,
  renderOverview,
  renderQueueItem,
  renderResultRows,
  renderSegments,
  renderTrending,
} from "./render.js";
import { UiSession } from "./session.js";
import type { Facet } from "./types.js";

const API_BASE = (window as { HUB_API_BASE?: string }).HUB_API_BASE ?? "";
const api = new HubApi(API_BASE, (url, init) => fetch(url, init));
const session = new UiSession(window.localStorage);
let query: QueryState = emptyQuery();
let review: ReviewQueueController | null = null;

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
};

function banner(message: string, kind: "info" | "error" = "info"): void {
  el("banners").insertAdjacentHTML("beforeend", renderBanner(message, kind));
}

api.onSnapshot((id) => {
  if (session.observeSnapshot(id)) {
    banner("Data updated: a new snapshot was published.", "info");
  }
});

function showApiError(error: unknown): void {
  const message =
    error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
  banner(message, "error");
}

// --- search screen -----------------------------------------------------------

async function runSearch(): Promise<void> {
  try {
    const payload = await api.search(query);
    el("search-summary").textContent = resultSummary(payload);
    el("results").innerHTML = renderResultRows(resultRows(payload));
    el("facets").innerHTML = renderFacetSidebar(facetSidebar(payload.facet_counts, query));
  } catch (error) {
    showApiError(error);
  }
}

function wireSearch(): void {
  el("search-form").addEventListener("submit", (event) => {
    event.preventDefault();
    query = {
      ...query,
      text: (el("search-text") as HTMLInputElement).value,
      sort: (el("search-sort") as HTMLSelectElement).value as "relevance" | "date",
      page: 1,
    };
    void runSearch();
  });
  el("facets").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    if (input.dataset.facet) {
      query = toggleFacetValue(query, input.dataset.facet as Facet, input.dataset.value ?? "");
      void runSearch();
    }
  });
  el("facets").addEventListener("click", (event) => {
    if ((event.target as HTMLElement).id === "clear-filters") {
      query = clearFilters(query);
      (el("search-text") as HTMLInputElement).value = "";
      void runSearch();
    }
  });
  el("results").addEventListener("click", async (event) => {
    const button = event.target as HTMLElement;
    const pmid = Number(button.dataset.pmid);
    if (button.classList.contains("cite") && pmid) {
      const response = await fetch(api.citeUrl(pmid, (button.dataset.style as "text" | "ris") ?? "text"));
      banner(await response.text(), "info");
    } else if (button.classList.contains("share") && pmid) {
      await navigator.clipboard.writeText(`${location.origin}${api.docUrl(pmid)}`);
      banner(`Link for PMID ${pmid} copied.`, "info");
    }
  });
}

// --- review screen -----------------------------------------------------------

function renderQueue(): void {
  if (!review) return;
  const item = review.next();
  if (!item) {
    el("queue").innerHTML = '<p class="empty">Queue is empty.</p>';
    return;
  }
  const title = renderSegments(highlightSegments(item.title, item.synonym_mentions, "title"));
  const abstract = renderSegments(
    highlightSegments(item.abstract, item.synonym_mentions, "abstract"),
  );
  el("queue").innerHTML = renderQueueItem(item, title, abstract);
  el("review-progress").textContent =
    `${review.myDecisions} decisions this session; ${review.items.length} in queue`;
}

function wireReview(): void {
  el("curator-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    session.curator = (el("curator-id") as HTMLInputElement).value.trim();
    if (!session.curator) {
      banner("Enter a curator id to start reviewing.", "error");
      return;
    }
    review = new ReviewQueueController(api, session.curator);
    try {
      await review.load(25);
      renderQueue();
    } catch (error) {
      showApiError(error);
    }
  });
  el("queue").addEventListener("click", async (event) => {
    const button = event.target as HTMLElement;
    const pmid = Number(button.dataset.pmid);
    if (!review || !pmid) return;
    const label = button.classList.contains("accept")
      ? "accept"
      : button.classList.contains("reject")
        ? "reject"
        : null;
    if (!label) return;
    const result = await review.decide(pmid, label);
    if (result === "conflict") {
      banner(`PMID ${pmid} was decided elsewhere.`, "error");
    } else if (result === "error") {
      banner(`Decision failed: ${review.lastError}`, "error");
    }
    renderQueue();
  });
}

// --- dashboard ----------------------------------------------------------------

async function loadDashboard(): Promise<void> {
  const widgets: [string, () => Promise<string>][] = [
    ["overview", async () => renderOverview(overviewCards(await api.overview()))],
    ["growth", async () => renderGrowthBars(growthBars(await api.growth("month")))],
    ["cooccurrence", async () => renderHeatmap(cooccurrenceHeatmap(await api.cooccurrence()))],
    ["trending-widget", async () => renderTrending(trendingList(await api.trending()))],
  ];
  // One failing widget never blanks the page.
  await Promise.all(
    widgets.map(async ([id, build]) => {
      try {
        el(id).innerHTML = await build();
      } catch (error) {
        el(id).innerHTML = `<p class="widget-error">unavailable (${
          error instanceof ApiError ? error.code : "error"
        })</p>`;
      }
    }),
  );
}

// --- tabs and boot --------------------------------------------------------------

function showTab(name: string): void {
  for (const section of document.querySelectorAll<HTMLElement>(".screen")) {
    section.hidden = section.id !== `screen-${name}`;
  }
  for (const link of document.querySelectorAll<HTMLElement>("nav a")) {
    link.classList.toggle("active", link.dataset.tab === name);
  }
  if (name === "dashboard") void loadDashboard();
  if (name === "search") void runSearch();
}

function boot(): void {
  document.querySelectorAll<HTMLElement>("nav a").forEach((link) =>
    link.addEventListener("click", (event) => {
      event.preventDefault();
      showTab(link.dataset.tab ?? "search");
    }),
  );
  el("banners").addEventListener("click", (event) => {
    if ((event.target as HTMLElement).classList.contains("dismiss")) {
      (event.target as HTMLElement).parentElement?.remove();
    }
  });
  (el("curator-id") as HTMLInputElement).value = session.curator;
  wireSearch();
  wireReview();
  showTab("search");
}

boot();
