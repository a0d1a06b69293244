/** Search-screen state and view models.
 *
 * The UI computes nothing on domain data: facet counts and result fields are
 * passed through verbatim from the API payload; this module only reshapes
 * them for rendering and manages the multi-select filter state.
 */

import { FACETS, type Facet, type FacetCounts, type SearchPayload } from "./types.js";

export interface QueryState {
  text: string;
  filters: Record<Facet, Set<string>>;
  dateFrom: string;
  dateTo: string;
  page: number;
  pageSize: number;
  sort: "relevance" | "date";
}

export function emptyQuery(pageSize = 20): QueryState {
  return {
    text: "",
    filters: { topic: new Set(), variant: new Set(), vaccine: new Set(), drug: new Set(), journal: new Set() },
    dateFrom: "",
    dateTo: "",
    page: 1,
    pageSize,
    sort: "date",
  };
}

export function buildSearchParams(state: QueryState): URLSearchParams {
  const params = new URLSearchParams();
  if (state.text) params.set("q", state.text);
  for (const facet of FACETS) {
    for (const value of [...state.filters[facet]].sort()) {
      params.append(facet, value);
    }
  }
  if (state.dateFrom) params.set("from", state.dateFrom);
  if (state.dateTo) params.set("to", state.dateTo);
  params.set("page", String(state.page));
  params.set("size", String(state.pageSize));
  params.set("sort", state.sort);
  return params;
}

export function toggleFacetValue(state: QueryState, facet: Facet, value: string): QueryState {
  const next = new Set(state.filters[facet]);
  if (next.has(value)) {
    next.delete(value);
  } else {
    next.add(value);
  }
  return { ...state, page: 1, filters: { ...state.filters, [facet]: next } };
}

export function clearFilters(state: QueryState): QueryState {
  return {
    ...emptyQuery(state.pageSize),
    text: "",
    sort: "date",
  };
}

export interface FacetEntryView {
  value: string;
  count: number;
  selected: boolean;
}

export interface FacetGroupView {
  facet: Facet;
  entries: FacetEntryView[];
}

/** Sidebar groups; counts are the payload's facet_counts verbatim. */
export function facetSidebar(counts: FacetCounts, state: QueryState): FacetGroupView[] {
  return FACETS.map((facet) => ({
    facet,
    entries: Object.entries(counts[facet] ?? {})
      .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]))
      .map(([value, count]) => ({
        value,
        count,
        selected: state.filters[facet].has(value),
      })),
  }));
}

export interface ResultRowView {
  pmid: number;
  title: string;
  journal: string;
  pubDate: string;
  topics: string[];
  provisionalLongCovid: boolean;
}

/** Result rows; every field is a pass-through of one API field. */
export function resultRows(payload: SearchPayload): ResultRowView[] {
  return payload.hits.map((hit) => ({
    pmid: hit.pmid,
    title: hit.title,
    journal: hit.journal,
    pubDate: hit.pub_date,
    topics: hit.topics,
    provisionalLongCovid: hit.provisional_longcovid,
  }));
}

export function resultSummary(payload: SearchPayload): string {
  const first = (payload.page - 1) * payload.page_size + 1;
  const last = Math.min(payload.page * payload.page_size, payload.total);
  if (payload.total === 0) return "no matching articles";
  return `${first}–${last} of ${payload.total} articles`;
}
