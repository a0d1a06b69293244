/** Payload shapes of the hub HTTP API, mirrored field for field. */

export const FACETS = ["topic", "variant", "vaccine", "drug", "journal"] as const;
export type Facet = (typeof FACETS)[number];

export type FacetCounts = Record<string, Record<string, number>>;

export interface SearchHit {
  pmid: number;
  score: number;
  title: string;
  journal: string;
  pub_date: string;
  topics: string[];
  variants: string[];
  vaccines: string[];
  drugs: string[];
  provisional_longcovid: boolean;
}

export interface SearchPayload {
  total: number;
  page: number;
  page_size: number;
  sort: string;
  hits: SearchHit[];
  facet_counts: FacetCounts;
}

export interface SynonymMention {
  field: "title" | "abstract";
  start: number;
  end: number;
  surface: string;
}

export interface QueueItem {
  pmid: number;
  title: string;
  abstract: string;
  journal: string;
  pub_date: string;
  p: number;
  priority: number;
  signals: Record<string, number>;
  synonym_mentions: SynonymMention[];
}

export interface QueuePayload {
  iteration: number;
  items: QueueItem[];
}

export interface DecisionResponse {
  pmid: number;
  status: string;
  decided_by: string;
  decided_at: string;
}

export interface OverviewPayload {
  publications: number;
  journals: number;
  topics: number;
}

export interface GrowthRow {
  period: string;
  new: number;
  cumulative: number;
}

export interface GrowthPayload {
  granularity: string;
  rows: GrowthRow[];
}

export interface CooccurrencePayload {
  topics: string[];
  matrix: number[][];
}

export interface TrendingItem {
  pmid: number;
  trend_score: number;
  title: string;
  journal: string;
  pub_date: string;
}

export interface TrendingPayload {
  items: TrendingItem[];
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
}
